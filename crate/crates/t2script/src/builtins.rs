//! The built-in command set: language control, variables, arrays,
//! functions, events, timers, eval-type commands, and the auxiliary
//! output/utility commands (`textout`, `inc`, `whitelist`).
//!
//! Loop commands run on-demand so their conditions stay raw and can be
//! re-interpolated before every test. `if`, `repeat`, `while`, and
//! `foreach` also have inline forms, selected at compile time when no
//! block follows: the final extra parameter is one complete command text,
//! evaluated the way `mechanize` evaluates its parameter.

use crate::error::msg;
use crate::events;
use crate::value::Value;
use crate::vm::{
    Arity, BlockSpec, CallPayload, CommandCtx, CommandSpec, ExecOutcome, Interp, ValueArray,
};
use num_traits::ToPrimitive;
use std::path::Path;
use std::rc::Rc;

enum LoopStep {
    Continue,
    Break,
    Propagate(ExecOutcome),
}

fn loop_step(outcome: ExecOutcome) -> LoopStep {
    if outcome.ok || outcome.is_continue() {
        LoopStep::Continue
    } else if outcome.is_break() {
        LoopStep::Break
    } else {
        LoopStep::Propagate(outcome)
    }
}

fn cmd_null(_c: &mut CommandCtx) -> ExecOutcome {
    ExecOutcome::success()
}

fn cmd_break(_c: &mut CommandCtx) -> ExecOutcome {
    ExecOutcome::break_loop()
}

fn cmd_continue(_c: &mut CommandCtx) -> ExecOutcome {
    ExecOutcome::continue_loop()
}

fn cmd_if(c: &mut CommandCtx) -> ExecOutcome {
    let truthy = match c.interpolate(c.raw_param(0)) {
        Ok(v) => v.is_truthy(),
        Err(e) => return ExecOutcome::error(e),
    };
    if c.block_count() > 0 {
        if truthy {
            c.run_block(0)
        } else if c.block_count() == 2 {
            c.run_block(1)
        } else {
            ExecOutcome::success()
        }
    } else if truthy {
        c.run_command_text(c.raw_param(1))
    } else {
        ExecOutcome::success()
    }
}

fn cmd_while(c: &mut CommandCtx) -> ExecOutcome {
    let inline = c.block_count() == 0;
    let mut first_test = true;
    loop {
        let truthy = match c.interpolate(c.raw_param(0)) {
            Ok(v) => v.is_truthy(),
            Err(e) => return ExecOutcome::error(e),
        };
        if !truthy {
            // The else-block runs exactly once, when the very first test
            // of the condition is already false.
            if first_test && !inline && c.block_count() == 2 {
                return c.run_block(1);
            }
            return ExecOutcome::success();
        }
        first_test = false;
        let outcome = if inline {
            c.run_command_text(c.raw_param(1))
        } else {
            c.run_block(0)
        };
        match loop_step(outcome) {
            LoopStep::Continue => {}
            LoopStep::Break => return ExecOutcome::success(),
            LoopStep::Propagate(o) => return o,
        }
    }
}

fn cmd_for(c: &mut CommandCtx) -> ExecOutcome {
    let var = match c.interpolate(c.raw_param(0)) {
        Ok(v) => v.into_string(),
        Err(e) => return ExecOutcome::error(e),
    };
    let init = match c.interpolate(c.raw_param(1)) {
        Ok(v) => v,
        Err(e) => return ExecOutcome::error(e),
    };
    c.set(&var, init);
    loop {
        let truthy = match c.interpolate(c.raw_param(2)) {
            Ok(v) => v.is_truthy(),
            Err(e) => return ExecOutcome::error(e),
        };
        if !truthy {
            return ExecOutcome::success();
        }
        let body = c.run_block(0);
        // The every-block runs after each entered iteration, even when the
        // flow was altered with continue or break. Errors skip it.
        if (body.ok || body.is_continue() || body.is_break()) && c.block_count() == 2 {
            match loop_step(c.run_block(1)) {
                LoopStep::Continue => {}
                LoopStep::Break => return ExecOutcome::success(),
                LoopStep::Propagate(o) => return o,
            }
        }
        match loop_step(body) {
            LoopStep::Continue => {}
            LoopStep::Break => return ExecOutcome::success(),
            LoopStep::Propagate(o) => return o,
        }
    }
}

fn cmd_repeat(c: &mut CommandCtx) -> ExecOutcome {
    let count = match c.interpolate(c.raw_param(0)) {
        Ok(v) => v,
        Err(e) => return ExecOutcome::error(e),
    };
    let count = match count.as_int() {
        Some(n) => match n.to_u64() {
            Some(n) => n,
            None => return ExecOutcome::error(msg::math_domain("repeat", count.as_str())),
        },
        None => return ExecOutcome::error(msg::non_integer(count.as_str())),
    };
    let inline = c.block_count() == 0;
    for _ in 0..count {
        let outcome = if inline {
            c.run_command_text(c.raw_param(1))
        } else {
            c.run_block(0)
        };
        match loop_step(outcome) {
            LoopStep::Continue => {}
            LoopStep::Break => return ExecOutcome::success(),
            LoopStep::Propagate(o) => return o,
        }
    }
    ExecOutcome::success()
}

fn cmd_foreach(c: &mut CommandCtx) -> ExecOutcome {
    let var = match c.interpolate(c.raw_param(0)) {
        Ok(v) => v.into_string(),
        Err(e) => return ExecOutcome::error(e),
    };
    let keyword = match c.interpolate(c.raw_param(1)) {
        Ok(v) => v.into_string(),
        Err(e) => return ExecOutcome::error(e),
    };
    if keyword != "in" {
        return ExecOutcome::error(msg::malformed_foreach(&keyword));
    }
    let array_name = match c.interpolate(c.raw_param(2)) {
        Ok(v) => v.into_string(),
        Err(e) => return ExecOutcome::error(e),
    };
    let Some(items) = c
        .interp
        .scope
        .array(&array_name)
        .map(|a| a.iter().map(|(_, v)| v.clone()).collect::<Vec<Value>>())
    else {
        return ExecOutcome::error(msg::not_an_array(&array_name));
    };
    let inline = c.block_count() == 0;
    for item in items {
        c.set(&var, item);
        let outcome = if inline {
            c.run_command_text(c.raw_param(3))
        } else {
            c.run_block(0)
        };
        match loop_step(outcome) {
            LoopStep::Continue => {}
            LoopStep::Break => return ExecOutcome::success(),
            LoopStep::Propagate(o) => return o,
        }
    }
    ExecOutcome::success()
}

fn cmd_throw(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).clone();
    match c.get(name.as_str()) {
        Some(v) => ExecOutcome::error(v.into_string()),
        None => ExecOutcome::error(msg::unset_variable(name.as_str())),
    }
}

fn cmd_catch(c: &mut CommandCtx) -> ExecOutcome {
    let varname = c.params().first().map(|v| v.as_str().to_string());
    let outcome = c.run_block(0);
    if outcome.is_plain_error() {
        if let Some(name) = varname {
            let text = outcome.error.expect("plain error carries text");
            c.set(&name, Value::new(text));
        }
        ExecOutcome::success()
    } else {
        // Successful bodies leave the variable unset; special codes and
        // plain false pass through uncaught.
        outcome
    }
}

fn cmd_mechanize(c: &mut CommandCtx) -> ExecOutcome {
    c.eval_command_text(c.raw_param(0))
}

fn cmd_mlc(c: &mut CommandCtx) -> ExecOutcome {
    run_separated(c, "||", c.raw_param(0))
}

fn cmd_mlcext(c: &mut CommandCtx) -> ExecOutcome {
    let sep = match c.interpolate(c.raw_param(0)) {
        Ok(v) => v.into_string(),
        Err(e) => return ExecOutcome::error(e),
    };
    if sep.is_empty() {
        return ExecOutcome::error("mlcext: empty separator".to_string());
    }
    run_separated(c, &sep, c.raw_param(1))
}

fn run_separated(c: &mut CommandCtx, sep: &str, text: &str) -> ExecOutcome {
    // Pieces are split from the raw text and evaluated lazily, each one
    // interpolated at its own turn. A piece whose interpolation produces
    // several commands (a separator carried inside a value) runs as a
    // generated sequence through minimal compilation.
    for piece in text.split(sep) {
        if piece.trim().is_empty() {
            continue;
        }
        let interpolated = match c.interpolate(piece) {
            Ok(v) => v,
            Err(e) => return ExecOutcome::error(e),
        };
        if interpolated.as_str().trim().is_empty() {
            continue;
        }
        let outcome = {
            let context = c.context();
            c.interp.run_minimal_source(interpolated.as_str(), "<mlc>", context)
        };
        if !outcome.ok {
            return outcome;
        }
    }
    ExecOutcome::success()
}

fn cmd_expr(_c: &mut CommandCtx) -> ExecOutcome {
    // The parameter was interpolated by the automatic mode; the value is
    // discarded and only the expression's side effects remain.
    ExecOutcome::success()
}

fn cmd_setvar(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).clone();
    let value = c.param(1).clone();
    c.set(name.as_str(), value);
    ExecOutcome::success()
}

fn cmd_delvar(c: &mut CommandCtx) -> ExecOutcome {
    let names: Vec<String> = c.params().iter().map(|v| v.as_str().to_string()).collect();
    for name in names {
        c.interp.scope.remove(&name);
    }
    ExecOutcome::success()
}

fn cmd_isset(c: &mut CommandCtx) -> ExecOutcome {
    let result = Value::from_bool(c.exists(c.param(0).as_str()));
    let out = c.param(1).clone();
    c.set(out.as_str(), result);
    ExecOutcome::success()
}

fn cmd_isnumeric(c: &mut CommandCtx) -> ExecOutcome {
    let numeric = c
        .get(c.param(0).as_str())
        .map(|v| v.as_int().is_some() || v.as_float().is_some())
        .unwrap_or(false);
    let out = c.param(1).clone();
    c.set(out.as_str(), Value::from_bool(numeric));
    ExecOutcome::success()
}

fn cmd_setarray(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).clone();
    let index = c.param(1).clone();
    let value = c.param(2).clone();
    c.interp.scope.set_element(name.as_str(), index.as_str(), value);
    ExecOutcome::success()
}

fn cmd_delarray(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).clone();
    c.interp.scope.remove_array(name.as_str());
    ExecOutcome::success()
}

fn cmd_arraysize(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).clone();
    let Some(len) = c.interp.scope.array(name.as_str()).map(ValueArray::len) else {
        return ExecOutcome::error(msg::not_an_array(name.as_str()));
    };
    let out = c.param(1).clone();
    c.set(out.as_str(), Value::new(len.to_string()));
    ExecOutcome::success()
}

fn cmd_isarray(c: &mut CommandCtx) -> ExecOutcome {
    let result = Value::from_bool(c.interp.scope.array(c.param(0).as_str()).is_some());
    let out = c.param(1).clone();
    c.set(out.as_str(), result);
    ExecOutcome::success()
}

fn cmd_function(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).as_str().to_string();
    let arg_string = c.params()[1..]
        .iter()
        .map(Value::as_str)
        .collect::<Vec<_>>()
        .join(" ");
    match c.interp.call_function(&name, CallPayload::Words(arg_string)) {
        Ok(result) => {
            // Command-mode calls display a nonempty result, matching the
            // console behavior the call syntax comes from.
            if !result.is_empty() {
                let line = format!("{result}\n");
                c.write_output(&line);
            }
            ExecOutcome::success()
        }
        Err(e) => ExecOutcome::error(e.0),
    }
}

fn cmd_functiondel(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).as_str().to_string();
    if c.interp.functions.remove(&name).is_none() {
        return ExecOutcome::error(msg::unknown_function(&name));
    }
    for entry in c.interp.events.values_mut() {
        entry.registrants.retain(|r| r != &name);
    }
    c.interp.pending_puts.remove(&name);
    ExecOutcome::success()
}

fn cmd_args(c: &mut CommandCtx) -> ExecOutcome {
    let names: Vec<String> = c
        .params()
        .iter()
        .map(|v| v.as_str().strip_prefix('@').unwrap_or(v.as_str()).to_string())
        .collect();
    let frame = c.interp.scope.frame_mut();
    if frame.args_used {
        return ExecOutcome::error(msg::args_reused());
    }
    frame.args_used = true;
    let supplied = frame.locals.arrays.get("arg").map(ValueArray::len).unwrap_or(0);
    if supplied < names.len() {
        return ExecOutcome::error(msg::too_few_arguments(names.len(), supplied));
    }
    for (i, name) in names.iter().enumerate() {
        let value = frame
            .locals
            .arrays
            .get("arg")
            .and_then(|a| a.get(&i.to_string()))
            .cloned()
            .expect("arity checked above");
        frame.locals.scalars.insert(name.clone(), value);
    }
    ExecOutcome::success()
}

fn cmd_return(c: &mut CommandCtx) -> ExecOutcome {
    let value = c.param(0).clone();
    c.interp.scope.frame_mut().result = value;
    ExecOutcome::func_return()
}

fn cmd_result(c: &mut CommandCtx) -> ExecOutcome {
    let value = c.param(0).clone();
    c.interp.scope.frame_mut().result = value;
    ExecOutcome::success()
}

fn cmd_put(c: &mut CommandCtx) -> ExecOutcome {
    let function = c.param(0).as_str().to_string();
    let name = c.param(1).as_str();
    let name = name.strip_prefix('@').unwrap_or(name).to_string();
    let value = c.param(2).clone();
    c.interp.pending_puts.entry(function).or_default().push((name, value));
    ExecOutcome::success()
}

fn cmd_trigger(c: &mut CommandCtx) -> ExecOutcome {
    let results_var = c.params().first().map(|v| v.as_str().to_string());
    let Some(event_name) = c.interp.scope.frame().event.clone() else {
        return ExecOutcome::error(msg::trigger_outside_event());
    };
    let locals = c.interp.scope.frame().locals.clone();
    match events::dispatch(c.interp, &event_name, &locals) {
        Ok(results) => {
            if let Some(var) = results_var {
                // With zero registered functions the array stays unset.
                if !results.is_empty() {
                    let mut array = ValueArray::default();
                    for (i, v) in results.into_iter().enumerate() {
                        array.set(&i.to_string(), v);
                    }
                    let bare = var.strip_prefix('@').unwrap_or(&var).to_string();
                    c.interp.scope.frame_mut().locals.arrays.insert(bare, array);
                }
            }
            ExecOutcome::success()
        }
        Err(outcome) => outcome,
    }
}

fn cmd_settimer(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).as_str().to_string();
    let interval = c.param(1).clone();
    let Some(interval_ms) = interval.as_int().and_then(|i| i.to_u64()).filter(|&i| i > 0) else {
        return ExecOutcome::error(msg::timer_interval(interval.as_str()));
    };
    let iterations = c.param(2).clone();
    let Some(iterations) = iterations.as_int().and_then(|i| i.to_u64()) else {
        return ExecOutcome::error(msg::non_integer(iterations.as_str()));
    };
    let body = Rc::new(c.inv.blocks[0].clone());
    let locals = c.interp.scope.frame().locals.clone();
    let module = c.interp.scope.frame().module.clone();
    match c.interp.create_timer(&name, interval_ms, iterations, body, locals, module) {
        Ok(_) => ExecOutcome::success(),
        Err(e) => ExecOutcome::error(e),
    }
}

fn cmd_canceltimer(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).as_str().to_string();
    if c.interp.cancel_timer(&name) {
        ExecOutcome::success()
    } else {
        ExecOutcome::error(msg::unknown_timer(&name))
    }
}

fn cmd_listtimers(c: &mut CommandCtx) -> ExecOutcome {
    let out = c.param(0).as_str().to_string();
    let mut array = ValueArray::default();
    for (i, info) in c.interp.live_timers().into_iter().enumerate() {
        array.set(
            &i.to_string(),
            Value::new(format!("{} {} {}", info.name, info.interval_ms, info.remaining)),
        );
    }
    c.interp.scope.set_array(&out, array);
    ExecOutcome::success()
}

fn cmd_load(c: &mut CommandCtx) -> ExecOutcome {
    let module = c.param(0).as_str().to_string();
    let path = c.param(1).as_str().to_string();
    match c.interp.load_module_file(&module, &path) {
        Ok(_) => ExecOutcome::success(),
        Err(e) => ExecOutcome::error(e.to_string()),
    }
}

fn module_name_of(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

fn cmd_runfile(c: &mut CommandCtx) -> ExecOutcome {
    let path = c.param(0).as_str().to_string();
    match c.interp.load_module_file(&module_name_of(&path), &path) {
        Ok(_) => ExecOutcome::success(),
        Err(e) => ExecOutcome::error(e.to_string()),
    }
}

fn cmd_runscript(c: &mut CommandCtx) -> ExecOutcome {
    let path = c.param(0).as_str().to_string();
    let args = c.param(1).as_str().to_string();
    c.interp.run_script_file(&module_name_of(&path), &path, &args)
}

fn cmd_textout(c: &mut CommandCtx) -> ExecOutcome {
    let line = format!("{}\n", c.param(0));
    c.write_output(&line);
    ExecOutcome::success()
}

fn cmd_inc(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).as_str().to_string();
    let Some(value) = c.get(&name) else {
        return ExecOutcome::error(msg::unset_variable(&name));
    };
    let Some(i) = value.as_int() else {
        return ExecOutcome::error(msg::non_integer(value.as_str()));
    };
    c.set(&name, Value::from(i + 1));
    ExecOutcome::success()
}

fn cmd_whitelist(c: &mut CommandCtx) -> ExecOutcome {
    let name = c.param(0).as_str().to_string();
    let Some(value) = c.get(&name) else {
        return ExecOutcome::error(msg::unset_variable(&name));
    };
    let allowed = c.params()[1..].iter().any(|w| w == &value);
    if allowed {
        ExecOutcome::success()
    } else {
        // No listed word matched: return from the enclosing function,
        // leaving its result untouched.
        ExecOutcome::func_return()
    }
}

/// Registers the full built-in command set.
pub(crate) fn install(interp: &mut Interp) {
    use Arity::{AtLeast, Fixed, Range};

    let two_optional = |kw: &str| BlockSpec::Two { keyword: kw.to_string(), second_required: false };

    let table: Vec<(CommandSpec, crate::vm::BuiltinFn)> = vec![
        // control
        (
            CommandSpec::new("if", Fixed(1)).blocks(two_optional("else")).inline_form().on_demand(),
            cmd_if,
        ),
        (
            CommandSpec::new("repeat", Fixed(1)).blocks(BlockSpec::One).inline_form().on_demand(),
            cmd_repeat,
        ),
        (
            CommandSpec::new("while", Fixed(1))
                .blocks(two_optional("else"))
                .inline_form()
                .on_demand(),
            cmd_while,
        ),
        (
            CommandSpec::new("foreach", Fixed(3))
                .blocks(BlockSpec::One)
                .inline_form()
                .on_demand(),
            cmd_foreach,
        ),
        (
            CommandSpec::new("for", Fixed(3)).blocks(two_optional("every")).on_demand(),
            cmd_for,
        ),
        (CommandSpec::new("break", Fixed(0)), cmd_break),
        (CommandSpec::new("continue", Fixed(0)), cmd_continue),
        (CommandSpec::new("throw", Fixed(1)), cmd_throw),
        (CommandSpec::new("catch", Range(0, 1)).blocks(BlockSpec::One), cmd_catch),
        // eval-type
        (CommandSpec::new("mlc", Fixed(1)).on_demand(), cmd_mlc),
        (CommandSpec::new("mlcext", Fixed(2)).on_demand(), cmd_mlcext),
        (CommandSpec::new("mechanize", Fixed(1)).on_demand(), cmd_mechanize),
        (CommandSpec::new("expr", Fixed(1)), cmd_expr),
        // modules and processes
        (CommandSpec::new("load", Fixed(2)), cmd_load),
        (CommandSpec::new("runscript", Fixed(2)), cmd_runscript),
        (CommandSpec::new("runfile", Fixed(1)), cmd_runfile),
        (CommandSpec::new("envrs", Fixed(3)), crate::embed::cmd_envrs),
        // timers
        (CommandSpec::new("settimer", Fixed(3)).blocks(BlockSpec::One), cmd_settimer),
        (CommandSpec::new("canceltimer", Fixed(1)), cmd_canceltimer),
        (CommandSpec::new("listtimers", Fixed(1)), cmd_listtimers),
        // functions and events
        (CommandSpec::new("function", AtLeast(1)).words_only(), cmd_function),
        (CommandSpec::new("put", Fixed(3)), cmd_put),
        (CommandSpec::new("functiondel", Fixed(1)), cmd_functiondel),
        (CommandSpec::new("return", Fixed(1)), cmd_return),
        (CommandSpec::new("result", Fixed(1)), cmd_result),
        (CommandSpec::new("args", AtLeast(0)).words_only(), cmd_args),
        (CommandSpec::new("trigger", Range(0, 1)), cmd_trigger),
        // variables and arrays
        (CommandSpec::new("null", Fixed(0)), cmd_null),
        (CommandSpec::new("setvar", Fixed(2)), cmd_setvar),
        (CommandSpec::new("delvar", AtLeast(1)).words_only(), cmd_delvar),
        (CommandSpec::new("isset", Fixed(2)), cmd_isset),
        (CommandSpec::new("isnumeric", Fixed(2)), cmd_isnumeric),
        (CommandSpec::new("setarray", Fixed(3)), cmd_setarray),
        (CommandSpec::new("delarray", Fixed(1)), cmd_delarray),
        (CommandSpec::new("arraysize", Fixed(2)), cmd_arraysize),
        (CommandSpec::new("isarray", Fixed(2)), cmd_isarray),
        // auxiliary
        (CommandSpec::new("textout", Fixed(1)), cmd_textout),
        (CommandSpec::new("inc", Fixed(1)), cmd_inc),
        (CommandSpec::new("whitelist", AtLeast(2)).words_only(), cmd_whitelist),
    ];

    for (spec, handler) in table {
        interp.register_builtin(spec, handler);
    }
}
