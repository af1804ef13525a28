//! End-to-end language behavior: expressions, built-in commands, functions,
//! events, exceptions, and timers, driven through the public interpreter
//! API the way an embedding application would.

use t2script::{EventKind, ExecOutcome, Interp, SubmitResult, Value, VirtualClock};

fn interp() -> Interp {
    Interp::new()
}

fn run(i: &mut Interp, cmd: &str) -> SubmitResult {
    i.submit(cmd)
}

fn run_ok(i: &mut Interp, cmd: &str) -> String {
    let r = i.submit(cmd);
    assert!(r.outcome.ok, "command {cmd:?} failed: {:?}", r.outcome.error);
    r.output
}

fn load(i: &mut Interp, module: &str, src: &str) {
    i.load_module_source(module, src, &format!("<{module}>"))
        .unwrap_or_else(|e| panic!("load {module} failed: {e}"));
}

fn eval(i: &mut Interp, expr_text: &str) -> Result<String, String> {
    let r = i.submit(&format!("setvar __eval {expr_text}"));
    if r.outcome.ok {
        Ok(i.get_var("__eval").unwrap().into_string())
    } else {
        Err(r.outcome.error.unwrap_or_default())
    }
}

// ----------------------------------------------------------------------
// Variables, interpolation, constants

#[test]
fn plain_text_passes_through() {
    let mut i = interp();
    assert_eq!(run_ok(&mut i, "textout no dollars here"), "no dollars here\n");
}

#[test]
fn global_and_local_variables() {
    let mut i = interp();
    run_ok(&mut i, "setvar account_number 900123");
    assert_eq!(run_ok(&mut i, "textout $account_number"), "900123\n");
    // locals live in the root frame between submissions
    run_ok(&mut i, "setvar @name Ann");
    assert_eq!(run_ok(&mut i, "textout $@name"), "Ann\n");
}

#[test]
fn variables_are_case_sensitive() {
    let mut i = interp();
    run_ok(&mut i, "setvar x lower");
    run_ok(&mut i, "setvar X upper");
    assert_eq!(run_ok(&mut i, "textout $x"), "lower\n");
    assert_eq!(run_ok(&mut i, "textout $X"), "upper\n");
}

#[test]
fn command_names_are_case_insensitive() {
    let mut i = interp();
    run_ok(&mut i, "SeTvAr y 1");
    assert_eq!(run_ok(&mut i, "TEXTOUT $y"), "1\n");
}

#[test]
fn unset_variable_read_is_an_error() {
    let mut i = interp();
    let r = run(&mut i, "textout $ghost");
    assert_eq!(r.outcome.error.as_deref(), Some("unset variable: ghost"));
}

#[test]
fn nested_array_index_evaluation() {
    // Independent hand evaluation: @angle[5] = 90, then sinus[90] = 1.
    let mut i = interp();
    run_ok(&mut i, "setarray sinus 90 1");
    run_ok(&mut i, "setarray @angle 5 90");
    assert_eq!(run_ok(&mut i, "textout $sinus[$@angle[5]]"), "1\n");
}

#[test]
fn associative_arrays() {
    let mut i = interp();
    run_ok(&mut i, "setarray birthday Piotr 1980");
    assert_eq!(run_ok(&mut i, "textout $birthday[Piotr]"), "1980\n");
}

#[test]
fn terminator_splices_with_nothing_between() {
    let mut i = interp();
    run_ok(&mut i, "setvar prog setvar name");
    assert_eq!(run_ok(&mut i, "textout $prog. John"), "setvar name John\n");
    // without a terminator the boundary space is user data
    assert_eq!(run_ok(&mut i, "textout $prog John"), "setvar name John\n");
    // terminator glues digits directly
    run_ok(&mut i, "setvar Pi 3.1415926535");
    assert_eq!(run_ok(&mut i, "textout $Pi.8979323846"), "3.14159265358979323846\n");
}

#[test]
fn builtin_constants() {
    let mut i = interp();
    assert_eq!(eval(&mut i, "$_true").unwrap(), "1");
    assert_eq!(eval(&mut i, "$_false").unwrap(), "0");
    assert_eq!(eval(&mut i, "x$_empty.y").unwrap(), "xy");
    assert_eq!(eval(&mut i, "$_\\s").unwrap(), " ");
    assert_eq!(eval(&mut i, "$_\\u(65)").unwrap(), "A");
    assert_eq!(eval(&mut i, "$_lcurlparen").unwrap(), "{");
    assert_eq!(eval(&mut i, "$_rcurlparen").unwrap(), "}");
    assert_eq!(eval(&mut i, "$_ltabparen.$_rtabparen").unwrap(), "[]");
    assert_eq!(eval(&mut i, "$_lparen.$_rparen").unwrap(), "()");
    assert_eq!(eval(&mut i, "$_Pi").unwrap(), "3.14159265358979");
    assert_eq!(eval(&mut i, "$_\\$").unwrap(), "$");
    assert_eq!(eval(&mut i, "a$_\\t.b").unwrap(), "a\tb");
    assert_eq!(eval(&mut i, "a$_\\n.b").unwrap(), "a\nb");
    assert!(eval(&mut i, "$_nosuch").unwrap_err().contains("unknown constant"));
}

#[test]
fn owner_and_parent_constants() {
    let mut i = interp();
    // no parent: parent-type constants show the current command
    assert_eq!(run_ok(&mut i, "textout $_owner_name"), "textout\n");
    assert_eq!(run_ok(&mut i, "textout $_parent_name"), "textout\n");
    load(
        &mut i,
        "own",
        "#function show private()\n\ttextout $_parent_name;\n#end show\n",
    );
    // the calling command is the parent of the body's textout
    assert_eq!(run_ok(&mut i, "function show"), "function\n");
}

#[test]
fn constants_cannot_be_rebound_from_scripts() {
    let mut i = interp();
    // a variable named like a constant lives in a different namespace
    run_ok(&mut i, "setvar _true 0");
    assert_eq!(eval(&mut i, "$_true").unwrap(), "1");
    assert_eq!(run_ok(&mut i, "textout $_true"), "1\n");
}

// ----------------------------------------------------------------------
// Complex expressions and operators

#[test]
fn complex_expression_examples() {
    let mut i = interp();
    assert_eq!(run_ok(&mut i, "textout $?[+ 2 (- 7 8) 100]"), "101\n");
    run_ok(&mut i, "setvar @name Piotr");
    assert_eq!(
        eval(&mut i, "$?[or (eq $@name Piotr) (eq $@name John)]").unwrap(),
        "1"
    );
    run_ok(&mut i, "setvar @name Zoe");
    assert_eq!(
        eval(&mut i, "$?[or (eq $@name Piotr) (eq $@name John)]").unwrap(),
        "0"
    );
}

#[test]
fn operator_spot_checks() {
    let mut i = interp();
    run_ok(&mut i, "setvar words one two three");
    let cases: &[(&str, &str)] = &[
        ("$?[< 5 10]", "1"),
        ("$?[eq 5 5]", "1"),
        ("$?[tohex 255]", "ff"),
        ("$?[/ 7 2]", "3"),
        ("$?[% 7 3]", "1"),
        ("$?[** 2 10]", "1024"),
        ("$?[+. 0.1 0.2]", "0.3"),
        ("$?[sqrt 9]", "3"),
        ("$?[abs -4]", "4"),
        ("$?[min 3 -7 5]", "-7"),
        ("$?[max 3 -7 5]", "5"),
        ("$?[~ 5]", "-6"),
        ("$?[& 12 10]", "8"),
        ("$?[| 12 10]", "14"),
        ("$?[^ 12 10]", "6"),
        ("$?[<< 1 10]", "1024"),
        ("$?[>> -16 2]", "-4"),
        ("$?[round 2.5]", "3"),
        ("$?[round -2.5]", "-3"),
        ("$?[ceil 2.1]", "3"),
        ("$?[floor -2.1]", "-3"),
        ("$?[roundto 2 2.567]", "2.57"),
        ("$?[! 0]", "1"),
        ("$?[not 1]", "0"),
        ("$?[or 0 0 1]", "1"),
        ("$?[and 1 1 0]", "0"),
        ("$?[:== a A]", "1"),
        ("$?[== a A]", "0"),
        ("$?[:!= a A]", "0"),
        ("$?[ne a b]", "1"),
        ("$?[comp 3 10]", "-1"),
        ("$?[comp b a]", "1"),
        ("$?[comp x x]", "0"),
        ("$?[:+ ab cd]", "abcd"),
        ("$?[concat a (concat b c)]", "abc"),
        ("$?[empty? $_empty]", "1"),
        ("$?[len éléphant]", "8"),
        ("$?[num? 42]", "1"),
        ("$?[num? 4.2]", "0"),
        ("$?[float? 4.2]", "1"),
        ("$?[float? abc]", "0"),
        ("$?[substr elephant 2 3]", "eph"),
        ("$?[strpos ph elephant]", "3"),
        ("$?[strpos zz elephant]", "-1"),
        ("$?[strposic PH elephant]", "3"),
        ("$?[word 1 $words]", "two"),
        ("$?[char 0 abc]", "a"),
        ("$?[upcase ab]", "AB"),
        ("$?[downcase AB]", "ab"),
        ("$?[ln 1]", "0"),
        ("$?[logn 2 8]", "3"),
        ("$?[exp 0]", "1"),
        ("$?[=~ ^a+$_\\$ aaa]", "1"),
        ("$?[=~ ^a+$_\\$ aba]", "0"),
        ("$?[=~~ a+ xxaaayy]", "aaa"),
        ("$?[=~~ z+ xxaaayy]", ""),
    ];
    for (expr_text, expected) in cases {
        assert_eq!(
            eval(&mut i, expr_text).unwrap(),
            *expected,
            "mismatch for {expr_text}"
        );
    }
}

#[test]
fn operator_errors() {
    let mut i = interp();
    assert_eq!(eval(&mut i, "$?[/ 1 0]").unwrap_err(), "division by zero");
    assert_eq!(eval(&mut i, "$?[% 1 0]").unwrap_err(), "division by zero");
    assert!(eval(&mut i, "$?[+ 1 x]").unwrap_err().contains("not an integer"));
    assert!(eval(&mut i, "$?[+. 1 x]").unwrap_err().contains("not a number"));
    assert!(eval(&mut i, "$?[sqrt -1]").unwrap_err().contains("domain error"));
    run_ok(&mut i, "setvar words a b");
    assert!(eval(&mut i, "$?[word 9 $words]").unwrap_err().contains("index out of range"));
    assert!(eval(&mut i, "$?[char 5 ab]").unwrap_err().contains("index out of range"));
    assert!(eval(&mut i, "$?[substr ab 7 1]").unwrap_err().contains("index out of range"));
    assert!(eval(&mut i, "$?[=~ $_lparen x]").unwrap_err().contains("bad regular expression"));
    assert!(eval(&mut i, "$?[nosuchop 1]").unwrap_err().contains("unknown operator"));
    assert!(eval(&mut i, "$?[@@ a b]").unwrap_err().contains("reserved operator"));
    assert!(eval(&mut i, "$?[?? a b]").unwrap_err().contains("reserved operator"));
    assert!(eval(&mut i, "$?[+ 1 2").unwrap_err().contains("unbalanced index"));
}

#[test]
fn assignment_and_existence_operators() {
    let mut i = interp();
    assert_eq!(eval(&mut i, "$?[= target 42]").unwrap(), "42");
    assert_eq!(i.get_var("target").unwrap(), "42");
    assert_eq!(eval(&mut i, "$?[exists? target]").unwrap(), "1");
    assert_eq!(eval(&mut i, "$?[exists? missing]").unwrap(), "0");
    // local assignment through the modifier prefix
    assert_eq!(eval(&mut i, "$?[= @here 7]").unwrap(), "7");
    assert_eq!(i.get_var("@here").unwrap(), "7");
}

#[test]
fn command_execution_operator() {
    let mut i = interp();
    assert_eq!(eval(&mut i, "$?[!! (concat setvar $_\\s q $_\\s 7)]").unwrap(), "");
    assert_eq!(i.get_var("q").unwrap(), "7");
    let err_text = eval(&mut i, "$?[!! (concat inc $_\\s unsetvar)]").unwrap();
    assert_eq!(err_text, "unset variable: unsetvar");
}

#[test]
fn truthiness_rules() {
    assert!(!Value::from("0").is_truthy());
    assert!(Value::from("").is_truthy());
    assert!(Value::from("false").is_truthy());
    // empty result of an operator argument still counts as an argument
    let mut i = interp();
    run_ok(&mut i, "setvar empty $_empty");
    assert_eq!(eval(&mut i, "$?[! $empty]").unwrap(), "0");
}

#[test]
fn strict_evaluation_runs_each_argument_once() {
    let mut i = interp();
    load(
        &mut i,
        "strict",
        "#function bump operator()\n\tinc hits;\n\treturn $hits;\n#end bump\n",
    );
    run_ok(&mut i, "setvar hits 0");
    // both arguments evaluate exactly once, even though `or` already knows
    // the answer after the first
    assert_eq!(eval(&mut i, "$?[or (bump) (bump)]").unwrap(), "1");
    assert_eq!(i.get_var("hits").unwrap(), "2");
}

#[test]
fn user_functions_as_operators() {
    let mut i = interp();
    load(
        &mut i,
        "ops",
        "#function double operator()\n\treturn $?[* $@arg[0] 2];\n#end double\n",
    );
    assert_eq!(eval(&mut i, "$?[double 21]").unwrap(), "42");
}

// ----------------------------------------------------------------------
// Functions

#[test]
fn function_call_modes() {
    let mut i = interp();
    load(
        &mut i,
        "calls",
        "#function fnc private()\n\treturn $@arg[0];\n#end fnc\n",
    );
    // mode 1: index text split on spaces
    assert_eq!(run_ok(&mut i, "textout $=fnc[first second]"), "first\n");
    // mode 1 through the function command: result is displayed
    assert_eq!(run_ok(&mut i, "function fnc first second"), "first\n");
    // mode 2: operator-style call keeps one argument whole
    assert_eq!(run_ok(&mut i, "textout $?[fnc (concat first $_\\s second)]"), "first second\n");
    // calling a function that does not exist
    let r = run(&mut i, "textout $=missing[x]");
    assert_eq!(r.outcome.error.as_deref(), Some("unknown function: missing"));
}

#[test]
fn named_arguments_enforce_minimum() {
    let mut i = interp();
    load(
        &mut i,
        "named",
        "#function named private()\n\targs first last;\n\ttextout $@first $@last;\n#end named\n",
    );
    assert_eq!(run_ok(&mut i, "function named Ann Lee"), "Ann Lee\n");
    let r = run(&mut i, "function named Ann");
    assert_eq!(
        r.outcome.error.as_deref(),
        Some("too few arguments: expected 2, got 1")
    );
}

#[test]
fn args_may_be_used_once() {
    let mut i = interp();
    load(
        &mut i,
        "twice",
        "#function f private()\n\targs a;\n\targs b;\n#end f\n",
    );
    let r = run(&mut i, "function f x");
    assert!(r.outcome.error.unwrap().contains("args may be used only once"));
}

#[test]
fn result_and_return() {
    let mut i = interp();
    load(
        &mut i,
        "results",
        concat!(
            "#function keeps private()\n\tresult $_true;\n\tnull;\n#end keeps\n",
            "#function cuts private()\n\treturn early;\n\ttextout never;\n#end cuts\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "textout $=keeps[]"), "1\n");
    // return stops the body; the textout after it never runs
    assert_eq!(run_ok(&mut i, "textout $=cuts[]"), "early\n");
}

#[test]
fn default_function_result_is_empty() {
    let mut i = interp();
    load(&mut i, "void", "#function void private()\n\tnull;\n#end void\n");
    assert_eq!(eval(&mut i, "x$=void[].y").unwrap(), "xy");
    // the function command displays nothing for an empty result
    assert_eq!(run_ok(&mut i, "function void"), "");
}

#[test]
fn frame_locals_die_with_the_frame_globals_persist() {
    let mut i = interp();
    load(
        &mut i,
        "frames",
        "#function f private()\n\tsetvar @local Hello;\n\tsetvar global world;\n#end f\n",
    );
    run_ok(&mut i, "function f");
    assert!(!i.var_exists("@local"));
    assert_eq!(i.get_var("global").unwrap(), "world");
}

#[test]
fn put_accumulates_for_one_call() {
    let mut i = interp();
    load(
        &mut i,
        "puts",
        "#function show private()\n\tif $?[exists? @greeting] {\n\t\ttextout $@greeting;\n\t} else {\n\t\ttextout unset;\n\t}\n#end show\n",
    );
    run_ok(&mut i, "put show greeting hi there");
    assert_eq!(run_ok(&mut i, "function show"), "hi there\n");
    // consumed by the first subsequent call
    assert_eq!(run_ok(&mut i, "function show"), "unset\n");
}

#[test]
fn functiondel_removes_functions() {
    let mut i = interp();
    load(&mut i, "del", "#function gone private()\n\tnull;\n#end gone\n");
    run_ok(&mut i, "function gone");
    run_ok(&mut i, "functiondel gone");
    let r = run(&mut i, "function gone");
    assert_eq!(r.outcome.error.as_deref(), Some("unknown function: gone"));
}

#[test]
fn function_command_equals_call_expression() {
    let mut i = interp();
    load(
        &mut i,
        "equiv",
        "#function join private()\n\tresult $?[:+ $@arg[0] - $@arg[1]];\n#end join\n",
    );
    let via_command = run_ok(&mut i, "function join a b");
    let via_expr = run_ok(&mut i, "textout $=join[a b]");
    assert_eq!(via_command, via_expr);
}

#[test]
fn errors_propagate_between_function_calls() {
    let mut i = interp();
    load(
        &mut i,
        "inter",
        concat!(
            "#function inner private()\n\tsetvar @msg deep failure;\n\tthrow @msg;\n#end inner\n",
            "#function outer private()\n\tcatch @e {\n\t\tfunction inner;\n\t}\n\ttextout caught $@e;\n#end outer\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "function outer"), "caught deep failure\n");
}

#[test]
fn recursion_is_bounded() {
    let mut i = interp();
    load(&mut i, "rec", "#function loop private()\n\tfunction loop;\n#end loop\n");
    let r = run(&mut i, "function loop");
    assert!(r.outcome.error.unwrap().contains("recursion limit"));
}

// ----------------------------------------------------------------------
// Control flow commands

#[test]
fn if_selects_blocks() {
    let mut i = interp();
    load(
        &mut i,
        "iffy",
        concat!(
            "#function check private()\n",
            "\tif $success {\n\t\tsetvar @text Patient fine;\n\t} else {\n\t\tsetvar @text Patient still sick;\n\t}\n",
            "\ttextout $@text;\n",
            "#end check\n",
        ),
    );
    run_ok(&mut i, "setvar success 1");
    assert_eq!(run_ok(&mut i, "function check"), "Patient fine\n");
    run_ok(&mut i, "setvar success 0");
    assert_eq!(run_ok(&mut i, "function check"), "Patient still sick\n");
}

#[test]
fn if_without_else_skips_silently() {
    let mut i = interp();
    load(
        &mut i,
        "noelse",
        "#function f private()\n\tif $_false {\n\t\ttextout nope;\n\t}\n\ttextout after;\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "after\n");
}

#[test]
fn inline_if_runs_one_command() {
    let mut i = interp();
    run_ok(&mut i, "setvar x 1");
    assert_eq!(run_ok(&mut i, "if $x textout yes"), "yes\n");
    run_ok(&mut i, "setvar x 0");
    assert_eq!(run_ok(&mut i, "if $x textout yes"), "");
}

#[test]
fn while_else_runs_once_when_first_test_fails() {
    let mut i = interp();
    load(
        &mut i,
        "welse",
        concat!(
            "#function f private()\n",
            "\twhile $_false {\n\t\tnull;\n\t} else {\n\t\ttextout This code is executed only once;\n\t}\n",
            "#end f\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "function f"), "This code is executed only once\n");
}

#[test]
fn while_else_skipped_after_iterations() {
    let mut i = interp();
    load(
        &mut i,
        "welse2",
        concat!(
            "#function f private()\n",
            "\tsetvar n 2;\n",
            "\twhile $n {\n\t\ttextout tick;\n\t\tsetvar n $?[- $n 1];\n\t} else {\n\t\ttextout else;\n\t}\n",
            "#end f\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "function f"), "tick\ntick\n");
}

#[test]
fn while_immediate_break_runs_body_once() {
    let mut i = interp();
    load(
        &mut i,
        "wbreak",
        "#function f private()\n\twhile $_true {\n\t\ttextout in;\n\t\tbreak;\n\t}\n\ttextout out;\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "in\nout\n");
}

#[test]
fn repeat_counts() {
    let mut i = interp();
    run_ok(&mut i, "setvar n 0");
    load(
        &mut i,
        "rep",
        "#function f private()\n\trepeat 3 {\n\t\tinc n;\n\t}\n#end f\n",
    );
    run_ok(&mut i, "function f");
    assert_eq!(i.get_var("n").unwrap(), "3");
    // zero repetitions run nothing
    run_ok(&mut i, "setvar n 0");
    run_ok(&mut i, "repeat 0 inc n");
    assert_eq!(i.get_var("n").unwrap(), "0");
    let r = run(&mut i, "repeat x inc n");
    assert!(r.outcome.error.unwrap().contains("not an integer"));
}

#[test]
fn for_with_initially_false_condition_runs_nothing() {
    let mut i = interp();
    load(
        &mut i,
        "forz",
        "#function f private()\nfor j 5 $?[< $j 5] {\n\ttextout body;\n} every {\n\tinc j;\n}\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "");
    // the variable still exists with its initial value
    assert_eq!(i.get_var("j").unwrap(), "5");
}

#[test]
fn isarray_distinguishes_arrays_from_scalars() {
    let mut i = interp();
    run_ok(&mut i, "setvar s plain");
    run_ok(&mut i, "setarray a 0 x");
    run_ok(&mut i, "isarray s r1");
    run_ok(&mut i, "isarray a r2");
    run_ok(&mut i, "isarray ghost r3");
    assert_eq!(i.get_var("r1").unwrap(), "0");
    assert_eq!(i.get_var("r2").unwrap(), "1");
    assert_eq!(i.get_var("r3").unwrap(), "0");
}

#[test]
fn foreach_iterates_in_order() {
    let mut i = interp();
    run_ok(&mut i, "setarray votes 1 b");
    run_ok(&mut i, "setarray votes 0 a");
    run_ok(&mut i, "setarray votes last c");
    load(
        &mut i,
        "each",
        "#function f private()\n\tforeach v in votes {\n\t\ttextout $v;\n\t}\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "a\nb\nc\n");
}

#[test]
fn foreach_rejects_bad_keyword_and_missing_array() {
    let mut i = interp();
    run_ok(&mut i, "setarray a 0 x");
    let r = run(&mut i, "foreach v of a textout $v");
    assert!(r.outcome.error.unwrap().contains("foreach expects the keyword in"));
    let r = run(&mut i, "foreach v in nosuch textout $v");
    assert_eq!(r.outcome.error.as_deref(), Some("not an array: nosuch"));
}

#[test]
fn break_and_continue_affect_innermost_loop() {
    let mut i = interp();
    load(
        &mut i,
        "nest",
        concat!(
            "#function f private()\n",
            "\tsetvar outer 0;\n\tsetvar inner 0;\n",
            "\trepeat 2 {\n",
            "\t\tinc outer;\n",
            "\t\trepeat 5 {\n\t\t\tinc inner;\n\t\t\tbreak;\n\t\t}\n",
            "\t}\n",
            "#end f\n",
        ),
    );
    run_ok(&mut i, "function f");
    assert_eq!(i.get_var("outer").unwrap(), "2");
    assert_eq!(i.get_var("inner").unwrap(), "2");
}

#[test]
fn break_outside_loop_stops_silently() {
    let mut i = interp();
    load(
        &mut i,
        "stray",
        "#function f private()\n\tresult kept;\n\tbreak;\n\ttextout never;\n#end f\n",
    );
    // the special code is dropped at the frame boundary; the result stays
    assert_eq!(run_ok(&mut i, "textout $=f[]"), "kept\n");
    // at the top level it is dropped silently too
    let r = run(&mut i, "break");
    assert!(r.outcome.ok);
    assert_eq!(r.output, "");
}

// ----------------------------------------------------------------------
// Exceptions

#[test]
fn exception_example_flow() {
    let mut i = interp();
    load(
        &mut i,
        "exc",
        concat!(
            "#function fnc private()\n",
            "\tcatch @err {\n\t\tsetvar @msg This is error message;\n\t\tthrow @msg;\n\t}\n",
            "\ttextout $@err;\n",
            "#end fnc\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "function fnc"), "This is error message\n");
}

#[test]
fn catch_without_error_leaves_variable_unset() {
    let mut i = interp();
    load(
        &mut i,
        "quiet",
        concat!(
            "#function f private()\n",
            "\tcatch @err {\n\t\tnull;\n\t}\n",
            "\tisset @err @r;\n\ttextout $@r;\n",
            "#end f\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "function f"), "0\n");
}

#[test]
fn catch_passes_special_codes_through() {
    let mut i = interp();
    load(
        &mut i,
        "special",
        concat!(
            "#function f private()\n",
            "\trepeat 5 {\n",
            "\t\tcatch @e {\n\t\t\tbreak;\n\t\t}\n",
            "\t\ttextout iterated;\n",
            "\t}\n",
            "\ttextout done;\n",
            "#end f\n",
        ),
    );
    // break crosses the catch uncaught and terminates the loop
    assert_eq!(run_ok(&mut i, "function f"), "done\n");
}

#[test]
fn catch_without_parameter_swallows_the_error() {
    let mut i = interp();
    load(
        &mut i,
        "noparam",
        "#function f private()\n\tcatch {\n\t\tinc ghost;\n\t}\n\ttextout survived;\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "survived\n");
}

#[test]
fn throw_requires_a_set_variable() {
    let mut i = interp();
    let r = run(&mut i, "throw nothing");
    assert_eq!(r.outcome.error.as_deref(), Some("unset variable: nothing"));
}

#[test]
fn uncaught_errors_stop_execution() {
    let mut i = interp();
    load(
        &mut i,
        "stop",
        "#function f private()\n\tsetvar @m boom;\n\tthrow @m;\n\ttextout never;\n#end f\n",
    );
    let r = run(&mut i, "function f");
    assert_eq!(r.outcome.error.as_deref(), Some("boom"));
    assert_eq!(r.output, "");
}

// ----------------------------------------------------------------------
// Eval-type commands

#[test]
fn mechanize_evaluates_generated_command() {
    let mut i = interp();
    run_ok(&mut i, "setvar prog setvar name");
    run_ok(&mut i, "mechanize $prog. John");
    assert_eq!(i.get_var("name").unwrap(), "John");
    run_ok(&mut i, "setvar noop null");
    assert!(run(&mut i, "mechanize $noop").outcome.ok);
    let r = run(&mut i, "mechanize nosuchcmd");
    assert!(r.outcome.error.unwrap().contains("unknown command"));
}

#[test]
fn mlc_runs_pieces_in_order() {
    let mut i = interp();
    run_ok(&mut i, "setvar i 0");
    run_ok(&mut i, "mlc textout $i||inc i||textout $i");
    assert_eq!(i.get_var("i").unwrap(), "1");
}

#[test]
fn mlcext_uses_custom_separator() {
    let mut i = interp();
    // build ";;" through unicode constants so the reader never sees it
    run_ok(&mut i, "setvar sep $_\\u(59).$_\\u(59)");
    assert_eq!(i.get_var("sep").unwrap(), ";;");
    run_ok(&mut i, "setvar cmds setvar a 1$sep.setvar b 2");
    run_ok(&mut i, "mlcext $sep $cmds");
    assert_eq!(i.get_var("a").unwrap(), "1");
    assert_eq!(i.get_var("b").unwrap(), "2");
    // oracle: splitting by hand and running each piece matches
    let mut j = interp();
    run_ok(&mut j, "setvar a x");
    run_ok(&mut j, "setvar b x");
    run_ok(&mut j, "setvar a 1");
    run_ok(&mut j, "setvar b 2");
    assert_eq!(i.get_var("a"), j.get_var("a"));
    assert_eq!(i.get_var("b"), j.get_var("b"));
}

#[test]
fn mlc_equals_mlcext_with_default_separator() {
    let mut a = interp();
    let mut b = interp();
    a.submit("setvar i 0");
    b.submit("setvar i 0");
    let ra = a.submit("mlc inc i||textout $i||inc i");
    let rb = b.submit("mlcext || inc i||textout $i||inc i");
    assert_eq!(ra, rb);
    assert_eq!(a.get_var("i"), b.get_var("i"));
}

#[test]
fn empty_mlc_runs_nothing() {
    let mut i = interp();
    let r = run(&mut i, "mlc $_empty");
    assert!(r.outcome.ok);
    assert_eq!(r.output, "");
}

// ----------------------------------------------------------------------
// Events

#[test]
fn event_definition_example() {
    let mut i = interp();
    load(
        &mut i,
        "users",
        concat!(
            "#event on_new_user multi()\n\targs username;\n\ttrigger;\n#end on_new_user\n",
            "#function new_user public() << on_new_user\n\ttextout Welcome $@username;\n#end new_user\n",
            "#function create_user private()\n\texpr $=on_new_user[Piotr];\n#end create_user\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "function create_user"), "Welcome Piotr\n");
}

#[test]
fn event_approval_example() {
    let mut i = interp();
    load(
        &mut i,
        "approval",
        concat!(
            "#event on_approval multi()\n",
            "\targs action;\n",
            "\tresult $_true;\n",
            "\ttrigger @votes;\n",
            "\tforeach @vote in @votes {\n",
            "\t\tif $?[! $@vote] {\n\t\t\treturn $_false;\n\t\t}\n",
            "\t}\n",
            "#end on_approval\n",
            "#function block_shutdown public() << on_approval\n",
            "\twhitelist @action shutdown exit;\n",
            "\tif $processing {\n\t\treturn $_false;\n\t}\n",
            "#end block_shutdown\n",
        ),
    );
    run_ok(&mut i, "setvar processing 1");
    assert_eq!(eval(&mut i, "$=on_approval[shutdown]").unwrap(), "0");
    assert_eq!(eval(&mut i, "$=on_approval[reboot]").unwrap(), "1");
    run_ok(&mut i, "setvar processing 0");
    assert_eq!(eval(&mut i, "$=on_approval[shutdown]").unwrap(), "1");
}

#[test]
fn multi_dispatch_calls_in_registration_order() {
    let mut i = interp();
    load(
        &mut i,
        "order",
        concat!(
            "#event on_ping multi()\n\ttrigger @results;\n\tarraysize @results @n;\n\treturn $@n;\n#end on_ping\n",
            "#function first public() << on_ping\n\ttextout first;\n\tresult a;\n#end first\n",
            "#function second public() << on_ping\n\ttextout second;\n\tresult b;\n#end second\n",
        ),
    );
    let r = run(&mut i, "textout $=on_ping[]");
    assert!(r.outcome.ok, "{:?}", r.outcome.error);
    assert_eq!(r.output, "first\nsecond\n2\n");
}

#[test]
fn trigger_without_registrants_leaves_array_unset() {
    let mut i = interp();
    load(
        &mut i,
        "lonely",
        "#event on_quiet multi()\n\ttrigger @votes;\n\tisset @votes @r;\n\treturn $@r;\n#end on_quiet\n",
    );
    assert_eq!(eval(&mut i, "$=on_quiet[]").unwrap(), "0");
}

#[test]
fn trigger_outside_event_is_an_error() {
    let mut i = interp();
    load(&mut i, "plain", "#function f private()\n\ttrigger;\n#end f\n");
    let r = run(&mut i, "function f");
    assert!(r.outcome.error.unwrap().contains("trigger is valid only inside an event"));
}

#[test]
fn event_variables_are_copied_to_registrants() {
    let mut i = interp();
    load(
        &mut i,
        "copyvars",
        concat!(
            "#event on_data multi()\n\targs payload;\n\tsetvar @extra bonus;\n\ttrigger;\n#end on_data\n",
            "#function sink public() << on_data\n\ttextout $@payload $@extra;\n#end sink\n",
        ),
    );
    assert_eq!(run_ok(&mut i, "expr $=on_data[value]"), "value bonus\n");
}

#[test]
fn single_dispatch_is_seeded() {
    let src = concat!(
        "#event on_pick single()\n\ttrigger;\n#end on_pick\n",
        "#function a public() << on_pick\n\ttextout A;\n#end a\n",
        "#function b public() << on_pick\n\ttextout B;\n#end b\n",
    );
    let outputs: Vec<String> = (0..2)
        .map(|_| {
            let mut i = interp();
            i.set_seed(7);
            i.load_module_source("pick", src, "<pick>").unwrap();
            run_ok(&mut i, "expr $=on_pick[]")
        })
        .collect();
    // same seed, same choice
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0] == "A\n" || outputs[0] == "B\n");
    // across many draws with different seeds both registrants appear
    let mut seen = std::collections::HashSet::new();
    for seed in 0..32 {
        let mut i = interp();
        i.set_seed(seed);
        i.load_module_source("pick", src, "<pick>").unwrap();
        seen.insert(run_ok(&mut i, "expr $=on_pick[]"));
    }
    assert_eq!(seen.len(), 2);
}

#[test]
fn host_events_cannot_be_called_from_scripts() {
    let mut i = interp();
    i.define_host_event("on_sys", EventKind::Multi).unwrap();
    let r = run(&mut i, "expr $=on_sys[]");
    assert!(r.outcome.error.unwrap().contains("built-in event"));
}

#[test]
fn events_can_be_disabled_by_the_host() {
    let mut i = interp();
    i.set_events_enabled(false);
    let err = i
        .load_module_source("ev", "#event on_x multi()\n\ttrigger;\n#end on_x\n", "<ev>")
        .unwrap_err();
    assert!(err.to_string().contains("event definitions are disabled"));
    // plain functions still load
    load(&mut i, "fnonly", "#function f private()\n\tnull;\n#end f\n");
}

#[test]
fn duplicate_event_definitions_are_rejected() {
    let mut i = interp();
    load(&mut i, "e1", "#event on_dup multi()\n\ttrigger;\n#end on_dup\n");
    let err = i
        .load_module_source("e2", "#event on_dup multi()\n\ttrigger;\n#end on_dup\n", "<e2>")
        .unwrap_err();
    assert!(err.to_string().contains("event redefined"));
}

#[test]
fn unknown_event_binding_fails_at_load() {
    let mut i = interp();
    let err = i
        .load_module_source(
            "bind",
            "#function f public() << on_missing\n\tnull;\n#end f\n",
            "<bind>",
        )
        .unwrap_err();
    assert!(err.to_string().contains("binds unknown event on_missing"));
}

// ----------------------------------------------------------------------
// Timers

#[test]
fn timer_snapshot_isolation() {
    let clock = VirtualClock::new();
    let mut i = interp();
    i.set_clock(Box::new(clock.clone()));
    load(
        &mut i,
        "counter",
        concat!(
            "#function counter private()\n",
            "\tsetvar @local Local variable;\n",
            "\tsettimer auto 1000 10 {\n\t\ttextout $@local;\n\t}\n",
            "\tsetvar @local Hello;\n",
            "#end counter\n",
        ),
    );
    run_ok(&mut i, "function counter");
    let mut lines = 0;
    for step in 1..=12 {
        clock.advance(1000);
        let fired = i.fire_due_timers();
        if step <= 10 {
            assert_eq!(fired, 1, "one firing at t={}ms", step * 1000);
        } else {
            assert_eq!(fired, 0, "timer expired after 10 firings");
        }
        lines += fired;
    }
    assert_eq!(lines, 10);
    assert_eq!(i.take_output(), "Local variable\n".repeat(10));
}

#[test]
fn timer_zero_iterations_never_fires() {
    let clock = VirtualClock::new();
    let mut i = interp();
    i.set_clock(Box::new(clock.clone()));
    load(
        &mut i,
        "z",
        "#function f private()\n\tsettimer auto 10 0 {\n\t\ttextout no;\n\t}\n#end f\n",
    );
    run_ok(&mut i, "function f");
    assert!(i.live_timers().is_empty());
    clock.advance(100);
    assert_eq!(i.fire_due_timers(), 0);
}

#[test]
fn duplicate_timer_names_are_rejected() {
    let clock = VirtualClock::new();
    let mut i = interp();
    i.set_clock(Box::new(clock.clone()));
    load(
        &mut i,
        "dup",
        "#function f private()\n\tsettimer tick 50 5 {\n\t\tnull;\n\t}\n#end f\n",
    );
    run_ok(&mut i, "function f");
    let r = run(&mut i, "function f");
    assert_eq!(r.outcome.error.as_deref(), Some("timer name already in use: tick"));
    // '#' is reserved for generated names
    load(
        &mut i,
        "bad",
        "#function g private()\n\tsettimer bad#1 50 5 {\n\t\tnull;\n\t}\n#end g\n",
    );
    let r = run(&mut i, "function g");
    assert_eq!(r.outcome.error.as_deref(), Some("invalid timer name: bad#1"));
}

#[test]
fn timer_admin_commands() {
    let clock = VirtualClock::new();
    let mut i = interp();
    i.set_clock(Box::new(clock.clone()));
    load(
        &mut i,
        "admin",
        concat!(
            "#function f private()\n",
            "\tsettimer one 100 3 {\n\t\tnull;\n\t}\n",
            "\tsettimer two 200 4 {\n\t\tnull;\n\t}\n",
            "#end f\n",
        ),
    );
    run_ok(&mut i, "function f");
    run_ok(&mut i, "listtimers report");
    run_ok(&mut i, "arraysize report n");
    assert_eq!(i.get_var("n").unwrap(), "2");
    assert_eq!(i.scope().array("report").unwrap().get("0").unwrap(), "one 100 3");
    run_ok(&mut i, "canceltimer one");
    assert_eq!(i.live_timers().len(), 1);
    let r = run(&mut i, "canceltimer one");
    assert_eq!(r.outcome.error.as_deref(), Some("unknown timer: one"));
}

#[test]
fn timer_errors_go_to_the_error_sink_and_timer_continues() {
    let clock = VirtualClock::new();
    let mut i = interp();
    i.set_clock(Box::new(clock.clone()));
    load(
        &mut i,
        "err",
        "#function f private()\n\tsettimer t 10 3 {\n\t\tinc missing;\n\t}\n#end f\n",
    );
    run_ok(&mut i, "function f");
    for _ in 0..3 {
        clock.advance(10);
        i.fire_due_timers();
    }
    let errors = i.take_errors();
    assert_eq!(errors.len(), 3);
    assert!(errors[0].contains("timer t"));
    assert!(i.live_timers().is_empty());
}

#[test]
fn timer_can_cancel_itself() {
    let clock = VirtualClock::new();
    let mut i = interp();
    i.set_clock(Box::new(clock.clone()));
    load(
        &mut i,
        "selfcancel",
        "#function f private()\n\tsettimer t 10 100 {\n\t\ttextout once;\n\t\tcanceltimer t;\n\t}\n#end f\n",
    );
    run_ok(&mut i, "function f");
    clock.advance(10);
    assert_eq!(i.fire_due_timers(), 1);
    assert!(i.live_timers().is_empty());
    clock.advance(1000);
    assert_eq!(i.fire_due_timers(), 0);
}

// ----------------------------------------------------------------------
// Reservoir mutation

#[test]
fn registration_round_trip() {
    let mut i = interp();
    i.register_command(
        t2script::CommandSpec::new("greet", t2script::Arity::Fixed(1)),
        |c| {
            let line = format!("hello {}\n", c.param(0));
            c.write_output(&line);
            ExecOutcome::success()
        },
    )
    .unwrap();
    assert_eq!(run_ok(&mut i, "greet world"), "hello world\n");
    let err = i
        .register_command(
            t2script::CommandSpec::new("GREET", t2script::Arity::Fixed(1)),
            |_| ExecOutcome::success(),
        )
        .unwrap_err();
    assert!(err.to_string().contains("already registered"));
}

#[test]
fn disabled_commands_can_be_shadowed_by_new_registrations() {
    let mut i = interp();
    i.disable_command("textout");
    i.register_command(
        t2script::CommandSpec::new("textout", t2script::Arity::Fixed(1)),
        |c| {
            let line = format!(">> {}\n", c.param(0));
            c.write_output(&line);
            ExecOutcome::success()
        },
    )
    .unwrap();
    assert_eq!(run_ok(&mut i, "textout hi"), ">> hi\n");
}

#[test]
fn disabled_commands_error_at_execution() {
    let mut i = interp();
    i.disable_command("mechanize");
    let r = run(&mut i, "mechanize null");
    assert_eq!(r.outcome.error.as_deref(), Some("disabled command: mechanize"));
    i.enable_command("mechanize");
    assert!(run(&mut i, "mechanize null").outcome.ok);
}

#[test]
fn removed_commands_stop_resolving() {
    let mut i = interp();
    i.remove_command("envrs");
    let r = run(&mut i, "envrs a b c");
    assert!(r.outcome.error.unwrap().contains("unknown command"));
    // removing an unknown name is a no-op
    assert!(!i.remove_command("nosuch"));
}

#[test]
fn disabled_command_errors_are_catchable() {
    let mut i = interp();
    i.disable_command("mechanize");
    load(
        &mut i,
        "c",
        "#function f private()\n\tcatch @e {\n\t\tmechanize null;\n\t}\n\ttextout $@e;\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "disabled command: mechanize\n");
}

#[test]
fn compiled_programs_see_later_disabling() {
    let mut i = interp();
    load(&mut i, "m", "#function f private()\n\tmechanize null;\n#end f\n");
    assert!(run(&mut i, "function f").outcome.ok);
    i.disable_command("mechanize");
    let r = run(&mut i, "function f");
    assert_eq!(r.outcome.error.as_deref(), Some("disabled command: mechanize"));
}

// ----------------------------------------------------------------------
// Modules

#[test]
fn module_unload_removes_everything() {
    let mut i = interp();
    load(
        &mut i,
        "mod1",
        concat!(
            "#event on_go multi()\n\ttrigger;\n#end on_go\n",
            "#function f public() << on_go\n\ttextout f;\n#end f\n",
        ),
    );
    assert!(run(&mut i, "function f").outcome.ok);
    i.unload_module("mod1").unwrap();
    let r = run(&mut i, "function f");
    assert!(r.outcome.error.unwrap().contains("unknown function"));
    assert!(i.unload_module("mod1").is_err());
}

#[test]
fn loading_same_function_names_twice_fails() {
    let mut i = interp();
    let src = "#function dup private()\n\tnull;\n#end dup\n";
    load(&mut i, "a", src);
    let err = i.load_module_source("b", src, "<b>").unwrap_err();
    assert!(err.to_string().contains("function redefined: dup"));
}

// ----------------------------------------------------------------------
// Contexts

#[test]
fn contexts_select_constants_and_commands() {
    let mut i = interp();
    let w1 = i.register_context(t2script::Context::new("w1").with_constant("where", "window one"));
    let w2 = i.register_context(t2script::Context::new("w2").with_constant("where", "window two"));
    let r1 = i.submit_with_context("textout $_where", w1);
    let r2 = i.submit_with_context("textout $_where", w2);
    assert_eq!(r1.output, "window one\n");
    assert_eq!(r2.output, "window two\n");
    // the default context has no such constant
    let r = i.submit("textout $_where");
    assert!(r.outcome.error.unwrap().contains("unknown constant"));

    let jail = i.register_context(
        t2script::Context::new("jail")
            .with_filter(t2script::CommandFilter::Except(["textout".to_string()].into())),
    );
    let r = i.submit_with_context("textout hi", jail);
    assert_eq!(r.outcome.error.as_deref(), Some("command not available in this context: textout"));
    assert!(i.submit_with_context("null", jail).outcome.ok);
}

#[test]
fn function_bodies_run_under_the_default_context() {
    let mut i = interp();
    let ctx = i.register_context(t2script::Context::new("w").with_constant("where", "w"));
    load(&mut i, "cf", "#function f private()\n\ttextout $_where;\n#end f\n");
    // the call happens under ctx, the body runs under the default context
    let r = i.submit_with_context("function f", ctx);
    assert!(r.outcome.error.unwrap().contains("unknown constant"));
}

// ----------------------------------------------------------------------
// Reader-level behaviors visible end to end

#[test]
fn multi_line_join_examples() {
    let mut i = interp();
    load(
        &mut i,
        "join",
        concat!(
            "// space connector is added\n",
            "setvar multi My name is\n",
            "\tJames;\n",
            "\n",
            "// space connector is avoided\n",
            "setvar Pi 3.1415926535`\n",
            "\t8979323846;\n",
        ),
    );
    // top-level instructions run through runscript semantics; use a module
    // with an entry function instead
    let mut i2 = interp();
    load(
        &mut i2,
        "join2",
        concat!(
            "#function main private()\n",
            "setvar multi My name is\n",
            "\tJames;\n",
            "setvar Pi 3.1415926535`\n",
            "\t8979323846;\n",
            "#end main\n",
        ),
    );
    run_ok(&mut i2, "function main");
    assert_eq!(i2.get_var("multi").unwrap(), "My name is James");
    assert_eq!(i2.get_var("Pi").unwrap(), "3.14159265358979323846");
    drop(i);
}

#[test]
fn semicolons_inside_brackets_do_not_split() {
    let mut i = interp();
    run_ok(&mut i, "setvar r $?[=~~ a;b xa;bx]");
    assert_eq!(i.get_var("r").unwrap(), "a;b");
}

#[test]
fn repl_like_block_rejection() {
    let mut i = interp();
    let r = run(&mut i, "if $x { null }");
    assert!(r
        .outcome
        .error
        .unwrap()
        .contains("block-commands are allowed only in script files"));
}

#[test]
fn trailing_semicolon_tolerated_in_single_commands() {
    let mut i = interp();
    assert_eq!(run_ok(&mut i, "textout hi;"), "hi\n");
}

#[test]
fn empty_submission_is_a_compile_error() {
    let mut i = interp();
    let r = run(&mut i, "");
    assert!(r.outcome.error.unwrap().contains("no command in input"));
    let r = run(&mut i, "// just a comment");
    assert!(!r.outcome.ok);
}

// ----------------------------------------------------------------------
// Robustness corners

#[test]
fn parent_constant_sees_the_enclosing_block_command() {
    let mut i = interp();
    load(
        &mut i,
        "parents",
        "#function f private()\n\tif $_true {\n\t\ttextout $_parent_name;\n\t}\n#end f\n",
    );
    // the block-command in whose block the command runs is its parent
    assert_eq!(run_ok(&mut i, "function f"), "if\n");
}

#[test]
fn functiondel_allows_redefinition_by_a_new_module() {
    let mut i = interp();
    load(&mut i, "v1", "#function f private()\n\ttextout one;\n#end f\n");
    assert_eq!(run_ok(&mut i, "function f"), "one\n");
    run_ok(&mut i, "functiondel f");
    load(&mut i, "v2", "#function f private()\n\ttextout two;\n#end f\n");
    assert_eq!(run_ok(&mut i, "function f"), "two\n");
}

#[test]
fn negative_numeric_indices_sort_before_positive() {
    let mut i = interp();
    run_ok(&mut i, "setarray a 1 pos");
    run_ok(&mut i, "setarray a -1 neg");
    run_ok(&mut i, "setarray a 0 zero");
    load(
        &mut i,
        "negidx",
        "#function f private()\n\tforeach v in a {\n\t\ttextout $v;\n\t}\n#end f\n",
    );
    assert_eq!(run_ok(&mut i, "function f"), "neg\nzero\npos\n");
    assert_eq!(run_ok(&mut i, "textout $a[-1]"), "neg\n");
}

#[test]
fn unicode_command_names_fold_case() {
    let mut i = interp();
    i.register_command(
        t2script::CommandSpec::new("grüß", t2script::Arity::Fixed(1)),
        |c| {
            let line = format!("servus {}\n", c.param(0));
            c.write_output(&line);
            ExecOutcome::success()
        },
    )
    .unwrap();
    // simple one-to-one folding: ß stays ß, so GrÜß matches grüß
    assert_eq!(run_ok(&mut i, "GrÜß welt"), "servus welt\n");
}

#[test]
fn loop_condition_errors_propagate() {
    let mut i = interp();
    load(
        &mut i,
        "conderr",
        concat!(
            "#function f private()\n",
            "\tsetvar n 2;\n",
            "\twhile $?[< 0 $n] {\n",
            "\t\tsetvar n $?[- $n 1];\n",
            "\t\tif $?[eq $n 0] {\n\t\t\tdelvar n;\n\t\t}\n",
            "\t}\n",
            "#end f\n",
        ),
    );
    let r = run(&mut i, "function f");
    assert_eq!(r.outcome.error.as_deref(), Some("unset variable: n"));
}

#[test]
fn triple_nested_index_chain() {
    let mut i = interp();
    run_ok(&mut i, "setarray c 0 5");
    run_ok(&mut i, "setarray b 5 90");
    run_ok(&mut i, "setarray a 90 deep");
    assert_eq!(run_ok(&mut i, "textout $a[$b[$c[0]]]"), "deep\n");
}

#[test]
fn put_reaches_event_dispatch_frames() {
    let mut i = interp();
    load(
        &mut i,
        "putev",
        concat!(
            "#event on_go multi()\n\ttrigger;\n#end on_go\n",
            "#function handler public() << on_go\n",
            "\tif $?[exists? @extra] {\n\t\ttextout got $@extra;\n\t} else {\n\t\ttextout plain;\n\t}\n",
            "#end handler\n",
        ),
    );
    run_ok(&mut i, "put handler extra bonus");
    assert_eq!(run_ok(&mut i, "expr $=on_go[]"), "got bonus\n");
    assert_eq!(run_ok(&mut i, "expr $=on_go[]"), "plain\n");
}

#[test]
fn deeply_nested_blocks_execute() {
    let mut i = interp();
    let mut source = String::from("#function f private()\n");
    for _ in 0..30 {
        source.push_str("if $_true {\n");
    }
    source.push_str("textout bottom;\n");
    for _ in 0..30 {
        source.push_str("}\n");
    }
    source.push_str("#end f\n");
    load(&mut i, "deep", &source);
    assert_eq!(run_ok(&mut i, "function f"), "bottom\n");
}

#[test]
fn runaway_expression_nesting_is_a_catchable_error() {
    let depth = 10_000;
    let mut text = String::new();
    for _ in 0..depth {
        text.push_str("$?[+ 1 ");
    }
    text.push('1');
    for _ in 0..depth {
        text.push(']');
    }
    let mut i = interp();
    let r = i.submit(&format!("setvar x {text}"));
    assert!(r.outcome.error.unwrap().contains("expression nesting exceeds"));
    // the depth counter unwinds cleanly; normal evaluation still works
    assert_eq!(run_ok(&mut i, "textout $?[+ 1 $?[+ 2 3]]"), "6\n");
}

#[test]
fn runaway_block_nesting_is_a_catchable_error() {
    let nested_source = |depth: usize| {
        let mut source = String::from("#function f private()\n");
        for _ in 0..depth {
            source.push_str("if $_true {\n");
        }
        source.push_str("null;\n");
        for _ in 0..depth {
            source.push_str("}\n");
        }
        source.push_str("#end f\n");
        source
    };
    // beyond the runtime guard but within the compile bound: compiles,
    // then fails with a catchable execution error
    let mut i = interp();
    load(&mut i, "deep_exec", &nested_source(500));
    let r = i.submit("function f");
    assert!(r.outcome.error.unwrap().contains("command nesting exceeds"));
    assert!(run(&mut i, "null").outcome.ok);

    // hostile nesting is rejected at compile time
    let mut i = interp();
    let err = i
        .load_module_source("hostile_depth", &nested_source(10_000), "<deep>")
        .unwrap_err();
    assert!(err.to_string().contains("block nesting exceeds"));
}
