//! Source normalization: turns raw script text into logical lines.
//!
//! The reader deals with the purely lexical layer of the language:
//!
//! * comment lines (`//` as the first non-white characters) are dropped;
//! * physical lines that do not finish a logical line are joined to the
//!   next one with a single connecting space, or with nothing when the
//!   fragment ends with an acute (`` ` ``);
//! * logical lines are separated by `;`, except inside expression index
//!   brackets `[...]`;
//! * `{` at bracket depth zero opens a block, `}` closes one, and the
//!   `} keyword {` form closes one block and opens the next;
//! * lines whose first non-white character is `#` are definition
//!   directives and must not end with a semicolon.
//!
//! Everything structural beyond that (command names, parameters, block
//! arities) belongs to the compiler.

use crate::error::{CompileError, CompileErrorKind, SourceSpan};
use std::path::Path;
use std::sync::Arc;

/// Where a piece of source text came from. The compiler applies different
/// rules per origin: single commands allow exactly one plain command, and
/// generated (meta) sources go through minimal compilation, which rejects
/// definitions and blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceOrigin {
    ScriptFile,
    SingleCommand,
    MetaGenerated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineKind {
    /// A complete command text.
    Command,
    /// A `#...` directive line (text includes the leading `#`).
    HashDirective,
    /// A command text that opens a block (`{` consumed).
    BlockOpen,
    /// `}`, optionally `} keyword {` which reopens the next block.
    BlockClose { keyword: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalLine {
    pub text: String,
    pub kind: LineKind,
    pub span: SourceSpan,
    /// False when the line was closed by something other than `;`
    /// (a closing brace, a directive, or end of input).
    pub explicit_terminator: bool,
}

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub origin: SourceOrigin,
    pub lines: Vec<LogicalLine>,
    /// Style warnings (line number, message), e.g. a skipped semicolon
    /// before `}`. Only surfaced by frontends that ask for them.
    pub warnings: Vec<(u32, String)>,
}

struct Reader {
    file: Arc<str>,
    origin: SourceOrigin,
    lines: Vec<LogicalLine>,
    warnings: Vec<(u32, String)>,
    pending: String,
    pending_start: u32,
    join_nospace: bool,
    bracket_depth: usize,
    current_line: u32,
}

impl Reader {
    fn flush(&mut self, kind: LineKind, explicit: bool) {
        let text = std::mem::take(&mut self.pending);
        let text = text.trim();
        self.join_nospace = false;
        self.bracket_depth = 0;
        if text.is_empty() && matches!(kind, LineKind::Command) {
            return; // stray separator
        }
        let span = SourceSpan::new(
            self.file.clone(),
            self.pending_start.max(1),
            self.current_line.max(1),
        );
        self.lines.push(LogicalLine {
            text: text.to_string(),
            kind,
            span,
            explicit_terminator: explicit,
        });
    }

    fn flush_pending_command(&mut self, reason: &str) {
        if !self.pending.trim().is_empty() {
            if self.origin == SourceOrigin::ScriptFile {
                self.warnings
                    .push((self.current_line, format!("missing ';' before {reason}")));
            }
            self.flush(LineKind::Command, false);
        } else {
            self.pending.clear();
            self.join_nospace = false;
        }
    }

    fn feed_line(&mut self, raw: &str, line_no: u32) -> Result<(), CompileError> {
        self.current_line = line_no;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Ok(()); // blank lines never join
        }
        if trimmed.starts_with("//") {
            return Ok(()); // comment line, dropped entirely
        }
        if trimmed.starts_with('#') {
            self.flush_pending_command("a hash directive");
            if trimmed.ends_with(';') {
                return Err(CompileError::new(
                    SourceSpan::new(self.file.clone(), line_no, line_no),
                    CompileErrorKind::HashLineSemicolon,
                ));
            }
            self.pending = trimmed.to_string();
            self.pending_start = line_no;
            self.flush(LineKind::HashDirective, false);
            return Ok(());
        }

        if self.pending.is_empty() {
            self.pending_start = line_no;
        } else if !self.join_nospace {
            self.pending.push(' ');
        }
        self.join_nospace = false;

        let chars: Vec<char> = trimmed.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '[' {
                self.bracket_depth += 1;
                self.pending.push(c);
                i += 1;
                continue;
            }
            if c == ']' {
                self.bracket_depth = self.bracket_depth.saturating_sub(1);
                self.pending.push(c);
                i += 1;
                continue;
            }
            if self.bracket_depth > 0 {
                self.pending.push(c);
                i += 1;
                continue;
            }
            match c {
                ';' => {
                    self.flush(LineKind::Command, true);
                    self.pending_start = line_no;
                    i += 1;
                }
                '{' => {
                    self.flush(LineKind::BlockOpen, false);
                    self.pending_start = line_no;
                    i += 1;
                }
                '}' => {
                    self.flush_pending_command("'}'");
                    self.pending_start = line_no;
                    // Recognize "} keyword {" and a tolerated "};".
                    let mut j = i + 1;
                    while j < chars.len() && chars[j] == ' ' {
                        j += 1;
                    }
                    if j < chars.len() && chars[j] == ';' {
                        self.flush(LineKind::BlockClose { keyword: None }, false);
                        i = j + 1;
                        continue;
                    }
                    let word_start = j;
                    while j < chars.len() && !matches!(chars[j], ' ' | '{' | '}' | ';') {
                        j += 1;
                    }
                    let word: String = chars[word_start..j].iter().collect();
                    let mut k = j;
                    while k < chars.len() && chars[k] == ' ' {
                        k += 1;
                    }
                    if !word.is_empty() && k < chars.len() && chars[k] == '{' {
                        self.flush(LineKind::BlockClose { keyword: Some(word) }, false);
                        i = k + 1;
                    } else {
                        self.flush(LineKind::BlockClose { keyword: None }, false);
                        i += 1;
                    }
                }
                _ => {
                    self.pending.push(c);
                    i += 1;
                }
            }
        }

        // End of the physical line: an unfinished logical line joins the
        // next one. A trailing acute joins without the connecting space.
        if self.pending.trim().is_empty() {
            self.pending.clear();
        } else if self.pending.ends_with('`') {
            self.pending.pop();
            self.join_nospace = true;
        }
        Ok(())
    }

    fn finish(mut self) -> SourceUnit {
        if !self.pending.trim().is_empty() {
            if self.origin == SourceOrigin::ScriptFile {
                self.warnings
                    .push((self.current_line, "missing ';' at end of input".to_string()));
            }
            self.flush(LineKind::Command, false);
        }
        SourceUnit {
            origin: self.origin,
            lines: self.lines,
            warnings: self.warnings,
        }
    }
}

/// Normalizes raw script text into logical lines.
pub fn read_source(
    raw: &str,
    origin: SourceOrigin,
    file_label: &str,
) -> Result<SourceUnit, CompileError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let mut reader = Reader {
        file: Arc::from(file_label),
        origin,
        lines: Vec::new(),
        warnings: Vec::new(),
        pending: String::new(),
        pending_start: 1,
        join_nospace: false,
        bracket_depth: 0,
        current_line: 1,
    };
    for (idx, line) in raw.lines().enumerate() {
        reader.feed_line(line, idx as u32 + 1)?;
    }
    Ok(reader.finish())
}

/// Decodes script file bytes: UTF-8 (with or without BOM) or UTF-16 with BOM.
pub fn decode_script_bytes(bytes: &[u8], path: &Path) -> Result<String, crate::error::LoadError> {
    let fail = || crate::error::LoadError::Encoding { path: path.to_path_buf() };
    if bytes.starts_with(&[0xFF, 0xFE]) {
        return decode_utf16(&bytes[2..], u16::from_le_bytes).ok_or_else(fail);
    }
    if bytes.starts_with(&[0xFE, 0xFF]) {
        return decode_utf16(&bytes[2..], u16::from_be_bytes).ok_or_else(fail);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| fail())?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text).to_string())
}

fn decode_utf16(bytes: &[u8], from_bytes: fn([u8; 2]) -> u16) -> Option<String> {
    if !bytes.len().is_multiple_of(2) {
        return None;
    }
    let units: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|c| from_bytes([c[0], c[1]]))
        .collect();
    char::decode_utf16(units)
        .collect::<Result<String, _>>()
        .ok()
}
