use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// One finding about an annotated file, reported as `file:line: CODE message`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line in the annotated source; 0 when no line applies.
    pub line: usize,
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(line: usize, code: &'static str, message: impl Into<String>) -> Self {
        Self { line, code, severity: Severity::Error, message: message.into() }
    }

    pub fn warning(line: usize, code: &'static str, message: impl Into<String>) -> Self {
        Self { line, code, severity: Severity::Warning, message: message.into() }
    }

    pub fn info(line: usize, code: &'static str, message: impl Into<String>) -> Self {
        Self { line, code, severity: Severity::Info, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Formats with the file prefix used on the command line.
    pub fn display_in<'a>(&'a self, file: &'a str) -> impl fmt::Display + 'a {
        struct InFile<'a>(&'a str, &'a Diagnostic);
        impl fmt::Display for InFile<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}:{}", self.0, self.1)
            }
        }
        InFile(file, self)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.line, self.code, self.message)
    }
}

/// Stable diagnostic codes.
pub mod codes {
    pub const IO: &str = "CD000";
    pub const UNTERMINATED: &str = "CD001";
    pub const GRAMMAR: &str = "CD002";
    pub const UNKNOWN_INCLUDE: &str = "CD003";
    pub const DUPLICATE_ID: &str = "CD004";
    pub const DANGLING_ANCHOR: &str = "CD010";
    pub const OCCURRENCE: &str = "CD011";
    pub const BLOCK_RANGE: &str = "CD012";
    pub const DANGLING_NESTED: &str = "CD013";
    pub const NO_PARENT: &str = "CD014";
    pub const DUPLICATE_STEP: &str = "CD020";
    pub const STEP_ON_NESTED: &str = "CD021";
    pub const STEP_GAP: &str = "CD022";
    pub const OVERLAP: &str = "CD030";
    pub const UNREACHABLE: &str = "CD031";
    pub const EMPTY_CONTENT: &str = "CD032";
    pub const MARKDOWN: &str = "CD033";
    pub const DANGLING_LINK: &str = "CD034";
}
