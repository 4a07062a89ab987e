//! Source positions used by every extracted entity and finding.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A position inside one file of the analyzed project.
///
/// `file_path` is relative to the project root and always uses forward
/// slashes, so locations (and therefore reports) compare equal across
/// platforms. Lines are 1-based, columns 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub file_path: String,
    pub line: u32,
    pub column: u32,
}

impl SourceLocation {
    pub fn new(file_path: impl Into<String>, line: u32, column: u32) -> Self {
        let location = Self {
            file_path: file_path.into(),
            line,
            column,
        };
        debug_assert!(location.line >= 1, "lines are 1-based");
        debug_assert!(
            !location.file_path.contains('\\'),
            "file paths use forward slashes"
        );
        location
    }

    /// Same position attributed to a different file. Used when a scan that
    /// only saw source text is folded into a per-file model.
    pub fn with_file(&self, file_path: &str) -> Self {
        Self::new(file_path, self.line, self.column)
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file_path, self.line)
    }
}
