//! On-disk bracket format.
//!
//! ```json
//! {
//!   "n": 3,
//!   "field": "real",
//!   "name": "heisenberg3",
//!   "entries": [{ "i": 1, "j": 2, "k": 3, "c": 1.0 }]
//! }
//! ```
//!
//! Indices are 1-based with `i < j`; `c` is a number, or `[re, im]` in a
//! complex document. Floats are written in the shortest form that parses
//! back to the same `f64`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use momentflow_core::{Bracket, ComplexBracket};
use nalgebra::Complex;
use serde::{Deserialize, Serialize};

/// Largest accepted dimension. The flows cost `O(n^6)` per step, so this is
/// far beyond anything that finishes anyway.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    fn parts(self) -> (f64, f64) {
        match self {
            Coefficient::Real(x) => (x, 0.0),
            Coefficient::Complex([re, im]) => (re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: Coefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketDocument {
    pub n: usize,
    pub field: Field,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DocumentError {
    /// Malformed JSON or a field of the wrong type.
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed JSON that violates the format; `path` is like `entries[2].j`.
    Invalid { path: String, message: String },
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocumentError::Syntax { line, column, message } => {
                write!(f, "line {line}, column {column}: {message}")
            }
            DocumentError::Invalid { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for DocumentError {}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

impl BracketDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc: BracketDocument = serde_json::from_str(text).map_err(|e| DocumentError::Syntax {
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), DocumentError> {
        let n = self.n;
        if n == 0 || n > MAX_DIM {
            return Err(invalid(
                "n",
                format!("dimension must be between 1 and {MAX_DIM}, got {n}"),
            ));
        }
        let mut seen = BTreeSet::new();
        for (idx, e) in self.entries.iter().enumerate() {
            let at = |field: &str| format!("entries[{idx}].{field}");
            for (name, v) in [("i", e.i), ("j", e.j), ("k", e.k)] {
                if v < 1 || v > n {
                    return Err(invalid(at(name), format!("index {v} out of range 1..={n}")));
                }
            }
            if e.i >= e.j {
                return Err(invalid(at("j"), format!("need i < j, got i = {}, j = {}", e.i, e.j)));
            }
            if !seen.insert((e.i, e.j, e.k)) {
                return Err(invalid(
                    format!("entries[{idx}]"),
                    format!("duplicate key (i, j, k) = ({}, {}, {})", e.i, e.j, e.k),
                ));
            }
            let (re, im) = e.c.parts();
            if !re.is_finite() || !im.is_finite() {
                return Err(invalid(at("c"), "coefficient must be finite"));
            }
            if self.field == Field::Real && matches!(e.c, Coefficient::Complex(_)) {
                return Err(invalid(at("c"), "complex coefficient in a real document"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn is_complex(&self) -> bool {
        self.field == Field::Complex
    }

    /// Real bracket; `None` for complex documents.
    pub fn real_bracket(&self) -> Option<Bracket<f64>> {
        if self.is_complex() {
            return None;
        }
        let entries = self.entries.iter().map(|e| (e.i - 1, e.j - 1, e.k - 1, e.c.parts().0));
        Some(Bracket::from_entries(self.n, entries).expect("validated document"))
    }

    /// Complex bracket; real documents are embedded.
    pub fn complex_bracket(&self) -> ComplexBracket {
        let entries = self.entries.iter().map(|e| {
            let (re, im) = e.c.parts();
            (e.i - 1, e.j - 1, e.k - 1, Complex::new(re, im))
        });
        ComplexBracket::from_entries(self.n, entries).expect("validated document")
    }

    pub fn from_real(mu: &Bracket<f64>, name: Option<String>) -> Self {
        Self {
            n: mu.n(),
            field: Field::Real,
            name,
            metadata: BTreeMap::new(),
            entries: mu
                .entries()
                .into_iter()
                .filter(|e| e.3 != 0.0)
                .map(|(i, j, k, c)| Entry {
                    i: i + 1,
                    j: j + 1,
                    k: k + 1,
                    c: Coefficient::Real(c),
                })
                .collect(),
        }
    }

    pub fn from_complex(mu: &ComplexBracket, name: Option<String>) -> Self {
        Self {
            n: mu.n(),
            field: Field::Complex,
            name,
            metadata: BTreeMap::new(),
            entries: mu
                .entries()
                .into_iter()
                .filter(|e| e.3 != Complex::new(0.0, 0.0))
                .map(|(i, j, k, c)| Entry {
                    i: i + 1,
                    j: j + 1,
                    k: k + 1,
                    c: Coefficient::Complex([c.re, c.im]),
                })
                .collect(),
        }
    }
}

// serde_json appends " at line L column C"; the position is reported separately
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(p) => msg[..p].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const H3: &str = r#"{"n": 3, "field": "real", "entries": [{"i": 1, "j": 2, "k": 3, "c": 1}]}"#;

    #[test]
    fn parses_heisenberg() {
        let doc = BracketDocument::parse(H3).unwrap();
        let mu = doc.real_bracket().unwrap();
        assert_eq!(mu, momentflow_core::catalog::heisenberg3());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = BracketDocument::parse("{\n  \"n\": 3,\n  \"field\": \"real\"\n  \"entries\": []\n}").unwrap_err();
        match err {
            DocumentError::Syntax { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_has_position() {
        let err = BracketDocument::parse(r#"{"n": "three", "field": "real", "entries": []}"#).unwrap_err();
        assert!(matches!(err, DocumentError::Syntax { line: 1, .. }), "{err}");
    }

    #[test]
    fn field_path_diagnostics() {
        let cases = [
            (
                r#"{"n": 3, "field": "real", "entries": [{"i": 2, "j": 1, "k": 3, "c": 1}]}"#,
                "entries[0].j",
            ),
            (
                r#"{"n": 3, "field": "real", "entries": [{"i": 1, "j": 4, "k": 3, "c": 1}]}"#,
                "entries[0].j",
            ),
            (
                r#"{"n": 3, "field": "real", "entries": [{"i": 1, "j": 2, "k": 0, "c": 1}]}"#,
                "entries[0].k",
            ),
            (
                r#"{"n": 3, "field": "real", "entries": [{"i": 1, "j": 2, "k": 3, "c": 1}, {"i": 1, "j": 2, "k": 3, "c": 2}]}"#,
                "entries[1]",
            ),
            (
                r#"{"n": 3, "field": "real", "entries": [{"i": 1, "j": 2, "k": 3, "c": [1, 2]}]}"#,
                "entries[0].c",
            ),
            (r#"{"n": 0, "field": "real", "entries": []}"#, "n"),
        ];
        for (text, path) in cases {
            match BracketDocument::parse(text) {
                Err(DocumentError::Invalid { path: p, .. }) => assert_eq!(p, path, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(BracketDocument::parse(r#"{"n": 3, "field": "real", "entries": [], "extra": 1}"#).is_err());
    }

    #[test]
    fn complex_document() {
        let doc = BracketDocument::parse(
            r#"{"n": 2, "field": "complex", "entries": [{"i": 1, "j": 2, "k": 2, "c": [0.5, -1.5]}]}"#,
        )
        .unwrap();
        assert!(doc.real_bracket().is_none());
        let mu = doc.complex_bracket();
        assert_eq!(mu.get(0, 1, 1), Complex::new(0.5, -1.5));
        assert_eq!(BracketDocument::from_complex(&mu, None), doc);
    }
}
