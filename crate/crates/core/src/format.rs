//! Shared JSON plumbing for every file the toolkit reads or writes.
//!
//! All schemas carry a top-level `format_version`. Output is pretty-printed
//! with struct-declaration key order and shortest round-trip float
//! formatting, so writing the same value twice yields identical bytes and
//! reading it back yields an identical value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version stamped into (and required from) every file format.
pub const FORMAT_VERSION: u32 = 1;

/// Error produced while reading or writing one of the JSON formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: schema error at `{field}` (line {line}, column {column}): {message}")]
    Schema {
        what: &'static str,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{what}: unsupported format_version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { what: &'static str, found: u32 },
    #[error("{what}: missing format_version")]
    MissingVersion { what: &'static str },
}

#[derive(Deserialize)]
struct Header {
    format_version: Option<u32>,
}

/// Parses `text` as `T`, reporting the offending field path and position.
///
/// The version header is checked first so that files from another schema
/// version fail with a version error instead of an unknown-field error.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &'static str) -> Result<T, FormatError> {
    let header: Result<Header, _> = serde_json::from_str(text);
    match header {
        Ok(Header {
            format_version: Some(v),
        }) if v != FORMAT_VERSION => {
            return Err(FormatError::UnsupportedVersion { what, found: v });
        }
        Ok(Header {
            format_version: None,
        }) => return Err(FormatError::MissingVersion { what }),
        _ => {}
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        FormatError::Schema {
            what,
            field,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(idx) => msg[..idx].to_string(),
        None => msg.to_string(),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &'static str) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_json(&text, what)
}

/// Canonical pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), FormatError> {
    fs::write(path, to_json_string(value)).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("in-memory serialization cannot fail");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        format_version: u32,
        items: Vec<Item>,
    }

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Item {
        name: String,
        weight: f64,
    }

    #[test]
    fn schema_error_names_field_path() {
        let text = r#"{"format_version": 1, "items": [{"name": "a", "weight": "heavy"}]}"#;
        let err = parse_json::<Doc>(text, "doc").unwrap_err();
        match err {
            FormatError::Schema { field, line, .. } => {
                assert_eq!(field, "items[0].weight");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = r#"{"format_version": 1, "items": [], "extra": 3}"#;
        let err = parse_json::<Doc>(text, "doc").unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn version_checked_before_fields() {
        let text = r#"{"format_version": 7, "whatever": true}"#;
        assert!(matches!(
            parse_json::<Doc>(text, "doc"),
            Err(FormatError::UnsupportedVersion { found: 7, .. })
        ));
        assert!(matches!(
            parse_json::<Doc>(r#"{"items": []}"#, "doc"),
            Err(FormatError::MissingVersion { .. })
        ));
    }

    #[test]
    fn floats_round_trip_exactly() {
        let doc = Doc {
            format_version: 1,
            items: vec![Item {
                name: "x".into(),
                weight: 0.1 + 0.2,
            }],
        };
        let text = to_json_string(&doc);
        let back: Doc = parse_json(&text, "doc").unwrap();
        assert_eq!(back, doc);
        assert_eq!(to_json_string(&back), text);
    }
}
