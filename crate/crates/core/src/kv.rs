//! Flat `key = value` text files. `#` starts a comment; blank lines are ignored.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
}

/// Pairs in file order.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, KvError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(KvError::Malformed { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(KvError::Malformed { line: i + 1 });
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(KvError::Duplicate {
                line: i + 1,
                key: k.to_string(),
            });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let pairs = parse("# header\n a = 1 \n\nb=two # trailing\n").unwrap();
        assert_eq!(pairs, vec![("a".into(), "1".into()), ("b".into(), "two".into())]);
    }

    #[test]
    fn rejects_malformed_and_duplicates() {
        assert_eq!(parse("a 1"), Err(KvError::Malformed { line: 1 }));
        assert_eq!(parse("a =\n"), Err(KvError::Malformed { line: 1 }));
        assert!(matches!(parse("a=1\na=2"), Err(KvError::Duplicate { line: 2, .. })));
    }
}
