//! Reader for the `key = value` text format shared by the constants and
//! species files.
//!
//! Rules: UTF-8, one assignment per line, `#` starts a comment (anywhere on a
//! line), blank lines ignored, keys unique.  Consumers pull keys out with the
//! `take_*` helpers and finish with [`KvFile::finish`], which rejects any key
//! that nobody asked for.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KvFile {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("expected `key = value`, found `{line}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("missing value for `{key}`"),
                });
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("duplicate key `{key}` (first defined on line {first})"),
                });
            }
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn parse_err(&self, line: usize, msg: String) -> Error {
        Error::Parse { path: self.path.clone(), line, msg }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Keys starting with `prefix`, in sorted order.
    pub fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.entries
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn take_str(&mut self, key: &str) -> Result<String> {
        self.take_str_opt(key)?
            .ok_or_else(|| Error::Validation(format!("{}: missing required key `{key}`", self.path.display())))
    }

    pub fn take_str_opt(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.entries.remove(key).map(|(_, v)| v))
    }

    pub fn take_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64_opt(key)?
            .ok_or_else(|| Error::Validation(format!("{}: missing required key `{key}`", self.path.display())))
    }

    pub fn take_f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.parse_err(line, format!("`{key}`: `{v}` is not a finite number"))),
            },
        }
    }

    pub fn take_u32(&mut self, key: &str) -> Result<u32> {
        self.take_u32_opt(key)?
            .ok_or_else(|| Error::Validation(format!("{}: missing required key `{key}`", self.path.display())))
    }

    pub fn take_u32_opt(&mut self, key: &str) -> Result<Option<u32>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<u32>()
                .map(Some)
                .map_err(|_| self.parse_err(line, format!("`{key}`: `{v}` is not a non-negative integer"))),
        }
    }

    /// Fails if any key was never consumed.
    pub fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(Error::Parse { path: self.path, line, msg: format!("unknown key `{key}`") });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<KvFile> {
        KvFile::parse(text, Path::new("test.kv"))
    }

    #[test]
    fn comments_and_blank_lines() {
        let mut kv = parse("# header\n\na = 1.5  # trailing\nb=x\n").unwrap();
        assert_eq!(kv.take_f64("a").unwrap(), 1.5);
        assert_eq!(kv.take_str("b").unwrap(), "x");
        kv.finish().unwrap();
    }

    #[test]
    fn duplicate_key_reports_line() {
        let err = parse("a = 1\nb = 2\na = 3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let mut kv = parse("a = 1\nzz = 2\n").unwrap();
        kv.take_f64("a").unwrap();
        assert!(matches!(kv.finish(), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn bad_number_and_missing_equals() {
        let mut kv = parse("a = one\n").unwrap();
        assert!(kv.take_f64("a").is_err());
        assert!(parse("just text\n").is_err());
    }

    #[test]
    fn prefix_listing() {
        let kv = parse("line.1.x = 1\nline.2.x = 2\nlinear = 3\n").unwrap();
        assert_eq!(kv.keys_with_prefix("line."), vec!["line.1.x", "line.2.x"]);
    }
}
