//! CSV output with a fixed number format, and a reader for previously
//! written tables.
//!
//! Numbers are written as `{:.11e}` (12 significant digits), missing values
//! as empty fields, lines end in `\n`, and the header is always present.
//! Lines starting with `#` are comments.

use crate::error::{Error, Result};

pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub comments: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), comments: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|v| fmt_opt(*v)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out
    }
}

/// Read a table written by [`Table::to_csv`] (or any numeric CSV with a
/// header). Errors name the offending line.
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut comments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(c) = body.strip_prefix('#') {
            comments.push(c.trim().to_string());
            continue;
        }
        if body.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        match &header {
            None => {
                if fields.iter().any(|f| f.is_empty()) {
                    return Err(Error::Config { line, message: "empty column name in header".into() });
                }
                header = Some(fields.iter().map(|f| f.to_string()).collect());
            }
            Some(h) => {
                if fields.len() != h.len() {
                    return Err(Error::Config {
                        line,
                        message: format!("expected {} fields, found {}", h.len(), fields.len()),
                    });
                }
                let row = fields
                    .iter()
                    .map(|f| {
                        if f.is_empty() {
                            Ok(None)
                        } else {
                            f.parse::<f64>()
                                .map(Some)
                                .map_err(|_| Error::Config { line, message: format!("'{f}' is not a number") })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row);
            }
        }
    }
    let header = header.ok_or(Error::Config { line: 0, message: "no header row".into() })?;
    Ok(Table { header, rows, comments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "5.00000000000e-1");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
        assert_eq!(fmt_num(1234.5678901234), "1.23456789012e3");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Some(1.0), None]);
        t.push(vec![Some(-2.5e-7), Some(3.0)]);
        t.comments.push("summary: ok".into());
        let text = t.to_csv();
        assert_eq!(text, "a,b\n1.00000000000e0,\n-2.50000000000e-7,3.00000000000e0\n# summary: ok\n");
        assert_eq!(parse_csv(&text).unwrap(), t);
    }

    #[test]
    fn reader_errors() {
        assert!(matches!(parse_csv("a,b\n1\n"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse_csv("a,b\n1,x\n"), Err(Error::Config { line: 2, .. })));
        assert!(parse_csv("# only comments\n").is_err());
        assert!(parse_csv("a,,b\n").is_err());
    }
}
