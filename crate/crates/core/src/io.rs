//! Artifact serialization.
//!
//! CSV output follows RFC 4180: CRLF row endings, fields quoted only when
//! they contain a comma, quote, or line break, quotes doubled inside quoted
//! fields. Floats are printed with 17 significant digits so parsing the text
//! back recovers the exact bit pattern.

use thiserror::Error;

use crate::pseudo_orbit::{PseudoOrbit, PseudoOrbitError};
use crate::recurrence::{BoxCover, TransitionGraph};
use crate::shadowing::ShadowingCertificate;
use crate::space::Point;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("row has {got} fields, header has {want}")]
    RowArity { got: usize, want: usize },
    #[error("malformed csv at byte {at}: {what}")]
    Csv { at: usize, what: &'static str },
    #[error("row {row}, column {col}: {what}")]
    Field { row: usize, col: usize, what: String },
    #[error("certificate json: {0}")]
    Json(String),
    #[error(transparent)]
    Orbit(#[from] PseudoOrbitError),
}

/// Shortest text that round-trips an f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    buf: String,
    cols: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut w = CsvWriter {
            buf: String::new(),
            cols: header.len(),
        };
        w.raw_row(header.iter().copied());
        w
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<(), IoError> {
        if fields.len() != self.cols {
            return Err(IoError::RowArity {
                got: fields.len(),
                want: self.cols,
            });
        }
        self.raw_row(fields.iter().map(AsRef::as_ref));
        Ok(())
    }

    pub fn into_string(self) -> String {
        self.buf
    }

    fn raw_row<'a>(&mut self, fields: impl Iterator<Item = &'a str>) {
        for (i, field) in fields.enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            if field.contains(['"', ',', '\n', '\r']) {
                self.buf.push('"');
                for ch in field.chars() {
                    if ch == '"' {
                        self.buf.push('"');
                    }
                    self.buf.push(ch);
                }
                self.buf.push('"');
            } else {
                self.buf.push_str(field);
            }
        }
        self.buf.push_str("\r\n");
    }
}

/// Minimal RFC 4180 reader. Accepts LF as well as CRLF, ignores a trailing
/// empty line, returns every record including the header.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<String>>, IoError> {
    let mut rows = Vec::new();
    let mut record = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut chars = text.char_indices().peekable();
    let mut dirty = false;
    while let Some((at, ch)) = chars.next() {
        if quoted {
            match ch {
                '"' => {
                    if matches!(chars.peek(), Some((_, '"'))) {
                        chars.next();
                        field.push('"');
                    } else {
                        quoted = false;
                    }
                }
                _ => field.push(ch),
            }
            continue;
        }
        match ch {
            '"' => {
                if !field.is_empty() {
                    return Err(IoError::Csv {
                        at,
                        what: "quote inside unquoted field",
                    });
                }
                quoted = true;
                dirty = true;
            }
            ',' => {
                record.push(std::mem::take(&mut field));
                dirty = true;
            }
            '\r' => {
                if matches!(chars.peek(), Some((_, '\n'))) {
                    chars.next();
                }
                record.push(std::mem::take(&mut field));
                rows.push(std::mem::take(&mut record));
                dirty = false;
            }
            '\n' => {
                record.push(std::mem::take(&mut field));
                rows.push(std::mem::take(&mut record));
                dirty = false;
            }
            _ => {
                field.push(ch);
                dirty = true;
            }
        }
    }
    if quoted {
        return Err(IoError::Csv {
            at: text.len(),
            what: "unterminated quoted field",
        });
    }
    if dirty || !record.is_empty() {
        record.push(field);
        rows.push(record);
    }
    Ok(rows)
}

fn parse_cell<T: std::str::FromStr>(rows: &[Vec<String>], row: usize, col: usize) -> Result<T, IoError> {
    let cell = rows
        .get(row)
        .and_then(|r| r.get(col))
        .ok_or(IoError::Field {
            row,
            col,
            what: "missing".into(),
        })?;
    cell.parse().map_err(|_| IoError::Field {
        row,
        col,
        what: format!("unparseable {cell:?}"),
    })
}

/// Columns: index, duration, then one column per chart coordinate.
pub fn orbit_to_csv(orbit: &PseudoOrbit) -> String {
    let dim = orbit.point(orbit.index_range().0).dim();
    let mut header = vec!["index".to_string(), "duration".to_string()];
    header.extend((0..dim).map(|k| format!("c{k}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(&refs);
    for (idx, p, dur) in orbit.entries() {
        let mut row = vec![idx.to_string(), fmt_float(dur)];
        row.extend((0..dim).map(|k| fmt_float(p.c(k))));
        w.row(&row).expect("arity fixed by construction");
    }
    w.into_string()
}

pub fn orbit_from_csv(text: &str) -> Result<PseudoOrbit, IoError> {
    let rows = parse_csv(text)?;
    if rows.len() < 2 {
        return Err(IoError::Csv {
            at: 0,
            what: "no data rows",
        });
    }
    let dim = rows[0].len().saturating_sub(2);
    if dim == 0 {
        return Err(IoError::Csv {
            at: 0,
            what: "header lacks coordinate columns",
        });
    }
    let mut low: Option<i64> = None;
    let mut entries = Vec::with_capacity(rows.len() - 1);
    for row in 1..rows.len() {
        let idx: i64 = parse_cell(&rows, row, 0)?;
        match low {
            None => low = Some(idx),
            Some(l) => {
                if idx != l + entries.len() as i64 {
                    return Err(IoError::Field {
                        row,
                        col: 0,
                        what: "index not contiguous".into(),
                    });
                }
            }
        }
        let dur: f64 = parse_cell(&rows, row, 1)?;
        let coords: Vec<f64> = (0..dim)
            .map(|k| parse_cell(&rows, row, 2 + k))
            .collect::<Result<_, _>>()?;
        entries.push((Point::new(coords), dur));
    }
    let low = low.expect("at least one data row");
    let orbit = if low == 0 {
        PseudoOrbit::forward(entries)?
    } else {
        PseudoOrbit::bi_infinite(low, entries)?
    };
    Ok(orbit)
}

pub fn certificate_to_json(cert: &ShadowingCertificate) -> String {
    serde_json::to_string_pretty(cert).expect("certificate fields are plain data")
}

pub fn certificate_from_json(text: &str) -> Result<ShadowingCertificate, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))
}

/// Columns: from, to. One row per directed edge.
pub fn graph_edges_csv(graph: &TransitionGraph) -> String {
    let mut w = CsvWriter::new(&["from", "to"]);
    for (a, b) in graph.edges() {
        w.row(&[a.to_string(), b.to_string()])
            .expect("two columns");
    }
    w.into_string()
}

/// Columns: box, then lo/hi per axis, with a membership flag for the listed set.
pub fn box_set_csv(cover: &BoxCover, members: &[usize]) -> String {
    let dim = cover.cell(0).len();
    let mut header = vec!["box".to_string()];
    for k in 0..dim {
        header.push(format!("lo{k}"));
        header.push(format!("hi{k}"));
    }
    header.push("member".to_string());
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(&refs);
    let mark: std::collections::HashSet<usize> = members.iter().copied().collect();
    for idx in 0..cover.len() {
        let mut row = vec![idx.to_string()];
        for (lo, hi) in cover.cell(idx) {
            row.push(fmt_float(lo));
            row.push(fmt_float(hi));
        }
        row.push(if mark.contains(&idx) { "1" } else { "0" }.to_string());
        w.row(&row).expect("arity fixed by construction");
    }
    w.into_string()
}
