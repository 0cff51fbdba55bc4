//! Plain-text problem files.
//!
//! ```text
//! # comment
//! dimension 3
//! meta family hard
//! matrix dense        # or: matrix coo
//! 4 1 0
//! 1 3 0
//! 0 0 2
//! vector
//! -1 -2 3
//! ```
//!
//! A `coo` matrix section has one `i j value` line per entry, 1-based. Entries may come
//! from either triangle; the mirror is filled in. Giving the same position twice is an
//! error, and so is giving both `(i, j)` and `(j, i)` with different values. The vector
//! section holds `n` numbers spread over any number of lines.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rasqp::{QpProblem, SymMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line, 0 when the problem is with the file as a whole.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Dense,
    Coo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub problem: QpProblem,
    /// `meta key value` lines, in file order.
    pub meta: Vec<(String, String)>,
}

enum Section {
    Header,
    Dense {
        rows: Vec<f64>,
        seen: usize,
    },
    Coo {
        entries: BTreeMap<(usize, usize), (f64, usize, bool)>,
    },
    Vector,
}

fn number(tok: &str, line: usize) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(line, format!("expected a finite number, found {tok:?}")),
    }
}

fn index(tok: &str, n: usize, line: usize) -> Result<usize, ParseError> {
    match tok.parse::<usize>() {
        Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
        Ok(i) => err(line, format!("index {i} out of range 1..={n}")),
        Err(_) => err(line, format!("expected an index, found {tok:?}")),
    }
}

pub fn parse(text: &str) -> Result<ProblemFile, ParseError> {
    let mut n: Option<usize> = None;
    let mut meta = Vec::new();
    let mut section = Section::Header;
    let mut q: Option<SymMatrix> = None;
    let mut g: Vec<f64> = Vec::new();
    let mut last_line = 0;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "dimension" => {
                if n.is_some() {
                    return err(line, "dimension given twice");
                }
                match toks.get(1).and_then(|t| t.parse::<usize>().ok()) {
                    Some(d) if d >= 1 && toks.len() == 2 => n = Some(d),
                    _ => return err(line, "expected `dimension <n>` with n >= 1"),
                }
                continue;
            }
            "meta" => {
                if toks.len() < 3 {
                    return err(line, "expected `meta <key> <value>`");
                }
                meta.push((toks[1].to_string(), toks[2..].join(" ")));
                continue;
            }
            "matrix" => {
                let Some(dim) = n else {
                    return err(line, "matrix section before dimension");
                };
                if q.is_some() || !matches!(section, Section::Header | Section::Vector) {
                    return err(line, "matrix given twice");
                }
                section = match toks.get(1).copied() {
                    Some("dense") if toks.len() == 2 => Section::Dense {
                        rows: Vec::with_capacity(dim * dim),
                        seen: 0,
                    },
                    Some("coo") if toks.len() == 2 => Section::Coo {
                        entries: BTreeMap::new(),
                    },
                    _ => return err(line, "expected `matrix dense` or `matrix coo`"),
                };
                continue;
            }
            "vector" => {
                let Some(dim) = n else {
                    return err(line, "vector section before dimension");
                };
                if toks.len() != 1 {
                    return err(line, "`vector` takes no arguments");
                }
                if matches!(section, Section::Vector) || !g.is_empty() {
                    return err(line, "vector given twice");
                }
                if let Some(m) = finish_matrix(&mut section, dim, line)? {
                    q = Some(m);
                }
                section = Section::Vector;
                continue;
            }
            _ => {}
        }
        let dim = n.unwrap_or(0);
        match &mut section {
            Section::Header => return err(line, format!("unexpected {:?}", toks[0])),
            Section::Dense { rows, seen } => {
                if toks.len() != dim {
                    return err(
                        line,
                        format!("expected {dim} entries in matrix row, found {}", toks.len()),
                    );
                }
                if *seen == dim {
                    return err(line, format!("more than {dim} matrix rows"));
                }
                for t in toks {
                    rows.push(number(t, line)?);
                }
                *seen += 1;
            }
            Section::Coo { entries } => {
                if toks.len() != 3 {
                    return err(line, "expected `i j value`");
                }
                let i = index(toks[0], dim, line)?;
                let j = index(toks[1], dim, line)?;
                let v = number(toks[2], line)?;
                let key = (i.min(j), i.max(j));
                let lower = i > j;
                match entries.get(&key) {
                    None => {
                        entries.insert(key, (v, line, lower));
                    }
                    Some(&(_, first, was_lower)) if was_lower == lower || i == j => {
                        return err(
                            line,
                            format!("entry ({}, {}) already given on line {first}", i + 1, j + 1),
                        );
                    }
                    Some(&(w, first, _)) => {
                        if w != v {
                            return err(
                                line,
                                format!(
                                    "entry ({}, {}) disagrees with its mirror on line {first}",
                                    i + 1,
                                    j + 1
                                ),
                            );
                        }
                    }
                }
            }
            Section::Vector => {
                for t in toks {
                    if g.len() == dim {
                        return err(line, format!("more than {dim} vector entries"));
                    }
                    g.push(number(t, line)?);
                }
            }
        }
    }

    let Some(dim) = n else {
        return err(0, "missing `dimension`");
    };
    if let Some(m) = finish_matrix(&mut section, dim, last_line)? {
        q = Some(m);
    }
    let Some(q) = q else {
        return err(0, "missing matrix section");
    };
    if !matches!(section, Section::Vector) && g.is_empty() {
        return err(0, "missing vector section");
    }
    if g.len() != dim {
        return err(
            last_line,
            format!("expected {dim} vector entries, found {}", g.len()),
        );
    }
    let problem = QpProblem::new(q, g).map_err(|e| ParseError {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(ProblemFile { problem, meta })
}

/// Closes a matrix section; `None` if the current section is not a matrix.
fn finish_matrix(
    section: &mut Section,
    n: usize,
    line: usize,
) -> Result<Option<SymMatrix>, ParseError> {
    let m = match std::mem::replace(section, Section::Header) {
        Section::Dense { rows, seen } => {
            if seen != n {
                return err(line, format!("expected {n} matrix rows, found {seen}"));
            }
            SymMatrix::dense(n, rows)
        }
        Section::Coo { entries } => {
            let mut trip = Vec::with_capacity(2 * entries.len());
            for (&(i, j), &(v, _, _)) in &entries {
                trip.push((i, j, v));
                if i != j {
                    trip.push((j, i, v));
                }
            }
            SymMatrix::from_triplets(n, &trip)
        }
        other => {
            *section = other;
            return Ok(None);
        }
    };
    m.map(Some).map_err(|e| ParseError {
        line,
        message: e.to_string(),
    })
}

/// Serializes a problem; numbers use the shortest round-trip representation.
pub fn write(problem: &QpProblem, meta: &[(String, String)], format: MatrixFormat) -> String {
    let n = problem.n();
    let mut out = String::new();
    let _ = writeln!(out, "dimension {n}");
    for (k, v) in meta {
        let _ = writeln!(out, "meta {k} {v}");
    }
    match format {
        MatrixFormat::Dense => {
            out.push_str("matrix dense\n");
            let q = problem.q().to_dense();
            for i in 0..n {
                let row: Vec<String> = q[i * n..(i + 1) * n]
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        MatrixFormat::Coo => {
            out.push_str("matrix coo\n");
            for (i, j, v) in problem.q().upper_triplets() {
                let _ = writeln!(out, "{} {} {v:?}", i + 1, j + 1);
            }
        }
    }
    out.push_str("vector\n");
    let g: Vec<String> = problem.g().iter().map(|v| format!("{v:?}")).collect();
    out.push_str(&g.join(" "));
    out.push('\n');
    out
}
