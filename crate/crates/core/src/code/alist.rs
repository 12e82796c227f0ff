//! Reader and writer for the alist sparse-matrix format.
//!
//! Layout: `n m`, then the maximum column and row degrees, then the `n`
//! column degrees and `m` row degrees, then one line of (1-based) check
//! indices per column and one line of variable indices per row. Zero entries
//! are padding and ignored.

use std::fmt::Write;

use super::CodeSpec;
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate() }
    }

    /// Next non-blank line as numbers, with its 1-based line number.
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Alist {
                        line: i + 1,
                        msg: format!("expected a non-negative integer, found {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((i + 1, nums));
        }
        Err(Error::Alist { line: 0, msg: format!("unexpected end of input while reading {what}") })
    }

    fn expect_len(&mut self, what: &str, len: usize) -> Result<(usize, Vec<usize>)> {
        let (line, nums) = self.next_numbers(what)?;
        if nums.len() != len {
            return Err(Error::Alist {
                line,
                msg: format!("{what}: expected {len} values, found {}", nums.len()),
            });
        }
        Ok((line, nums))
    }
}

/// Parse an alist description into a [`CodeSpec`].
pub fn load_code(text: &str) -> Result<CodeSpec> {
    let mut lines = Lines::new(text);
    let (_, header) = lines.expect_len("header", 2)?;
    let (n, m) = (header[0], header[1]);
    if n == 0 || m == 0 {
        return Err(Error::Alist { line: 1, msg: "n and m must be positive".into() });
    }
    lines.expect_len("maximum degrees", 2)?;
    let (_, col_deg) = lines.expect_len("column degrees", n)?;
    let (_, row_deg) = lines.expect_len("row degrees", m)?;

    let mut from_cols = vec![Vec::new(); m];
    for (v, &deg) in col_deg.iter().enumerate() {
        let (line, nums) = lines.next_numbers("column lists")?;
        let entries: Vec<usize> = nums.into_iter().filter(|&x| x != 0).collect();
        if entries.len() != deg {
            return Err(Error::Alist {
                line,
                msg: format!("column {} lists {} checks, degree says {deg}", v + 1, entries.len()),
            });
        }
        for c in entries {
            if c > m {
                return Err(Error::Alist { line, msg: format!("check index {c} exceeds m = {m}") });
            }
            from_cols[c - 1].push(v);
        }
    }
    let mut checks = Vec::with_capacity(m);
    for (c, &deg) in row_deg.iter().enumerate() {
        let (line, nums) = lines.next_numbers("row lists")?;
        let mut entries: Vec<usize> = nums.into_iter().filter(|&x| x != 0).collect();
        if entries.len() != deg {
            return Err(Error::Alist {
                line,
                msg: format!("row {} lists {} variables, degree says {deg}", c + 1, entries.len()),
            });
        }
        if let Some(&v) = entries.iter().find(|&&v| v > n) {
            return Err(Error::Alist { line, msg: format!("variable index {v} exceeds n = {n}") });
        }
        entries.iter_mut().for_each(|v| *v -= 1);
        entries.sort_unstable();
        let mut col_view = from_cols[c].clone();
        col_view.sort_unstable();
        if entries != col_view {
            return Err(Error::Alist { line, msg: format!("row {} disagrees with the column lists", c + 1) });
        }
        checks.push(entries);
    }
    CodeSpec::from_checks(n, checks)
}

/// Serialize the parity structure of `code` as alist text.
pub fn to_alist(code: &CodeSpec) -> String {
    let n = code.n();
    let m = code.num_checks();
    let col_deg: Vec<usize> = (0..n).map(|v| code.var_checks(v).len()).collect();
    let row_deg: Vec<usize> = code.checks().iter().map(Vec::len).collect();
    let join = |xs: &mut dyn Iterator<Item = usize>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(
        out,
        "{} {}",
        col_deg.iter().max().copied().unwrap_or(0),
        row_deg.iter().max().copied().unwrap_or(0)
    );
    let _ = writeln!(out, "{}", join(&mut col_deg.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut row_deg.iter().copied()));
    for v in 0..n {
        let _ = writeln!(out, "{}", join(&mut code.var_checks(v).iter().map(|c| c + 1)));
    }
    for vars in code.checks() {
        let _ = writeln!(out, "{}", join(&mut vars.iter().map(|v| v + 1)));
    }
    out
}
