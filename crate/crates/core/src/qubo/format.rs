//! Plain-text QUBO files.
//!
//! ```text
//! # levels 10
//! # penalty 1234.5
//! # nodes 0 1 2
//! # term h1 1 30 -120 0
//! p qubo <n_vars> <n_linear> <n_quadratic> <offset>
//! i i <Q_ii>
//! i j <Q_ij>
//! ```
//!
//! Comment lines (`#`) carry the encoding and per-term provenance and may be
//! absent. Linear lines come first, then quadratic lines with `i < j`, both
//! ascending. Numbers use the shortest decimal that parses back to the same
//! `f64`.

use std::fmt::Write;

use super::model::{QuboModel, TermProvenance};
use super::terms::SparseTerms;
use crate::encoding::ScoreEncoding;
use crate::error::{Error, Result};

pub fn export_qubo(q: &QuboModel) -> Vec<u8> {
    let mut out = String::new();
    if let Some(enc) = q.encoding() {
        writeln!(out, "# levels {}", enc.levels()).unwrap();
        writeln!(out, "# penalty {}", enc.penalty()).unwrap();
        write!(out, "# nodes").unwrap();
        for id in enc.node_ids() {
            write!(out, " {id}").unwrap();
        }
        out.push('\n');
    }
    for p in q.provenance() {
        writeln!(
            out,
            "# term {} {} {} {} {}",
            p.term, p.weight, p.offset, p.linear_sum, p.quadratic_sum
        )
        .unwrap();
    }
    writeln!(
        out,
        "p qubo {} {} {} {}",
        q.n_vars(),
        q.linear().len(),
        q.quadratic().len(),
        q.offset()
    )
    .unwrap();
    for &(i, c) in q.linear() {
        writeln!(out, "{i} {i} {c}").unwrap();
    }
    for &(i, j, c) in q.quadratic() {
        writeln!(out, "{i} {j} {c}").unwrap();
    }
    out.into_bytes()
}

pub fn import_qubo(bytes: &[u8]) -> Result<QuboModel> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::QuboFormat {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;

    let mut levels = None;
    let mut penalty = None;
    let mut node_ids = None;
    let mut provenance = Vec::new();
    let mut header: Option<(usize, usize, usize)> = None;
    let mut terms = SparseTerms::default();
    let (mut seen_lin, mut seen_quad) = (0usize, 0usize);
    let mut last_lin: Option<usize> = None;
    let mut last_quad: Option<(usize, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::QuboFormat { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            match parts.next() {
                Some("levels") => levels = Some(parse::<u32>(parts.next(), "levels").map_err(err)?),
                Some("penalty") => penalty = Some(parse::<f64>(parts.next(), "penalty").map_err(err)?),
                Some("nodes") => {
                    node_ids = Some(
                        parts
                            .map(|p| parse::<u32>(Some(p), "node id"))
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(err)?,
                    )
                }
                Some("term") => {
                    let name = parts.next().ok_or_else(|| err("term without name".into()))?;
                    let mut num = || parse::<f64>(parts.next(), "term value");
                    provenance.push(TermProvenance {
                        term: name.to_string(),
                        weight: num().map_err(err)?,
                        offset: num().map_err(err)?,
                        linear_sum: num().map_err(err)?,
                        quadratic_sum: num().map_err(err)?,
                    });
                }
                _ => {}
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.first() == Some(&"p") {
            if header.is_some() {
                return Err(err("second header line".into()));
            }
            if fields.len() != 6 || fields[1] != "qubo" {
                return Err(err("header must read `p qubo <n_vars> <n_linear> <n_quadratic> <offset>`".into()));
            }
            header = Some((
                parse(Some(fields[2]), "n_vars").map_err(err)?,
                parse(Some(fields[3]), "n_linear").map_err(err)?,
                parse(Some(fields[4]), "n_quadratic").map_err(err)?,
            ));
            terms.offset = parse(Some(fields[5]), "offset").map_err(err)?;
            continue;
        }

        let Some((n_vars, _, _)) = header else {
            return Err(err("entry before `p qubo` header".into()));
        };
        if fields.len() != 3 {
            return Err(err(format!("expected `i j value`, got `{line}`")));
        }
        let i: usize = parse(Some(fields[0]), "index").map_err(err)?;
        let j: usize = parse(Some(fields[1]), "index").map_err(err)?;
        let c: f64 = parse(Some(fields[2]), "value").map_err(err)?;
        if i >= n_vars || j >= n_vars {
            return Err(err(format!("index out of range for {n_vars} variables")));
        }
        if i == j {
            if seen_quad > 0 {
                return Err(err("linear entries must precede quadratic entries".into()));
            }
            if last_lin.is_some_and(|p| p >= i) {
                return Err(err(format!("linear entry {i} is duplicated or out of order")));
            }
            last_lin = Some(i);
            seen_lin += 1;
            terms.add_linear(i, c);
        } else {
            if i > j {
                return Err(err(format!("quadratic entry ({i}, {j}) must have i < j")));
            }
            if last_quad.is_some_and(|p| p >= (i, j)) {
                return Err(err(format!("quadratic entry ({i}, {j}) is duplicated or out of order")));
            }
            last_quad = Some((i, j));
            seen_quad += 1;
            terms.add_quadratic(i, j, c);
        }
    }

    let Some((n_vars, n_lin, n_quad)) = header else {
        return Err(Error::QuboFormat {
            line: 0,
            message: "missing `p qubo` header".into(),
        });
    };
    if (seen_lin, seen_quad) != (n_lin, n_quad) {
        return Err(Error::QuboFormat {
            line: 0,
            message: format!(
                "header announces {n_lin} linear / {n_quad} quadratic entries, found {seen_lin} / {seen_quad}"
            ),
        });
    }

    let encoding = match (levels, penalty, node_ids) {
        (Some(k), Some(p), Some(ids)) => Some(ScoreEncoding::new(k, ids, p)?),
        (None, None, None) => None,
        _ => {
            return Err(Error::QuboFormat {
                line: 0,
                message: "encoding metadata needs all of `levels`, `penalty` and `nodes`".into(),
            })
        }
    };
    QuboModel::from_terms(n_vars, terms, encoding, provenance)
}

fn parse<T: std::str::FromStr>(field: Option<&str>, what: &str) -> std::result::Result<T, String> {
    let field = field.ok_or_else(|| format!("missing {what}"))?;
    field
        .parse()
        .map_err(|_| format!("cannot parse {what} from `{field}`"))
}
