//! Two-level fractional factorial and circumscribed central composite designs.
//!
//! Everything here is produced in coded units. Decode through
//! [`DesignSpace::from_coded`] before handing settings to an operator.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::domain::DesignSpace;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    FractionalFactorial,
    Ccd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub rows: Vec<Vec<f64>>,
    pub kind: DesignKind,
    pub center_runs: usize,
    pub alpha: f64,
}

/// Resolution IV generators for the 2^(8-4) screening fraction.
pub const SCREENING_GENERATORS: [&str; 4] = ["E=ABC", "F=ABD", "G=ACD", "H=BCD"];

fn letter_index(c: char) -> Option<usize> {
    c.is_ascii_uppercase().then(|| (c as u8 - b'A') as usize)
}

/// Parse a defining word such as `E=ABC` or `ABC` into base-column indices.
fn parse_generator(word: &str, base: usize, position: usize) -> Result<Vec<usize>> {
    let bad = |reason: String| Error::InvalidGenerator {
        word: word.to_string(),
        reason,
    };
    let rhs = match word.split_once('=') {
        Some((lhs, rhs)) => {
            let lhs = lhs.trim();
            let expected = (b'A' + position as u8) as char;
            if lhs.len() != 1 || !lhs.starts_with(expected) {
                return Err(bad(format!("expected the generated column to be `{expected}`")));
            }
            rhs.trim()
        }
        None => word.trim(),
    };
    if rhs.is_empty() {
        return Err(bad("empty word".into()));
    }
    let mut cols = Vec::with_capacity(rhs.len());
    for c in rhs.chars() {
        match letter_index(c) {
            Some(i) if i < base => {
                if cols.contains(&i) {
                    return Err(bad(format!("column `{c}` repeated")));
                }
                cols.push(i)
            }
            _ => return Err(bad(format!("`{c}` is not one of the {base} base columns"))),
        }
    }
    Ok(cols)
}

/// 2^(k-p) two-level design. The first `k - p` columns form a full factorial in
/// standard order (first column alternating fastest); each generator defines
/// one additional column as the product of base columns.
pub fn fractional_factorial(k: usize, p: usize, generators: &[&str]) -> Result<DesignMatrix> {
    if k == 0 || p >= k {
        return Err(Error::InvalidInput(format!("need k - p >= 1, got k={k}, p={p}")));
    }
    if generators.len() != p {
        return Err(Error::InvalidInput(format!(
            "{p} generators required, got {}",
            generators.len()
        )));
    }
    let base = k - p;
    if base > 20 {
        return Err(Error::InvalidInput("too many base columns".into()));
    }
    let words = generators
        .iter()
        .enumerate()
        .map(|(j, w)| parse_generator(w, base, base + j))
        .collect::<Result<Vec<_>>>()?;

    let rows = (0..1usize << base)
        .map(|i| {
            let mut row: Vec<f64> = (0..base)
                .map(|j| if (i >> j) & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            for w in &words {
                let v = w.iter().map(|&j| row[j]).product();
                row.push(v);
            }
            row
        })
        .collect();

    Ok(DesignMatrix {
        rows,
        kind: DesignKind::FractionalFactorial,
        center_runs: 0,
        alpha: 1.0,
    })
}

/// Circumscribed central composite design: 2^f cube points, 2f axial points
/// at ±alpha, then `center_runs` center points.
pub fn ccd(f: usize, center_runs: usize, alpha: f64) -> Result<DesignMatrix> {
    if f == 0 || f > 20 {
        return Err(Error::InvalidInput(format!("factor count must be in 1..=20, got {f}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let mut rows = fractional_factorial(f, 0, &[])?.rows;
    for j in 0..f {
        for s in [-alpha, alpha] {
            let mut r = vec![0.0; f];
            r[j] = s;
            rows.push(r);
        }
    }
    rows.extend(std::iter::repeat_n(vec![0.0; f], center_runs));
    Ok(DesignMatrix {
        rows,
        kind: DesignKind::Ccd,
        center_runs,
        alpha,
    })
}

/// Seeded permutation of the run order.
pub fn randomize_order(design: &DesignMatrix, seed: u64) -> DesignMatrix {
    let mut out = design.clone();
    out.rows.shuffle(&mut seeded(seed, 0));
    out
}

impl DesignMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn decode(&self, space: &DesignSpace) -> Result<Vec<Vec<f64>>> {
        self.rows.iter().map(|r| space.from_coded(r)).collect()
    }

    /// Natural-unit CSV: factor names then `run_order` (1-based).
    pub fn write_csv<W: Write>(&self, space: &DesignSpace, out: W) -> Result<()> {
        let natural = self.decode(space)?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        let mut header: Vec<String> = space.names().into_iter().map(String::from).collect();
        header.push("run_order".into());
        w.write_record(&header).map_err(io)?;
        for (i, row) in natural.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push((i + 1).to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}
