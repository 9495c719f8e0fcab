use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const SURFACE_CSV_HEADER: &str = "iteration,history_level,mean_loss";
pub const SUM_LOSS_CSV_HEADER: &str = "iteration,sum_loss";

/// Mean cross-entropy indexed by (training iteration, history level). Row `i`
/// is iteration `i + 1`; column `h` is history level `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSurface {
    levels: usize,
    rows: Vec<Vec<f64>>,
}

impl LossSurface {
    pub fn new(levels: usize) -> Self {
        LossSurface {
            levels,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let levels = rows.first().map_or(0, Vec::len);
        let mut s = LossSurface::new(levels);
        for r in rows {
            s.push_row(r)?;
        }
        Ok(s)
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.levels {
            return Err(Error::Shape(format!(
                "loss row has {} levels, surface has {}",
                row.len(),
                self.levels
            )));
        }
        if let Some(bad) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Divergence(format!("loss surface entry {bad} is not a finite non-negative loss")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.levels == 0
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, iteration_index: usize) -> &[f64] {
        &self.rows[iteration_index]
    }

    pub fn last_row(&self) -> Option<&[f64]> {
        self.rows.last().map(Vec::as_slice)
    }

    /// The loss curve of one history level across iterations.
    pub fn column(&self, level: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[level]).collect()
    }

    /// The first `iterations` rows.
    pub fn head(&self, iterations: usize) -> LossSurface {
        LossSurface {
            levels: self.levels,
            rows: self.rows.iter().take(iterations).cloned().collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * self.rows.len() * self.levels + 40);
        out.push_str(SURFACE_CSV_HEADER);
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            write_csv_row(&mut out, i + 1, row);
        }
        out
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Parse {
            what: "loss surface CSV",
            path: path.to_path_buf(),
            msg,
        };
        let mut lines = text.lines();
        if lines.next() != Some(SURFACE_CSV_HEADER) {
            return Err(bad(format!("expected header {SURFACE_CSV_HEADER:?}")));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let (Some(it), Some(h), Some(v), None) = (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad(format!("line {}: expected 3 fields", lineno + 2)));
            };
            let it: usize = it.parse().map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            let h: usize = h.parse().map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            let v: f64 = v.parse().map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            if it == rows.len() + 1 && h == 0 {
                rows.push(Vec::new());
            }
            let count = rows.len();
            match rows.last_mut() {
                Some(row) if it == count && h == row.len() => row.push(v),
                _ => return Err(bad(format!("line {}: rows out of order", lineno + 2))),
            }
        }
        Self::from_rows(rows).map_err(|e| bad(e.to_string()))
    }
}

/// Appends the CSV lines of one iteration's row.
pub fn write_csv_row(out: &mut String, iteration: usize, row: &[f64]) {
    for (h, v) in row.iter().enumerate() {
        // `{}` on f64 is the shortest representation that round-trips.
        let _ = writeln!(out, "{iteration},{h},{v}");
    }
}

pub fn export_surface_csv(surface: &LossSurface, path: &Path) -> Result<()> {
    fs::write(path, surface.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn import_surface_csv(path: &Path) -> Result<LossSurface> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LossSurface::parse_csv(&text, path)
}

/// Total loss over all history levels, one entry per iteration.
pub fn sum_over_history(surface: &LossSurface) -> Vec<f64> {
    surface
        .rows()
        .iter()
        .map(|r| row_sum(r))
        .collect()
}

/// Left-to-right sum of one row.
pub fn row_sum(row: &[f64]) -> f64 {
    row.iter().fold(0.0, |acc, &v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_cell_csv() {
        let s = LossSurface::from_rows(vec![vec![0.5]]).unwrap();
        assert_eq!(s.to_csv(), "iteration,history_level,mean_loss\n1,0,0.5\n");
    }

    #[test]
    fn two_by_three_has_six_rows() {
        let s = LossSurface::from_rows(vec![vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3]]).unwrap();
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(csv.lines().nth(4), Some("2,0,0.1"));
    }

    #[test]
    fn sums() {
        let zero = LossSurface::from_rows(vec![vec![0.0; 4]; 3]).unwrap();
        assert_eq!(sum_over_history(&zero), vec![0.0; 3]);
        let one = LossSurface::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(sum_over_history(&one), vec![6.0]);
    }

    #[test]
    fn rejects_ragged_and_negative_rows() {
        let mut s = LossSurface::new(2);
        assert!(s.push_row(vec![1.0]).is_err());
        assert!(s.push_row(vec![1.0, -1.0]).is_err());
        assert!(s.push_row(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn csv_rejects_garbage() {
        let p = Path::new("x.csv");
        assert!(LossSurface::parse_csv("nope\n", p).is_err());
        assert!(LossSurface::parse_csv("iteration,history_level,mean_loss\n1,1,0.5\n", p).is_err());
        assert!(LossSurface::parse_csv("iteration,history_level,mean_loss\n1,0,abc\n", p).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = LossSurface::from_rows(vec![vec![0.1, 1e-13], vec![3.7376696182833684, 2.0 / 3.0]]).unwrap();
        export_surface_csv(&s, &path).unwrap();
        assert_eq!(import_surface_csv(&path).unwrap(), s);
    }

    proptest! {
        #[test]
        fn csv_round_trips_bitwise(rows in 1usize..5, cols in 1usize..6, seed in proptest::collection::vec(0.0f64..50.0, 30)) {
            let data: Vec<Vec<f64>> = (0..rows)
                .map(|r| (0..cols).map(|c| seed[(r * cols + c) % seed.len()] / (1.0 + r as f64 * 7.0)).collect())
                .collect();
            let s = LossSurface::from_rows(data).unwrap();
            let back = LossSurface::parse_csv(&s.to_csv(), Path::new("p")).unwrap();
            for (a, b) in s.rows().iter().flatten().zip(back.rows().iter().flatten()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn sum_is_linear(vals in proptest::collection::vec(0.0f64..10.0, 12), c in 0.0f64..5.0) {
            let s = LossSurface::from_rows(vals.chunks(4).map(<[f64]>::to_vec).collect()).unwrap();
            let scaled = LossSurface::from_rows(vals.chunks(4).map(|r| r.iter().map(|v| v * c).collect()).collect()).unwrap();
            for (a, b) in sum_over_history(&s).iter().zip(sum_over_history(&scaled)) {
                prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
