//! In-memory CSV tables, assertion records and seed/target hashing.

use std::fmt;

use sha2::{Digest, Sha256};

use minkcap_core::lattice::{write_point_set, PointSet};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { header, rows })
    }
}

/// Shortest round-trip decimal form, so output bytes depend only on the value.
/// Very small or large magnitudes switch to exponent notation.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-6..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// One assertion outcome. `bound` names the inequality being checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub bound: String,
    pub cell: String,
    pub passed: bool,
    /// Soft checks are reported but do not affect the exit status.
    pub soft: bool,
    pub detail: String,
}

impl Check {
    pub fn new(bound: &str, cell: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            bound: bound.into(),
            cell: cell.into(),
            passed,
            soft: false,
            detail: detail.into(),
        }
    }

    pub fn soft(mut self) -> Self {
        self.soft = true;
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.passed, self.soft) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "WARN",
        };
        write!(f, "{status} [{}] {}: {}", self.bound, self.cell, self.detail)
    }
}

fn digest(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

/// First 16 hex digits of the SHA-256 of the set's text form.
pub fn target_hash(set: &PointSet) -> String {
    digest(write_point_set(set).as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Per-cell seed: SHA-256 of the run seed and the cell coordinates.
pub fn cell_seed(run_seed: u64, coords: &[&dyn fmt::Display]) -> u64 {
    let mut s = run_seed.to_string();
    for c in coords {
        s.push('|');
        s.push_str(&c.to_string());
    }
    let h = digest(s.as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let bytes = t.to_csv();
        assert_eq!(Table::from_csv(&bytes).unwrap(), t);
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let a = cell_seed(1, &[&1, &"pair"]);
        assert_eq!(a, cell_seed(1, &[&1, &"pair"]));
        assert_ne!(a, cell_seed(2, &[&1, &"pair"]));
        assert_ne!(a, cell_seed(1, &[&2, &"pair"]));
        assert_ne!(a, cell_seed(1, &[&1, &"single"]));
    }

    #[test]
    fn hash_is_stable() {
        let s = PointSet::from_coords(1, &[[0]]).unwrap();
        assert_eq!(target_hash(&s).len(), 16);
        assert_eq!(target_hash(&s), target_hash(&s.clone()));
        assert_ne!(target_hash(&s), target_hash(&PointSet::from_coords(1, &[[1]]).unwrap()));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(5.551115123125783e-17), "5.551115123125783e-17");
        assert_eq!(fmt_f64(-2.5e20).parse::<f64>().unwrap(), -2.5e20);
        assert_eq!(fmt_opt(None), "");
    }
}
