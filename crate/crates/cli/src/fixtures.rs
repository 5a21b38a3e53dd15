//! Target families and the tiny exact-enumeration fixture set.

use std::str::FromStr;

use minkcap_core::capacity::{discretize_shape, ShapeSpec};
use minkcap_core::lattice::{CenteredCube, LatticePoint, PointSet};
use minkcap_core::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Singleton,
    Pair,
    Cube,
    Segment,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Singleton => "singleton",
            Family::Pair => "pair",
            Family::Cube => "cube",
            Family::Segment => "segment",
        }
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "singleton" => Ok(Family::Singleton),
            "pair" => Ok(Family::Pair),
            "cube" | "subcube" => Ok(Family::Cube),
            "segment" => Ok(Family::Segment),
            _ => Err(format!("unknown family `{s}`")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn singleton(d: usize) -> Result<PointSet> {
    Ok(PointSet::singleton(LatticePoint::origin(d)?))
}

/// `{0, dist·e_1}`.
pub fn pair(d: usize, dist: i64) -> Result<PointSet> {
    PointSet::new(d, vec![LatticePoint::origin(d)?, LatticePoint::axis(d, 0, dist)?])
}

/// Family member used by the capacity-equivalence sweep at level `k`:
/// `{0}`, a pair at distance `2^{⌊k/2⌋}`, `Δ_{⌊k/2⌋}`, or `T_k` of the segment
/// `[−1/8, 1/8] × {0}^{d−1}` (its `T_4` still fits in `Δ_4`).
pub fn level_family(family: Family, d: usize, k: u32) -> Result<PointSet> {
    match family {
        Family::Singleton => singleton(d),
        Family::Pair => pair(d, 1i64 << (k / 2)),
        Family::Cube => Ok(CenteredCube::new(d, k / 2)?.to_point_set()),
        Family::Segment => {
            let mut from = vec![0.0; d];
            let mut to = vec![0.0; d];
            from[0] = -0.125;
            to[0] = 0.125;
            discretize_shape(&ShapeSpec::Segment { from, to }, k)
        }
    }
}

/// A tiny `(Q + Q̂) ∩ A` instance small enough for exact enumeration.
#[derive(Clone, Debug)]
pub struct TinyFixture {
    pub id: usize,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub m: u32,
    pub n: u32,
    pub target: PointSet,
}

/// Fixtures with `d = 1`, `m ≤ n ≤ 2` and `p, q > 1/2`, `2pq < 1`.
pub fn tiny_fixtures() -> Vec<TinyFixture> {
    let cells: &[(u32, u32, &[&[i64]])] = &[
        (1, 1, &[&[0]]),
        (1, 1, &[&[-1]]),
        (1, 1, &[&[-2]]),
        (1, 1, &[&[-1], &[0]]),
        (1, 1, &[&[-2], &[1]]),
        (1, 2, &[&[0]]),
        (1, 2, &[&[-3]]),
        (1, 2, &[&[-2], &[2]]),
        (1, 2, &[&[-3], &[-2], &[-1], &[0], &[1]]),
        (2, 2, &[&[0]]),
        (2, 2, &[&[-4]]),
        (2, 2, &[&[-1], &[2]]),
        (2, 2, &[&[-3], &[0], &[3]]),
        (2, 2, &[&[-2], &[-1], &[0], &[1]]),
    ];
    let pq = [(0.6, 0.7), (0.7, 0.55)];
    let mut out = Vec::new();
    for (i, (m, n, pts)) in cells.iter().enumerate() {
        // the first seven cells at both parameter pairs, the rest at one
        let params: &[(f64, f64)] = if i < 7 { &pq } else { &pq[..1] };
        for &(p, q) in params {
            let target = PointSet::new(1, pts.iter().map(|c| LatticePoint::new(c).expect("d=1")).collect())
                .expect("valid fixture");
            out.push(TinyFixture {
                id: out.len(),
                d: 1,
                p,
                q,
                m: *m,
                n: *n,
                target,
            });
        }
    }
    out
}

/// Renders a target as `x1;x2;…` with coordinates joined by spaces.
pub fn target_label(set: &PointSet) -> String {
    set.iter()
        .map(|p| p.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_target_label(d: usize, s: &str) -> Result<PointSet> {
    let pts = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let c: std::result::Result<Vec<i64>, _> = t.split_whitespace().map(str::parse).collect();
            let c = c.map_err(|e| minkcap_core::Error::InvalidParameter(format!("bad coordinate in `{t}`: {e}")))?;
            LatticePoint::new(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    PointSet::new(d, pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use minkcap_core::hitting::SumHitSpec;

    #[test]
    fn tiny_fixtures_are_valid_and_enumerable() {
        let fx = tiny_fixtures();
        assert_eq!(fx.len(), 21);
        for f in &fx {
            let s = SumHitSpec::new(f.d, f.p, f.q, f.m, f.n, f.target.clone()).unwrap();
            assert!(s.condition_holds());
            assert!(s.edge_count() <= 24);
        }
    }

    #[test]
    fn families_fit_in_the_cube() {
        for d in 1..=2 {
            for k in 4..=8 {
                let cube = CenteredCube::new(d, k).unwrap();
                for fam in [Family::Singleton, Family::Pair, Family::Cube, Family::Segment] {
                    let a = level_family(fam, d, k).unwrap();
                    assert!(a.iter().all(|x| cube.contains(x)), "{fam} d={d} k={k}");
                }
            }
        }
    }

    #[test]
    fn label_round_trip() {
        let s = PointSet::from_coords(2, &[[0, 1], [-3, 4]]).unwrap();
        assert_eq!(parse_target_label(2, &target_label(&s)).unwrap(), s);
    }
}
