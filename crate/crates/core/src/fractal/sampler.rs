use std::fmt::Write as _;

use super::{letter_bits, point_to_word, PercolationParams, TreeWord};
use crate::error::{Error, Result};
use crate::lattice::{cube_offset, parse_point_set, write_point_set, LatticeBox, LatticePoint, PointSet};
use crate::rng::StreamKey;

/// A realized `Q_d(p; k)`.
#[derive(Clone, Debug)]
pub struct PercolationSample {
    pub params: PercolationParams,
    pub survivors: PointSet,
    pub seed: u64,
    pub key: StreamKey,
    pub pruned_against: Option<PointSet>,
    /// Number of root-connected vertices per generation `0..=k` that the
    /// traversal visited.
    pub level_counts: Vec<u64>,
    /// Open vertices whose subtrees were not expanded (pruned samples only):
    /// lower corner and generation.
    pub unresolved: Vec<(LatticePoint, u32)>,
}

impl PercolationSample {
    pub fn is_pruned(&self) -> bool {
        self.pruned_against.is_some()
    }

    /// Header lines `p=`, `k=`, `seed=` followed by the point-set text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "p={}", self.params.p()).unwrap();
        writeln!(s, "k={}", self.params.k()).unwrap();
        writeln!(s, "seed={}", self.seed).unwrap();
        s.push_str(&write_point_set(&self.survivors));
        s
    }

    /// Parses [`to_text`](Self::to_text) output into `(params, seed, survivors)`.
    pub fn parse_text(text: &str) -> Result<(PercolationParams, u64, PointSet)> {
        let mut p = None;
        let mut k = None;
        let mut seed = None;
        let mut rest = 0;
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            if let Some(v) = t.strip_prefix("p=") {
                p = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?);
            } else if let Some(v) = t.strip_prefix("k=") {
                k = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?);
            } else if let Some(v) = t.strip_prefix("seed=") {
                seed = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?);
            } else if t.starts_with("d=") {
                break;
            }
            rest += line.len() + 1;
        }
        let survivors = parse_point_set(&text[rest.min(text.len())..])?;
        let missing = |what: &str| Error::Parse {
            line: 0,
            msg: format!("missing `{what}=` header"),
        };
        let params = PercolationParams::new(
            survivors.dim(),
            p.ok_or_else(|| missing("p"))?,
            k.ok_or_else(|| missing("k"))?,
        )?;
        Ok((params, seed.ok_or_else(|| missing("seed"))?, survivors))
    }
}

struct Walk {
    params: PercolationParams,
    partner: Option<LatticeBox>,
    survivors: Vec<LatticePoint>,
    level_counts: Vec<u64>,
    unresolved: Vec<(LatticePoint, u32)>,
    thetas: Vec<Vec<u8>>,
}

impl Walk {
    fn relevant(&self, corner: &LatticePoint, level: u32, targets: &[LatticePoint]) -> Vec<LatticePoint> {
        let side = 1i64 << (self.params.k() - level);
        let partner = self.partner.expect("pruned walk has a partner box");
        let region = LatticeBox::cube(*corner, side)
            .minkowski(&partner)
            .expect("coordinates are small");
        targets.iter().filter(|t| region.contains(t)).copied().collect()
    }

    fn visit(&mut self, key: StreamKey, corner: LatticePoint, level: u32, targets: Option<&[LatticePoint]>) {
        self.level_counts[level as usize] += 1;
        let k = self.params.k();
        if level == k {
            self.survivors.push(corner);
            return;
        }
        let half = 1i64 << (k - level - 1);
        let d = self.params.d();
        for letter in 0..self.params.children() {
            let child_key = key.split(letter as u64);
            if !child_key.coin(self.params.p()) {
                continue;
            }
            let mut c = corner.coords().to_vec();
            for (a, ca) in c.iter_mut().enumerate().take(d) {
                *ca += half * self.thetas[letter][a] as i64;
            }
            let child = LatticePoint::new(&c).expect("valid dimension");
            match targets {
                None => self.visit(child_key, child, level + 1, None),
                Some(ts) => {
                    let sub = self.relevant(&child, level + 1, ts);
                    if sub.is_empty() {
                        self.unresolved.push((child, level + 1));
                    } else {
                        self.visit(child_key, child, level + 1, Some(&sub));
                    }
                }
            }
        }
    }
}

fn run(
    params: &PercolationParams,
    key: StreamKey,
    seed: u64,
    prune: Option<(&PointSet, LatticeBox)>,
) -> Result<PercolationSample> {
    let d = params.d();
    let k = params.k();
    let mut walk = Walk {
        params: *params,
        partner: prune.map(|(_, b)| b),
        survivors: Vec::new(),
        level_counts: vec![0; k as usize + 1],
        unresolved: Vec::new(),
        thetas: (0..params.children()).map(|l| letter_bits(d, l as u8)).collect(),
    };
    let root = LatticePoint::splat(d, -cube_offset(k))?;
    match prune {
        None => walk.visit(key, root, 0, None),
        Some((target, _)) => {
            let sub = walk.relevant(&root, 0, target.points());
            if sub.is_empty() {
                walk.unresolved.push((root, 0));
            } else {
                walk.visit(key, root, 0, Some(&sub));
            }
        }
    }
    Ok(PercolationSample {
        params: *params,
        survivors: PointSet::new(d, walk.survivors)?,
        seed,
        key,
        pruned_against: prune.map(|(t, _)| t.clone()),
        level_counts: walk.level_counts,
        unresolved: walk.unresolved,
    })
}

/// Full top-down sample of `Q_d(p; k)` for a user seed.
pub fn sample(params: &PercolationParams, seed: u64) -> Result<PercolationSample> {
    run(params, StreamKey::new(seed), seed, None)
}

/// Full sample whose root key is supplied directly.
pub fn sample_from_key(params: &PercolationParams, key: StreamKey) -> Result<PercolationSample> {
    run(params, key, key.raw(), None)
}

/// Whether `x` survives in the sample with root key `key`, evaluating only
/// the `k` coins on its root path.
pub fn survives(params: &PercolationParams, key: StreamKey, x: &LatticePoint) -> Result<bool> {
    if x.dim() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            found: x.dim(),
        });
    }
    let Ok(word) = point_to_word(x, params.k()) else {
        return Ok(false);
    };
    Ok(survives_path(params, key, &word))
}

/// [`survives`] for a leaf given by its word; words shorter than `k` ask
/// whether the vertex is connected to the root.
pub fn survives_path(params: &PercolationParams, key: StreamKey, word: &TreeWord) -> bool {
    let mut node = key;
    for &l in word.letters() {
        node = node.split(l as u64);
        if !node.coin(params.p()) {
            return false;
        }
    }
    true
}

fn zero_box(d: usize) -> Result<LatticeBox> {
    let z = LatticePoint::origin(d)?;
    LatticeBox::new(z, z)
}

/// Sample that only expands vertices whose block, Minkowski-summed with
/// `partner_box`, can meet `target`. Survivors equal the full sample's
/// survivors inside that relevance region for the same seed.
pub fn sample_pruned(
    params: &PercolationParams,
    seed: u64,
    target: &PointSet,
    partner_box: Option<LatticeBox>,
) -> Result<PercolationSample> {
    sample_pruned_impl(params, StreamKey::new(seed), seed, target, partner_box)
}

pub fn sample_pruned_from_key(
    params: &PercolationParams,
    key: StreamKey,
    target: &PointSet,
    partner_box: Option<LatticeBox>,
) -> Result<PercolationSample> {
    sample_pruned_impl(params, key, key.raw(), target, partner_box)
}

fn sample_pruned_impl(
    params: &PercolationParams,
    key: StreamKey,
    seed: u64,
    target: &PointSet,
    partner_box: Option<LatticeBox>,
) -> Result<PercolationSample> {
    if target.is_empty() {
        return Err(Error::EmptySet);
    }
    if target.dim() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            found: target.dim(),
        });
    }
    let partner = match partner_box {
        Some(b) if b.dim() != params.d() => {
            return Err(Error::DimensionMismatch {
                expected: params.d(),
                found: b.dim(),
            })
        }
        Some(b) => b,
        None => zero_box(params.d())?,
    };
    run(params, key, seed, Some((target, partner)))
}
