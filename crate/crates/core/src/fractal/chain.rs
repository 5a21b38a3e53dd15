use rayon::prelude::*;

use super::{PercolationParams, PercolationSample, TreeWord};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::chi_square_sf;

/// Largest tree whose full leaf chain is materialized.
pub const MAX_CHAIN_LEAVES: u64 = 1 << 22;

/// Edge indicators `(y_{i1}, …, y_{ik})` along the root path of leaf `u_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeafChainState {
    pub bits: Vec<bool>,
}

impl LeafChainState {
    pub fn is_open_path(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// State as an integer with `y_{i1}` in the highest of `k` bits.
    pub fn code(&self) -> usize {
        self.bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }
}

/// `Y_1, …, Y_{2^{dk}}` for a full sample, recomputed from its key.
pub fn leaf_chain(sample: &PercolationSample) -> Result<Vec<LeafChainState>> {
    if sample.is_pruned() {
        return Err(Error::InvalidParameter("leaf chain needs an unpruned sample".into()));
    }
    let pp = sample.params;
    let total_bits = pp.d() as u32 * pp.k();
    if total_bits > MAX_CHAIN_LEAVES.trailing_zeros() {
        return Err(Error::SupportTooLarge {
            size: 1usize << total_bits.min(63),
            limit: MAX_CHAIN_LEAVES as usize,
        });
    }
    let mut out = Vec::with_capacity(1usize << total_bits);
    let mut path = Vec::with_capacity(pp.k() as usize);
    walk(&pp, sample.key, &mut path, &mut out);
    Ok(out)
}

fn walk(pp: &PercolationParams, key: StreamKey, path: &mut Vec<bool>, out: &mut Vec<LeafChainState>) {
    if path.len() == pp.k() as usize {
        out.push(LeafChainState { bits: path.clone() });
        return;
    }
    for letter in 0..pp.children() {
        let child = key.split(letter as u64);
        path.push(child.coin(pp.p()));
        walk(pp, child, path, out);
        path.pop();
    }
}

fn path_state(pp: &PercolationParams, root: StreamKey, w: &TreeWord) -> LeafChainState {
    let mut key = root;
    let bits = w
        .letters()
        .iter()
        .map(|&l| {
            key = key.split(l as u64);
            key.coin(pp.p())
        })
        .collect();
    LeafChainState { bits }
}

/// One-step kernel of the leaf chain: the first `shared` bits are copied,
/// the remaining `k − shared` are fresh Bernoulli(p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionKernel {
    pub k: u32,
    pub shared: u32,
    pub p: f64,
}

impl TransitionKernel {
    /// Probability of moving from state code `from` to `to`.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        let fresh = self.k - self.shared;
        if from >> fresh != to >> fresh {
            return 0.0;
        }
        let ones = (to & ((1usize << fresh) - 1)).count_ones() as i32;
        self.p.powi(ones) * (1.0 - self.p).powi(fresh as i32 - ones)
    }

    /// Dense `2^k × 2^k` matrix; rows are `from`.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>> {
        if self.k > 12 {
            return Err(Error::SupportTooLarge {
                size: 1 << self.k.min(62),
                limit: 1 << 12,
            });
        }
        let n = 1usize << self.k;
        Ok((0..n).map(|f| (0..n).map(|t| self.prob(f, t)).collect()).collect())
    }
}

fn check_index(pp: &PercolationParams, i: u64) -> Result<u64> {
    let leaves = 1u64 << (pp.d() as u32 * pp.k());
    if i == 0 || i >= leaves {
        return Err(Error::IndexOutOfRange {
            index: i,
            limit: leaves,
        });
    }
    Ok(leaves)
}

/// Kernel of `Y_i → Y_{i+1}` (leaves numbered from 1 in lexicographic order).
pub fn chain_transition_kernel(params: &PercolationParams, i: u64) -> Result<TransitionKernel> {
    check_index(params, i)?;
    let d = params.d() as u32;
    let k = params.k();
    let a = TreeWord::from_index(params.d(), k, i - 1)?;
    let b = TreeWord::from_index(params.d(), k, i)?;
    let shared = a.common_prefix(&b) as u32;
    debug_assert_eq!(shared, k - 1 - (63 - ((i - 1) ^ i).leading_zeros()) / d);
    Ok(TransitionKernel {
        k,
        shared,
        p: params.p(),
    })
}

#[derive(Clone, Debug)]
pub struct ChiSquareReport {
    pub index: u64,
    pub kernel: TransitionKernel,
    pub trials: u64,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Transitions observed that the kernel forbids.
    pub impossible: u64,
}

impl ChiSquareReport {
    pub fn passes(&self, significance: f64) -> bool {
        self.impossible == 0 && self.p_value >= significance
    }
}

/// Goodness-of-fit of observed `(Y_i, Y_{i+1})` pairs over `trials`
/// independent trees against [`chain_transition_kernel`]. Cells with
/// expected count below 5 are pooled within their row.
pub fn chain_chi_square(params: &PercolationParams, i: u64, trials: u64, seed: u64) -> Result<ChiSquareReport> {
    check_index(params, i)?;
    if params.k() > 12 {
        return Err(Error::InvalidParameter("chi-square test supports k ≤ 12".into()));
    }
    let kernel = chain_transition_kernel(params, i)?;
    let a = TreeWord::from_index(params.d(), params.k(), i - 1)?;
    let b = TreeWord::from_index(params.d(), params.k(), i)?;
    let n = 1usize << params.k();
    let root = StreamKey::new(seed);
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; n * n],
            |mut acc, t| {
                let key = root.split(t);
                let from = path_state(params, key, &a).code();
                let to = path_state(params, key, &b).code();
                acc[from * n + to] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n * n],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );

    let (statistic, df, impossible) = goodness_of_fit(&counts, n, &kernel);
    let p_value = if df == 0 { 1.0 } else { chi_square_sf(statistic, df) };
    Ok(ChiSquareReport {
        index: i,
        kernel,
        trials,
        statistic,
        df,
        p_value,
        impossible,
    })
}

/// Pooled Pearson statistic, degrees of freedom and count of forbidden
/// transitions for an `n × n` table of `(from, to)` counts.
fn goodness_of_fit(counts: &[u64], n: usize, kernel: &TransitionKernel) -> (f64, usize, u64) {
    let mut statistic = 0.0;
    let mut df = 0usize;
    let mut impossible = 0u64;
    for from in 0..n {
        let row = &counts[from * n..(from + 1) * n];
        let total: u64 = row.iter().sum();
        if total == 0 {
            continue;
        }
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let mut pool = (0.0, 0.0);
        for (to, &obs) in row.iter().enumerate() {
            let pr = kernel.prob(from, to);
            if pr == 0.0 {
                impossible += obs;
                continue;
            }
            let exp = pr * total as f64;
            if exp < 5.0 {
                pool.0 += obs as f64;
                pool.1 += exp;
            } else {
                cells.push((obs as f64, exp));
            }
        }
        if pool.1 > 0.0 {
            if pool.1 >= 5.0 || cells.is_empty() {
                cells.push(pool);
            } else {
                let smallest = cells.iter_mut().min_by(|x, y| x.1.total_cmp(&y.1)).expect("nonempty");
                smallest.0 += pool.0;
                smallest.1 += pool.1;
            }
        }
        if cells.len() < 2 {
            continue;
        }
        df += cells.len() - 1;
        statistic += cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum::<f64>();
    }
    (statistic, df, impossible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{leaf_index, sample, sample_pruned};
    use crate::lattice::PointSet;

    #[test]
    fn k1_d1_states_are_the_two_edges() {
        let pp = PercolationParams::new(1, 0.5, 1).unwrap();
        for seed in 0..20 {
            let s = sample(&pp, seed).unwrap();
            let chain = leaf_chain(&s).unwrap();
            assert_eq!(chain.len(), 2);
            assert_eq!(chain[0].bits, vec![s.key.split(0).coin(0.5)]);
            assert_eq!(chain[1].bits, vec![s.key.split(1).coin(0.5)]);
        }
    }

    #[test]
    fn open_paths_are_survivors() {
        let pp = PercolationParams::new(2, 0.6, 4).unwrap();
        for seed in 0..30 {
            let s = sample(&pp, seed).unwrap();
            let chain = leaf_chain(&s).unwrap();
            let open: Vec<u64> = chain
                .iter()
                .enumerate()
                .filter(|(_, y)| y.is_open_path())
                .map(|(i, _)| i as u64)
                .collect();
            let mut surv: Vec<u64> = s.survivors.iter().map(|x| leaf_index(x, 4).unwrap()).collect();
            surv.sort();
            assert_eq!(open, surv);
        }
    }

    #[test]
    fn pruned_samples_rejected() {
        let pp = PercolationParams::new(1, 0.6, 2).unwrap();
        let t = PointSet::from_coords(1, &[[0]]).unwrap();
        assert!(leaf_chain(&sample_pruned(&pp, 0, &t, None).unwrap()).is_err());
    }

    #[test]
    fn kernel_shapes() {
        let pp = PercolationParams::new(1, 0.3, 3).unwrap();
        // leaves 1,2 are (0,0,0),(0,0,1)
        assert_eq!(chain_transition_kernel(&pp, 1).unwrap().shared, 2);
        // leaves 4,5 are (0,1,1),(1,0,0)
        let kern = chain_transition_kernel(&pp, 4).unwrap();
        assert_eq!(kern.shared, 0);
        let m = kern.matrix().unwrap();
        for row in &m {
            assert_eq!(row, &m[0]);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(chain_transition_kernel(&pp, 0).is_err());
        assert!(chain_transition_kernel(&pp, 8).is_err());
        let pp2 = PercolationParams::new(2, 0.3, 2).unwrap();
        assert_eq!(chain_transition_kernel(&pp2, 3).unwrap().shared, 1);
        assert_eq!(chain_transition_kernel(&pp2, 4).unwrap().shared, 0);
    }

    #[test]
    fn copies_shared_prefix() {
        let kern = TransitionKernel {
            k: 3,
            shared: 2,
            p: 0.25,
        };
        assert_eq!(kern.prob(0b110, 0b111), 0.25);
        assert_eq!(kern.prob(0b110, 0b110), 0.75);
        assert_eq!(kern.prob(0b110, 0b011), 0.0);
    }

    #[test]
    fn second_edge_resampled_conditional_rate() {
        // d=1, k=2, leaves 1 and 2 share the first edge.
        let p = 0.6;
        let pp = PercolationParams::new(1, p, 2).unwrap();
        let (mut cond, mut hit) = (0u64, 0u64);
        for seed in 0..100_000u64 {
            let chain = leaf_chain(&sample(&pp, seed).unwrap()).unwrap();
            if chain[0].bits == [true, false] {
                cond += 1;
                hit += (chain[1].bits == [true, true]) as u64;
            }
        }
        let (lo, hi) = crate::stats::wilson(hit, cond, 0.999);
        assert!(lo <= p && p <= hi, "{hit}/{cond}");
    }

    #[test]
    fn chi_square_accepts_true_kernel() {
        let pp = PercolationParams::new(2, 0.55, 3).unwrap();
        for i in [1, 4, 16, 33] {
            let rep = chain_chi_square(&pp, i, 100_000, 7 + i).unwrap();
            assert_eq!(rep.impossible, 0);
            assert!(rep.p_value >= 0.001, "{rep:?}");
        }
    }

    #[test]
    fn wrong_kernel_is_rejected() {
        // Pretend leaves 2,3 of d=1,k=3 were independent: fit the true pairs against that.
        let pp = PercolationParams::new(1, 0.5, 3).unwrap();
        let a = TreeWord::from_index(1, 3, 1).unwrap();
        let b = TreeWord::from_index(1, 3, 2).unwrap();
        let mut counts = vec![0u64; 64];
        for t in 0..20_000 {
            let key = StreamKey::new(3).split(t);
            counts[path_state(&pp, key, &a).code() * 8 + path_state(&pp, key, &b).code()] += 1;
        }
        let right = chain_transition_kernel(&pp, 2).unwrap();
        let (_, _, bad) = goodness_of_fit(&counts, 8, &right);
        assert_eq!(bad, 0);
        let wrong = TransitionKernel { shared: 0, ..right };
        let (stat, df, _) = goodness_of_fit(&counts, 8, &wrong);
        assert!(chi_square_sf(stat, df) < 1e-6);
    }
}
