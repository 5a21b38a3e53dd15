//! Integer-lattice geometry: points, finite point sets, boxes, Minkowski
//! algebra and the centered dyadic cubes `[-2^{k-1}, 2^{k-1})^d`.

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(Error::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// A point of `Z^d`, `1 <= d <= 8`. Unused trailing slots are always zero, so
/// the derived ordering is lexicographic in the coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0i64; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(LatticePoint {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(LatticePoint {
            coords: [0; MAX_DIM],
            dim: dim as u8,
        })
    }

    /// `value * e_axis`.
    pub fn axis(dim: usize, axis: usize, value: i64) -> Result<Self> {
        let mut p = Self::origin(dim)?;
        if axis >= dim {
            return Err(Error::InvalidParameter(format!("axis {axis} >= dimension {dim}")));
        }
        p.coords[axis] = value;
        Ok(p)
    }

    /// Every coordinate equal to `value`.
    pub fn splat(dim: usize, value: i64) -> Result<Self> {
        check_dim(dim)?;
        let mut c = [0i64; MAX_DIM];
        c[..dim].iter_mut().for_each(|x| *x = value);
        Ok(LatticePoint {
            coords: c,
            dim: dim as u8,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i64 {
        self.coords[axis]
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = self.coords[i].checked_add(other.coords[i]).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = self.coords[i].checked_sub(other.coords[i]).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    pub fn checked_neg(&self) -> Result<Self> {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = self.coords[i].checked_neg().ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    /// Exact squared Euclidean distance.
    #[inline]
    pub fn dist2(&self, other: &Self) -> u128 {
        let mut s: u128 = 0;
        for i in 0..self.dim() {
            let diff = self.coords[i] as i128 - other.coords[i] as i128;
            s += (diff * diff) as u128;
        }
        s
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.coords()
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in self.coords() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        Ok(())
    }
}

/// Closed axis-aligned box `[lo, hi]` (inclusive corners).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    pub lo: LatticePoint,
    pub hi: LatticePoint,
}

impl LatticeBox {
    pub fn new(lo: LatticePoint, hi: LatticePoint) -> Result<Self> {
        lo.same_dim(&hi)?;
        if (0..lo.dim()).any(|i| lo.coord(i) > hi.coord(i)) {
            return Err(Error::InvalidParameter(format!(
                "box corners out of order: {lo:?} > {hi:?}"
            )));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// The cube `corner + [0, side)^d`.
    pub fn cube(corner: LatticePoint, side: i64) -> Self {
        let mut hi = corner;
        for i in 0..corner.dim() {
            hi.coords[i] = corner.coords[i] + side - 1;
        }
        LatticeBox { lo: corner, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    #[inline]
    pub fn contains(&self, p: &LatticePoint) -> bool {
        (0..self.dim()).all(|i| self.lo.coords[i] <= p.coords[i] && p.coords[i] <= self.hi.coords[i])
    }

    pub fn intersects(&self, other: &LatticeBox) -> bool {
        (0..self.dim()).all(|i| self.lo.coords[i] <= other.hi.coords[i] && other.lo.coords[i] <= self.hi.coords[i])
    }

    /// Box Minkowski sum, `[lo1+lo2, hi1+hi2]`.
    pub fn minkowski(&self, other: &LatticeBox) -> Result<LatticeBox> {
        Ok(LatticeBox {
            lo: self.lo.checked_add(&other.lo)?,
            hi: self.hi.checked_add(&other.hi)?,
        })
    }

    pub fn negate(&self) -> Result<LatticeBox> {
        Ok(LatticeBox {
            lo: self.hi.checked_neg()?,
            hi: self.lo.checked_neg()?,
        })
    }

    /// Number of lattice points, saturating.
    pub fn len(&self) -> u128 {
        (0..self.dim())
            .map(|i| (self.hi.coords[i] as i128 - self.lo.coords[i] as i128 + 1) as u128)
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All lattice points of the box in lexicographic order.
    pub fn points(&self) -> Vec<LatticePoint> {
        let d = self.dim();
        let mut out = Vec::new();
        let mut cur = self.lo;
        loop {
            out.push(cur);
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur.coords[axis] < self.hi.coords[axis] {
                    cur.coords[axis] += 1;
                    break;
                }
                cur.coords[axis] = self.lo.coords[axis];
            }
        }
    }
}

/// Finite set of lattice points of a common dimension, stored sorted in
/// lexicographic order with a hash index for membership.
#[derive(Clone)]
pub struct PointSet {
    dim: usize,
    points: Vec<LatticePoint>,
    index: HashSet<LatticePoint>,
    bbox: Option<LatticeBox>,
    diam: OnceLock<f64>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }
}

impl Eq for PointSet {}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointSet")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .finish()
    }
}

impl PointSet {
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    /// Builds a set from arbitrary points; duplicates are removed.
    pub fn new(dim: usize, mut points: Vec<LatticePoint>) -> Result<Self> {
        check_dim(dim)?;
        if let Some(bad) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self::from_sorted_unchecked(dim, points))
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, points: Vec<LatticePoint>) -> Self {
        let bbox = points.first().map(|first| {
            let mut lo = *first;
            let mut hi = *first;
            for p in &points {
                for i in 0..dim {
                    lo.coords[i] = lo.coords[i].min(p.coords[i]);
                    hi.coords[i] = hi.coords[i].max(p.coords[i]);
                }
            }
            LatticeBox { lo, hi }
        });
        let index = points.iter().copied().collect();
        PointSet {
            dim,
            points,
            index,
            bbox,
            diam: OnceLock::new(),
        }
    }

    /// Convenience constructor from coordinate rows.
    pub fn from_coords<R: AsRef<[i64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let pts = rows
            .iter()
            .map(|r| LatticePoint::new(r.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, pts)
    }

    pub fn singleton(p: LatticePoint) -> Self {
        Self::from_sorted_unchecked(p.dim(), vec![p])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &LatticePoint> {
        self.points.iter()
    }

    #[inline]
    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.index.contains(p)
    }

    pub fn bbox(&self) -> Option<LatticeBox> {
        self.bbox
    }

    /// Position of `p` in the sorted order.
    pub fn position(&self, p: &LatticePoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Exact maximal squared pairwise distance.
    pub fn diameter2(&self) -> u128 {
        let pts = &self.points;
        let mut best = 0u128;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.max(pts[i].dist2(&pts[j]));
            }
        }
        best
    }

    /// Euclidean diameter; 0 for a singleton.
    pub fn diameter(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(*self.diam.get_or_init(|| (self.diameter2() as f64).sqrt()))
    }

    fn check_same_dim(&self, other: &PointSet) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        } else {
            Ok(())
        }
    }

    pub fn translate(&self, v: &LatticePoint) -> Result<PointSet> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        // translation preserves lexicographic order
        let pts = self
            .points
            .iter()
            .map(|p| p.checked_add(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_sorted_unchecked(self.dim, pts))
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        self.check_same_dim(other)?;
        let mut pts = Vec::with_capacity(self.len() + other.len());
        pts.extend_from_slice(&self.points);
        pts.extend_from_slice(&other.points);
        PointSet::new(self.dim, pts)
    }

    pub fn intersection(&self, other: &PointSet) -> Result<PointSet> {
        self.check_same_dim(other)?;
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let pts = small.points.iter().filter(|p| big.contains(p)).copied().collect();
        Ok(Self::from_sorted_unchecked(self.dim, pts))
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.dim == other.dim && self.points.iter().all(|p| other.contains(p))
    }

    /// True when `self ∩ other` is nonempty.
    pub fn meets(&self, other: &PointSet) -> bool {
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.points.iter().any(|p| big.contains(p))
    }

    pub fn filter<F: FnMut(&LatticePoint) -> bool>(&self, mut keep: F) -> PointSet {
        let pts = self.points.iter().filter(|p| keep(p)).copied().collect();
        Self::from_sorted_unchecked(self.dim, pts)
    }

    pub fn into_points(self) -> Vec<LatticePoint> {
        self.points
    }
}

/// `{a + b : a ∈ A, b ∈ B}`, deduplicated.
pub fn minkowski_sum(a: &PointSet, b: &PointSet) -> Result<PointSet> {
    a.check_same_dim(b)?;
    let mut pts = Vec::with_capacity(a.len() * b.len());
    for x in a.iter() {
        for y in b.iter() {
            pts.push(x.checked_add(y)?);
        }
    }
    PointSet::new(a.dim, pts)
}

/// `{-x : x ∈ A}`.
pub fn negate(a: &PointSet) -> Result<PointSet> {
    let pts = a.iter().map(|p| p.checked_neg()).collect::<Result<Vec<_>>>()?;
    PointSet::new(a.dim, pts)
}

/// `A - B = A + (-B)`.
pub fn difference_set(a: &PointSet, b: &PointSet) -> Result<PointSet> {
    minkowski_sum(a, &negate(b)?)
}

pub fn diameter(a: &PointSet) -> Result<f64> {
    a.diameter()
}

/// Offset of the centered cube of level `k`: `Δ_k = [-off, 2^k - off)^d`
/// with `off = 2^{k-1}` for `k >= 1` and `off = 0` for `k = 0`.
#[inline]
pub fn cube_offset(level: u32) -> i64 {
    if level == 0 {
        0
    } else {
        1i64 << (level - 1)
    }
}

/// `Δ_k = [-2^{k-1}, 2^{k-1})^d ∩ Z^d`, with `Δ_0 = {0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CenteredCube {
    dim: usize,
    level: u32,
}

impl CenteredCube {
    pub fn new(dim: usize, level: u32) -> Result<Self> {
        check_dim(dim)?;
        if level > 40 {
            return Err(Error::InvalidParameter(format!("cube level {level} too large")));
        }
        Ok(CenteredCube { dim, level })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> i64 {
        1i64 << self.level
    }

    pub fn offset(&self) -> i64 {
        cube_offset(self.level)
    }

    #[inline]
    pub fn contains(&self, p: &LatticePoint) -> bool {
        let off = self.offset();
        let side = self.side();
        p.dim() == self.dim && p.coords().iter().all(|&c| c >= -off && c < side - off)
    }

    /// `|Δ_k| = 2^{dk}`.
    pub fn len(&self) -> u128 {
        1u128 << (self.dim as u32 * self.level)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bbox(&self) -> LatticeBox {
        let lo = LatticePoint::splat(self.dim, -self.offset()).expect("valid dim");
        LatticeBox::cube(lo, self.side())
    }

    pub fn to_point_set(&self) -> PointSet {
        PointSet::from_sorted_unchecked(self.dim, self.bbox().points())
    }
}

/// Writes a point set in the text format: a `d=<int>` line followed by one
/// point per line.
pub fn write_point_set(set: &PointSet) -> String {
    let mut s = format!("d={}\n", set.dim());
    for p in set.iter() {
        s.push_str(&p.to_string());
        s.push('\n');
    }
    s
}

/// Writes points with a trailing weight column.
pub fn write_weighted(set: &PointSet, weights: &[f64]) -> String {
    let mut s = format!("d={}\n", set.dim());
    for (p, w) in set.iter().zip(weights) {
        s.push_str(&format!("{p} {w}\n"));
    }
    s
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_header(lines: &mut dyn Iterator<Item = (usize, &str)>) -> Result<usize> {
    let (ln, first) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing `d=<int>` header".into(),
    })?;
    let d = first
        .strip_prefix("d=")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::Parse {
            line: ln,
            msg: format!("expected `d=<int>`, found `{first}`"),
        })?;
    check_dim(d)?;
    Ok(d)
}

fn parse_row(ln: usize, line: &str, d: usize, weighted: bool) -> Result<(LatticePoint, Option<f64>)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let want = d + weighted as usize;
    if fields.len() != want {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected {want} fields, found {}", fields.len()),
        });
    }
    let coords = fields[..d]
        .iter()
        .map(|f| {
            f.parse::<i64>().map_err(|e| Error::Parse {
                line: ln,
                msg: format!("bad coordinate `{f}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let w = if weighted {
        Some(fields[d].parse::<f64>().map_err(|e| Error::Parse {
            line: ln,
            msg: format!("bad weight `{}`: {e}", fields[d]),
        })?)
    } else {
        None
    };
    Ok((LatticePoint::new(&coords)?, w))
}

pub fn parse_point_set(text: &str) -> Result<PointSet> {
    let mut lines = content_lines(text);
    let d = parse_header(&mut lines)?;
    let pts = lines
        .map(|(ln, line)| parse_row(ln, line, d, false).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    PointSet::new(d, pts)
}

/// Parses the weighted variant; weights of duplicate points are summed.
pub fn parse_weighted(text: &str) -> Result<(PointSet, Vec<f64>)> {
    let mut lines = content_lines(text);
    let d = parse_header(&mut lines)?;
    let mut rows = Vec::new();
    for (ln, line) in lines {
        let (p, w) = parse_row(ln, line, d, true)?;
        rows.push((p, w.unwrap_or(0.0)));
    }
    let set = PointSet::new(d, rows.iter().map(|r| r.0).collect())?;
    let mut weights = vec![0.0; set.len()];
    for (p, w) in rows {
        let idx = set.position(&p).expect("point was inserted");
        weights[idx] += w;
    }
    Ok((set, weights))
}
