//! Set algebra over finite unions of axis-aligned half-open boxes.
//!
//! Every parameter-space region in the crate (rule intervals, leaf intervals,
//! braid cells, solver partitions) is an [`IntervalSet`]. Boxes are `[lo, hi)`
//! in every dimension. Sets are kept in a canonical slab form: the region is
//! cut along dimension 0 at exactly the coordinates where its cross-section
//! changes, and each cross-section is canonical in the remaining dimensions.
//! Two sets covering the same region therefore hold identical box lists, no
//! matter which sequence of operations produced them.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension index {index} out of range for a {dims}-dimensional space")]
    InvalidDimension { index: usize, dims: usize },
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("bound must be finite")]
    NonFiniteBound,
    #[error("cannot sample from an empty or zero-volume set")]
    EmptySet,
}

/// Comparison of a parameter coordinate against a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bound {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Bound {
    /// True when the satisfied set lies below the bound.
    ///
    /// Strict and non-strict forms share the same half-open set: `x < c` and
    /// `x <= c` both map to `[lo, c)`, `x > c` and `x >= c` to `[c, hi)`.
    pub fn is_lower(self) -> bool {
        matches!(self, Bound::Lt | Bound::Le)
    }

    pub fn complement(self) -> Bound {
        match self {
            Bound::Lt => Bound::Ge,
            Bound::Le => Bound::Gt,
            Bound::Gt => Bound::Le,
            Bound::Ge => Bound::Lt,
        }
    }
}

/// One named parameter with its domain `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDim<T> {
    pub name: String,
    pub lo: T,
    pub hi: T,
}

/// The product of parameter domains; the initial solver partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace<T> {
    dims: Vec<ParamDim<T>>,
}

impl<T: Scalar> ParamSpace<T> {
    pub fn new(dims: Vec<ParamDim<T>>) -> Result<Self, IntervalError> {
        for (i, d) in dims.iter().enumerate() {
            if !(d.lo < d.hi) || !d.lo.is_finite() || !d.hi.is_finite() {
                return Err(IntervalError::InvalidSpace(format!(
                    "dimension '{}' has lo={} hi={}",
                    d.name, d.lo, d.hi
                )));
            }
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(IntervalError::InvalidSpace(format!(
                    "duplicate dimension name '{}'",
                    d.name
                )));
            }
        }
        Ok(Self { dims })
    }

    /// Unit hypercube `[0,1)^n` with names `theta1..thetan`.
    pub fn unit(n: usize) -> Self {
        let dims = (1..=n)
            .map(|i| ParamDim {
                name: format!("theta{i}"),
                lo: T::zero(),
                hi: T::one(),
            })
            .collect();
        Self { dims }
    }

    pub fn dims(&self) -> &[ParamDim<T>] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn full_box(&self) -> ParamBox<T> {
        ParamBox {
            lo: self.dims.iter().map(|d| d.lo).collect(),
            hi: self.dims.iter().map(|d| d.hi).collect(),
        }
    }

    pub fn full(&self) -> IntervalSet<T> {
        IntervalSet::from_box(self.full_box())
    }

    pub fn volume(&self) -> T {
        self.dims
            .iter()
            .map(|d| d.hi - d.lo)
            .fold(T::one(), |a, b| a * b)
    }

    /// Whether `p` lies inside the half-open domain box.
    pub fn contains(&self, p: &[T]) -> bool {
        p.len() == self.dims.len() && self.dims.iter().zip(p).all(|(d, &x)| d.lo <= x && x < d.hi)
    }

    /// The subset of the domain where `theta[dim] <op> bound` holds.
    pub fn from_constraint(
        &self,
        dim: usize,
        op: Bound,
        bound: T,
    ) -> Result<IntervalSet<T>, IntervalError> {
        if dim >= self.dims.len() {
            return Err(IntervalError::InvalidDimension {
                index: dim,
                dims: self.dims.len(),
            });
        }
        if !bound.is_finite() {
            return Err(IntervalError::NonFiniteBound);
        }
        Ok(IntervalSet::from_box(self.half_space(
            dim,
            op.is_lower(),
            bound,
        )))
    }

    /// `[lo, c)` (below) or `[c, hi)` in dimension `dim`, full elsewhere. The
    /// result may be an empty box.
    pub(crate) fn half_space(&self, dim: usize, below: bool, bound: T) -> ParamBox<T> {
        let mut b = self.full_box();
        let d = &self.dims[dim];
        let c = bound.max(d.lo).min(d.hi);
        if below {
            b.hi[dim] = c;
        } else {
            b.lo[dim] = c;
        }
        b
    }
}

/// A single axis-aligned half-open box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> ParamBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners must have equal length");
        Self { lo, hi }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h))
    }

    pub fn volume(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(T::one(), |acc, (&l, &h)| acc * (h - l))
    }

    pub fn contains(&self, p: &[T]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(p)
            .all(|((&l, &h), &x)| l <= x && x < h)
    }

    pub fn intersect(&self, other: &ParamBox<T>) -> Option<ParamBox<T>> {
        let mut out = self.clone();
        for d in 0..self.dims() {
            out.lo[d] = out.lo[d].max(other.lo[d]);
            out.hi[d] = out.hi[d].min(other.hi[d]);
            if !(out.lo[d] < out.hi[d]) {
                return None;
            }
        }
        Some(out)
    }

    /// `self \ other` by sweeping dimensions; at most `2n` pieces.
    pub fn subtract(&self, other: &ParamBox<T>) -> Vec<ParamBox<T>> {
        if self.intersect(other).is_none() {
            return vec![self.clone()];
        }
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for d in 0..self.dims() {
            if rest.lo[d] < other.lo[d] {
                let mut piece = rest.clone();
                piece.hi[d] = other.lo[d];
                pieces.push(piece);
                rest.lo[d] = other.lo[d];
            }
            if rest.hi[d] > other.hi[d] {
                let mut piece = rest.clone();
                piece.lo[d] = other.hi[d];
                pieces.push(piece);
                rest.hi[d] = other.hi[d];
            }
        }
        pieces
    }

    fn lex_cmp(&self, other: &ParamBox<T>) -> Ordering {
        let key = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
        for (a, b) in self.lo.iter().zip(&other.lo) {
            match key(a, b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        for (a, b) in self.hi.iter().zip(&other.hi) {
            match key(a, b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl<T: Scalar> fmt::Display for ParamBox<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in 0..self.dims() {
            if d > 0 {
                f.write_str("x")?;
            }
            write!(f, "[{},{})", self.lo[d], self.hi[d])?;
        }
        Ok(())
    }
}

/// Finite disjoint union of boxes in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet<T> {
    dims: usize,
    boxes: Vec<ParamBox<T>>,
}

impl<T: Scalar> IntervalSet<T> {
    pub fn empty(dims: usize) -> Self {
        Self {
            dims,
            boxes: Vec::new(),
        }
    }

    pub fn from_box(b: ParamBox<T>) -> Self {
        let dims = b.dims();
        if b.is_empty() {
            Self::empty(dims)
        } else {
            Self {
                dims,
                boxes: vec![b],
            }
        }
    }

    /// Builds the canonical union of arbitrary (possibly overlapping) boxes.
    pub fn from_boxes(dims: usize, boxes: Vec<ParamBox<T>>) -> Result<Self, IntervalError> {
        if let Some(b) = boxes.iter().find(|b| b.dims() != dims) {
            return Err(IntervalError::DimensionMismatch {
                expected: dims,
                found: b.dims(),
            });
        }
        Ok(Self {
            dims,
            boxes: canonicalize(dims, boxes),
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn boxes(&self) -> &[ParamBox<T>] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn volume(&self) -> T {
        self.boxes.iter().map(|b| b.volume()).sum()
    }

    fn check(&self, other: &Self) -> Result<(), IntervalError> {
        if self.dims != other.dims {
            return Err(IntervalError::DimensionMismatch {
                expected: self.dims,
                found: other.dims,
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &[T]) -> Result<bool, IntervalError> {
        if p.len() != self.dims {
            return Err(IntervalError::DimensionMismatch {
                expected: self.dims,
                found: p.len(),
            });
        }
        Ok(self.boxes.iter().any(|b| b.contains(p)))
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, IntervalError> {
        self.check(other)?;
        if self.is_empty() || other.is_empty() {
            return Ok(Self::empty(self.dims));
        }
        if self.boxes.len() == 1 && other.boxes.len() == 1 {
            // A single box is already canonical.
            return Ok(match self.boxes[0].intersect(&other.boxes[0]) {
                Some(b) => Self::from_box(b),
                None => Self::empty(self.dims),
            });
        }
        let mut out = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                if let Some(c) = a.intersect(b) {
                    out.push(c);
                }
            }
        }
        Ok(Self {
            dims: self.dims,
            boxes: canonicalize(self.dims, out),
        })
    }

    /// Intersection with a single box.
    pub fn intersect_box(&self, b: &ParamBox<T>) -> Result<Self, IntervalError> {
        self.intersect(&Self::from_box(b.clone()))
    }

    pub fn subtract(&self, other: &Self) -> Result<Self, IntervalError> {
        self.check(other)?;
        if self.is_empty() || other.is_empty() {
            return Ok(self.clone());
        }
        let mut pieces = self.boxes.clone();
        for b in &other.boxes {
            pieces = pieces.iter().flat_map(|p| p.subtract(b)).collect();
            if pieces.is_empty() {
                break;
            }
        }
        Ok(Self {
            dims: self.dims,
            boxes: canonicalize(self.dims, pieces),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self, IntervalError> {
        self.check(other)?;
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        let mut all = self.boxes.clone();
        all.extend(other.boxes.iter().cloned());
        Ok(Self {
            dims: self.dims,
            boxes: canonicalize(self.dims, all),
        })
    }

    /// Draws a point uniformly: a box with probability proportional to its
    /// volume, then a uniform point inside it.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<T>, IntervalError> {
        let total = self.volume().as_f64();
        if !(total > 0.0) {
            return Err(IntervalError::EmptySet);
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = &self.boxes[self.boxes.len() - 1];
        for b in &self.boxes {
            acc += b.volume().as_f64();
            if target < acc {
                chosen = b;
                break;
            }
        }
        let mut p = Vec::with_capacity(self.dims);
        for d in 0..self.dims {
            let lo = chosen.lo[d].as_f64();
            let hi = chosen.hi[d].as_f64();
            let x = T::of(lo + (hi - lo) * rng.random::<f64>());
            // rounding can land on the excluded upper face
            p.push(if x >= chosen.hi[d] || x < chosen.lo[d] {
                chosen.lo[d]
            } else {
                x
            });
        }
        Ok(p)
    }

    /// Total order over canonical sets, used for deterministic tie-breaking.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.boxes.iter().zip(&other.boxes) {
            match a.lex_cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.boxes.len().cmp(&other.boxes.len())
    }

    /// Single-line rendering, boxes separated by ` | `.
    pub fn dump_inline(&self) -> String {
        if self.is_empty() {
            return "empty".to_string();
        }
        self.boxes
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

impl<T: Scalar> fmt::Display for IntervalSet<T> {
    /// One box per line in canonical order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.boxes.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

fn canonicalize<T: Scalar>(dims: usize, boxes: Vec<ParamBox<T>>) -> Vec<ParamBox<T>> {
    let live: Vec<&ParamBox<T>> = boxes.iter().filter(|b| !b.is_empty()).collect();
    if live.is_empty() {
        return Vec::new();
    }
    if live.len() == 1 {
        return vec![live[0].clone()];
    }
    slabs(&live, 0, dims)
}

/// Canonical suffix boxes (dimensions `d..dims`) of the union of `boxes`.
fn slabs<T: Scalar>(boxes: &[&ParamBox<T>], d: usize, dims: usize) -> Vec<ParamBox<T>> {
    if d == dims {
        return if boxes.is_empty() {
            Vec::new()
        } else {
            vec![ParamBox {
                lo: Vec::new(),
                hi: Vec::new(),
            }]
        };
    }
    let mut cuts: Vec<T> = boxes.iter().flat_map(|b| [b.lo[d], b.hi[d]]).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    cuts.dedup();

    // (lo, hi, cross-section)
    let mut runs: Vec<(T, T, Vec<ParamBox<T>>)> = Vec::new();
    let mut covering: Vec<&ParamBox<T>> = Vec::with_capacity(boxes.len());
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        covering.clear();
        covering.extend(
            boxes
                .iter()
                .copied()
                .filter(|x| x.lo[d] <= a && x.hi[d] >= b),
        );
        if covering.is_empty() {
            continue;
        }
        let section = slabs(&covering, d + 1, dims);
        if section.is_empty() {
            continue;
        }
        match runs.last_mut() {
            Some((_, hi, prev)) if *hi == a && *prev == section => *hi = b,
            _ => runs.push((a, b, section)),
        }
    }

    let mut out = Vec::new();
    for (lo, hi, section) in runs {
        for s in section {
            let mut l = Vec::with_capacity(dims - d);
            let mut h = Vec::with_capacity(dims - d);
            l.push(lo);
            h.push(hi);
            l.extend(s.lo);
            h.extend(s.hi);
            out.push(ParamBox { lo: l, hi: h });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit2() -> ParamSpace<f64> {
        ParamSpace::unit(2)
    }

    fn bx(lo: &[f64], hi: &[f64]) -> IntervalSet<f64> {
        IntervalSet::from_box(ParamBox::new(lo.to_vec(), hi.to_vec()))
    }

    #[test]
    fn constraint_half_spaces() {
        let s = unit2();
        assert_eq!(
            s.from_constraint(0, Bound::Lt, 0.6).unwrap(),
            bx(&[0.0, 0.0], &[0.6, 1.0])
        );
        assert_eq!(
            s.from_constraint(0, Bound::Ge, 0.6).unwrap(),
            bx(&[0.6, 0.0], &[1.0, 1.0])
        );
        assert!(s.from_constraint(1, Bound::Gt, 1.5).unwrap().is_empty());
        assert!(matches!(
            s.from_constraint(2, Bound::Lt, 0.5),
            Err(IntervalError::InvalidDimension { .. })
        ));
        assert_eq!(
            s.from_constraint(0, Bound::Lt, f64::NAN),
            Err(IntervalError::NonFiniteBound)
        );
    }

    #[test]
    fn strict_and_non_strict_share_a_set() {
        let s = unit2();
        assert_eq!(
            s.from_constraint(1, Bound::Lt, 0.3).unwrap(),
            s.from_constraint(1, Bound::Le, 0.3).unwrap()
        );
        assert_eq!(
            s.from_constraint(1, Bound::Gt, 0.3).unwrap(),
            s.from_constraint(1, Bound::Ge, 0.3).unwrap()
        );
    }

    #[test]
    fn intersect_examples() {
        let a = bx(&[0.0, 0.0], &[0.6, 1.0]);
        let b = bx(&[0.5, 0.0], &[1.0, 1.0]);
        assert_eq!(a.intersect(&b).unwrap(), bx(&[0.5, 0.0], &[0.6, 1.0]));
        assert_eq!(a.intersect(&unit2().full()).unwrap(), a);
        let c = bx(&[0.0, 0.0], &[0.3, 1.0]);
        assert!(c.intersect(&b).unwrap().is_empty());
        let three = IntervalSet::<f64>::empty(3);
        assert!(matches!(
            a.intersect(&three),
            Err(IntervalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn subtract_examples() {
        let full = unit2().full();
        let left = bx(&[0.0, 0.0], &[0.5, 1.0]);
        assert_eq!(full.subtract(&left).unwrap(), bx(&[0.5, 0.0], &[1.0, 1.0]));
        assert!(left.subtract(&left).unwrap().is_empty());
    }

    #[test]
    fn frame_volume_matches_monte_carlo_count() {
        let full = unit2().full();
        let hole = bx(&[0.25, 0.25], &[0.75, 0.75]);
        let frame = full.subtract(&hole).unwrap();
        assert_eq!(frame.boxes().len(), 4);
        assert!((frame.volume() - 0.75).abs() < 1e-12);

        // independent membership count over uniform points
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut inside = 0usize;
        for _ in 0..n {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let in_hole = (0.25..0.75).contains(&p[0]) && (0.25..0.75).contains(&p[1]);
            if !in_hole {
                inside += 1;
            }
            assert_eq!(frame.contains(&p).unwrap(), !in_hole);
        }
        let est = inside as f64 / n as f64;
        assert!((est - 0.75).abs() < 0.005, "estimate {est}");
    }

    #[test]
    fn volume_examples() {
        assert_eq!(bx(&[0.0, 0.0], &[0.5, 0.5]).volume(), 0.25);
        assert_eq!(IntervalSet::<f64>::empty(2).volume(), 0.0);
        assert_eq!(ParamSpace::<f64>::unit(3).full().volume(), 1.0);
    }

    #[test]
    fn contains_respects_half_open_faces() {
        let a = bx(&[0.0, 0.0], &[0.5, 1.0]);
        assert!(!a.contains(&[0.5, 0.2]).unwrap());
        assert!(a.contains(&[0.0, 0.0]).unwrap());
        assert!(!IntervalSet::<f64>::empty(2).contains(&[0.1, 0.1]).unwrap());
        assert!(a.contains(&[0.1]).is_err());
    }

    #[test]
    fn sampling_membership_mean_and_determinism() {
        let a = bx(&[0.0, 0.0], &[0.5, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = a.sample_uniform(&mut rng).unwrap();
            assert!(p[0] < 0.5);
        }

        let full = unit2().full();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let p = full.sample_uniform(&mut rng).unwrap();
            mean[0] += p[0] / n as f64;
            mean[1] += p[1] / n as f64;
        }
        assert!((mean[0] - 0.5).abs() < 0.02 && (mean[1] - 0.5).abs() < 0.02);

        let p1 = full
            .sample_uniform(&mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        let p2 = full
            .sample_uniform(&mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        assert_eq!(p1, p2);

        assert_eq!(
            IntervalSet::<f64>::empty(2).sample_uniform(&mut rng),
            Err(IntervalError::EmptySet)
        );
    }

    #[test]
    fn canonical_equality_across_operation_orders() {
        let full = unit2().full();
        let a = bx(&[0.0, 0.0], &[0.5, 1.0]);
        let b = bx(&[0.0, 0.0], &[1.0, 0.5]);
        // L-shape built two ways
        let l1 = full.subtract(&bx(&[0.5, 0.5], &[1.0, 1.0])).unwrap();
        let l2 = a.union(&b).unwrap();
        let l3 = b.union(&a).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(l2, l3);
        // adjacent halves merge back into one box
        let right = bx(&[0.5, 0.0], &[1.0, 1.0]);
        assert_eq!(a.union(&right).unwrap(), full);
    }

    #[test]
    fn debug_dump_format() {
        let s = bx(&[0.0, 0.25], &[0.5, 1.0]);
        assert_eq!(s.to_string(), "[0,0.5)x[0.25,1)");
        let frame = unit2()
            .full()
            .subtract(&bx(&[0.25, 0.25], &[0.75, 0.75]))
            .unwrap();
        assert_eq!(frame.to_string().lines().count(), 4);
        assert!(frame.to_string().starts_with("[0,0.25)x[0,1)"));
    }

    #[test]
    fn works_in_single_precision() {
        let s = ParamSpace::<f32>::unit(2);
        let left = s.from_constraint(0, Bound::Lt, 0.25).unwrap();
        let rest = s.full().subtract(&left).unwrap();
        assert!((rest.volume() - 0.75f32).abs() < 1e-6);
        let p = rest
            .sample_uniform(&mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert!(rest.contains(&p).unwrap());
    }

    fn arb_box(dims: usize) -> impl Strategy<Value = ParamBox<f64>> {
        // coarse grid coordinates make shared faces frequent
        proptest::collection::vec((0u8..=8, 0u8..=8), dims).prop_map(|v| {
            let (lo, hi): (Vec<f64>, Vec<f64>) = v
                .into_iter()
                .map(|(a, b)| {
                    let (a, b) = (a.min(b) as f64 / 8.0, a.max(b) as f64 / 8.0);
                    (a, b)
                })
                .unzip();
            ParamBox::new(lo, hi)
        })
    }

    fn arb_set(dims: usize) -> impl Strategy<Value = IntervalSet<f64>> {
        proptest::collection::vec(arb_box(dims), 0..5)
            .prop_map(move |bs| IntervalSet::from_boxes(dims, bs).unwrap())
    }

    proptest! {
        #[test]
        fn conservation(a in arb_set(3), b in arb_set(3)) {
            let diff = a.subtract(&b).unwrap();
            let inter = a.intersect(&b).unwrap();
            prop_assert!((a.volume() - diff.volume() - inter.volume()).abs() < 1e-12);
            prop_assert!(diff.intersect(&b).unwrap().is_empty());
        }

        #[test]
        fn tiling_of_complementary_constraints(dim in 0usize..2, c in -0.5f64..1.5, op in 0u8..4) {
            let s = unit2();
            let op = [Bound::Lt, Bound::Le, Bound::Gt, Bound::Ge][op as usize];
            let a = s.from_constraint(dim, op, c).unwrap();
            let b = s.from_constraint(dim, op.complement(), c).unwrap();
            prop_assert!(a.intersect(&b).unwrap().is_empty());
            prop_assert_eq!(a.union(&b).unwrap(), s.full());
            prop_assert_eq!(a.volume() + b.volume(), 1.0);
        }

        #[test]
        fn union_is_order_independent(a in arb_set(2), b in arb_set(2), c in arb_set(2)) {
            let x = a.union(&b).unwrap().union(&c).unwrap();
            let y = c.union(&a).unwrap().union(&b).unwrap();
            prop_assert_eq!(&x, &y);
            let boxes = x.boxes();
            for i in 0..boxes.len() {
                for j in (i + 1)..boxes.len() {
                    prop_assert!(boxes[i].intersect(&boxes[j]).is_none());
                }
            }
        }

        #[test]
        fn samples_are_members(a in arb_set(2), seed in 0u64..1000) {
            if a.volume() > 0.0 {
                let p = a.sample_uniform(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                prop_assert!(a.contains(&p).unwrap());
            }
        }
    }
}
