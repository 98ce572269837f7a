//! Positive roots, multiplicities and the open Weyl chamber they cut out.
//!
//! The chamber of an isoparametric submanifold is
//! `C = { x : <x, alpha_i> > 0 for all i }`, and the curvature normals of
//! the parallel leaf through `x` are `-alpha_i / <x, alpha_i>`. Only this
//! chamber-level data is represented; the reflection group itself is not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Two roots closer than this angle are reported as duplicates.
pub const DISTINCT_ANGLE_TOL: f64 = 1e-9;
/// Accepted deviation of a root's norm from one.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Relative pivot threshold used when deciding whether the roots span.
pub const FULLNESS_REL_TOL: f64 = 1e-10;

/// Unit positive roots with multiplicities in `R^rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSystemData<T> {
    rank: usize,
    roots: Vec<Vec<T>>,
    multiplicities: Vec<u32>,
    dimension: u32,
}

/// A point of the open chamber together with its distance-like margin
/// `min_i <x, alpha_i>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberPoint<T> {
    coords: Vec<T>,
    margin: T,
}

impl<T: Scalar> ChamberPoint<T> {
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn margin(&self) -> T {
        self.margin
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.coords)
    }
}

/// Outcome of [`RootSystemData::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub unit_norm: bool,
    pub max_norm_deviation: f64,
    pub distinct: bool,
    /// Smallest pairwise angle between roots (infinite for a single root).
    pub min_pair_angle: f64,
    /// Whether the roots span the normal space. The ancient-convergence
    /// argument for the Euclidean flow relies on this.
    pub full: bool,
    pub numerical_rank: usize,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.unit_norm && self.distinct && self.full
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.unit_norm {
            out.push("unit_norm");
        }
        if !self.distinct {
            out.push("distinct");
        }
        if !self.full {
            out.push("full");
        }
        out
    }
}

impl<T: Scalar> RootSystemData<T> {
    /// Builds a root system from arbitrary nonzero vectors, normalizing each.
    pub fn new(roots: Vec<Vec<T>>, multiplicities: Vec<u32>) -> Result<Self> {
        let normalized = roots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                linalg::normalized(r)
                    .ok_or_else(|| Error::InvalidRootSystem(format!("root {i} is zero")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_raw_parts(normalized, multiplicities)
    }

    /// Builds a root system without normalizing the roots. Only shape checks
    /// are applied; meant for negative controls that need corrupted norms.
    pub fn from_raw_parts(roots: Vec<Vec<T>>, multiplicities: Vec<u32>) -> Result<Self> {
        let Some(first) = roots.first() else {
            return Err(Error::InvalidRootSystem(
                "at least one root is required".into(),
            ));
        };
        let rank = first.len();
        if rank == 0 {
            return Err(Error::InvalidRootSystem("rank must be positive".into()));
        }
        if let Some(bad) = roots.iter().find(|r| r.len() != rank) {
            return Err(Error::DimensionMismatch {
                expected: rank,
                got: bad.len(),
            });
        }
        if roots.len() != multiplicities.len() {
            return Err(Error::InvalidRootSystem(format!(
                "{} roots but {} multiplicities",
                roots.len(),
                multiplicities.len()
            )));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidRootSystem(
                "multiplicities must be positive".into(),
            ));
        }
        if roots.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRootSystem("non-finite root entry".into()));
        }
        let dimension = multiplicities.iter().sum();
        Ok(Self {
            rank,
            roots,
            multiplicities,
            dimension,
        })
    }

    /// Dihedral roots of an isoparametric hypersurface with `g` distinct
    /// principal curvatures, checked against the admissible multiplicities.
    pub fn dihedral(g: u32, m1: u32, m2: u32) -> Result<Self> {
        check_dihedral_multiplicities(g, m1, m2)?;
        Self::dihedral_unchecked(g, m1, m2)
    }

    /// Dihedral roots for any `g >= 1` without the multiplicity rules.
    ///
    /// Root `k` (1-based) sits at angle `k pi / g - pi / 2`; odd `k` carry
    /// `m1`, even `k` carry `m2`.
    pub fn dihedral_unchecked(g: u32, m1: u32, m2: u32) -> Result<Self> {
        if g == 0 {
            return Err(Error::param("g", "must be positive"));
        }
        let gf = T::lit(g as f64);
        let mut roots = Vec::with_capacity(g as usize);
        let mut mult = Vec::with_capacity(g as usize);
        for k in 1..=g {
            let angle = T::lit(k as f64) * T::PI() / gf - T::FRAC_PI_2();
            roots.push(vec![angle.cos(), angle.sin()]);
            mult.push(if k % 2 == 1 { m1 } else { m2 });
        }
        Self::from_raw_parts(roots, mult)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of positive roots `g`.
    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[Vec<T>] {
        &self.roots
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Dimension `n = sum m_i` of the submanifold.
    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub(crate) fn n(&self) -> T {
        T::lit(self.dimension as f64)
    }

    /// Returns a copy with one multiplicity replaced.
    pub fn with_multiplicity(&self, index: usize, m: u32) -> Result<Self> {
        let mut mult = self.multiplicities.clone();
        let slot = mult
            .get_mut(index)
            .ok_or_else(|| Error::param("index", format!("no root {index}")))?;
        *slot = m;
        Self::from_raw_parts(self.roots.clone(), mult)
    }

    /// `<x, alpha_i>` for every root.
    pub fn pairings(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        Ok(self.roots.iter().map(|a| linalg::dot(a, x)).collect())
    }

    /// Smallest pairing and the index of the root attaining it.
    pub fn margin(&self, x: &[T]) -> Result<(T, usize)> {
        let p = self.pairings(x)?;
        Ok(min_with_index(&p))
    }

    /// Chamber membership test; also returns the margin.
    pub fn in_chamber(&self, x: &[T]) -> Result<(bool, T)> {
        let (m, _) = self.margin(x)?;
        Ok((m > T::zero(), m))
    }

    pub fn chamber_point(&self, x: Vec<T>) -> Result<ChamberPoint<T>> {
        let (inside, margin) = self.in_chamber(&x)?;
        if !inside {
            return Err(Error::OutsideChamber {
                margin: margin.to_f64_lossy(),
            });
        }
        Ok(ChamberPoint { coords: x, margin })
    }

    pub fn validate(&self) -> ValidationReport {
        let max_dev = self
            .roots
            .iter()
            .map(|r| (linalg::norm(r) - T::one()).abs().to_f64_lossy())
            .fold(0.0, f64::max);
        let mut min_angle = f64::INFINITY;
        for (i, a) in self.roots.iter().enumerate() {
            for b in &self.roots[i + 1..] {
                min_angle = min_angle.min(unit_angle(a, b).to_f64_lossy());
            }
        }
        let rank = linalg::numerical_rank(&self.roots, T::tol(FULLNESS_REL_TOL));
        ValidationReport {
            unit_norm: max_dev <= T::tol(UNIT_NORM_TOL).to_f64_lossy(),
            max_norm_deviation: max_dev,
            distinct: min_angle > DISTINCT_ANGLE_TOL,
            min_pair_angle: min_angle,
            full: rank == self.rank,
            numerical_rank: rank,
        }
    }

    /// Polar coordinates `(r, theta)` of a rank-2 chamber point, with the
    /// chamber being the open sector `0 < theta < pi / g`.
    pub fn polar(&self, x: &[T]) -> Result<(T, T)> {
        self.require_rank2()?;
        self.check_dim(x)?;
        let r = linalg::norm(x);
        let theta = x[1].atan2(x[0]);
        let upper = T::PI() / T::count(self.num_roots());
        if !(theta > T::zero() && theta < upper) || r <= T::zero() {
            return Err(Error::OutsideSector {
                theta: theta.to_f64_lossy(),
                upper: upper.to_f64_lossy(),
            });
        }
        Ok((r, theta))
    }

    /// Inverse of [`polar`](Self::polar).
    pub fn from_polar(&self, r: T, theta: T) -> Result<ChamberPoint<T>> {
        self.require_rank2()?;
        self.chamber_point(vec![r * theta.cos(), r * theta.sin()])
    }

    /// A unit vector strictly inside the chamber: the normalized sum of the
    /// chamber's extreme rays. For a rank-2 chamber that is the bisector of
    /// its two edges. When the closed chamber contains a line (a half-space,
    /// e.g. a single root), the normalized root sum is used instead.
    pub fn interior_direction(&self) -> Result<Vec<T>> {
        let rays = self.extreme_rays();
        let mut sum = vec![T::zero(); self.rank];
        for r in &rays {
            for (s, &v) in sum.iter_mut().zip(r) {
                *s += v;
            }
        }
        let candidates = [
            linalg::normalized(&sum),
            linalg::normalized(&self.root_sum()),
        ];
        for c in candidates.into_iter().flatten() {
            let (m, _) = self.margin(&c)?;
            if m > T::tol(1e-12) {
                return Ok(c);
            }
        }
        Err(Error::InvalidRootSystem(
            "could not find a point inside the chamber".into(),
        ))
    }

    /// Unit extreme rays of the closed chamber: directions orthogonal to
    /// `rank - 1` roots that pair non-negatively with every root.
    pub fn extreme_rays(&self) -> Vec<Vec<T>> {
        let k = self.rank;
        let tol = T::tol(1e-12);
        let mut rays: Vec<Vec<T>> = Vec::new();
        if k == 1 {
            for s in [T::one(), -T::one()] {
                let v = vec![s];
                if self.roots.iter().all(|a| linalg::dot(a, &v) >= -tol) {
                    rays.push(v);
                }
            }
            return rays;
        }
        for subset in combinations(self.roots.len(), k - 1) {
            let rows: Vec<&[T]> = subset.iter().map(|&i| self.roots[i].as_slice()).collect();
            let Some(v) = linalg::normalized(&linalg::orthogonal_complement(&rows)) else {
                continue;
            };
            for cand in [v.clone(), linalg::scale(&v, -T::one())] {
                if self.roots.iter().all(|a| linalg::dot(a, &cand) >= -tol)
                    && !rays
                        .iter()
                        .any(|r| linalg::distance(r, &cand) < T::tol(1e-9))
                {
                    rays.push(cand);
                }
            }
        }
        rays
    }

    fn root_sum(&self) -> Vec<T> {
        let mut sum = vec![T::zero(); self.rank];
        for a in &self.roots {
            for (s, &v) in sum.iter_mut().zip(a) {
                *s += v;
            }
        }
        sum
    }

    pub(crate) fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn require_rank2(&self) -> Result<()> {
        if self.rank != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.rank,
            });
        }
        Ok(())
    }
}

/// Admissible multiplicity data for `g` distinct principal curvatures:
/// `g` in {1,2,3,4,6}, `m1 <= m2`, equal multiplicities for odd `g`, and
/// `m1 = m2 in {1,2}` for `g = 6`.
pub fn check_dihedral_multiplicities(g: u32, m1: u32, m2: u32) -> Result<()> {
    if !matches!(g, 1 | 2 | 3 | 4 | 6) {
        return Err(Error::MultiplicityRule {
            rule: "Muenzner: g in {1,2,3,4,6}",
            detail: format!("g = {g}"),
        });
    }
    if m1 == 0 || m2 == 0 {
        return Err(Error::param("m1/m2", "multiplicities must be positive"));
    }
    if m1 > m2 {
        return Err(Error::MultiplicityRule {
            rule: "ordering: m1 <= m2",
            detail: format!("m1 = {m1}, m2 = {m2}"),
        });
    }
    if g % 2 == 1 && m1 != m2 {
        return Err(Error::MultiplicityRule {
            rule: "Muenzner: m_i = m_(i+2), so m1 = m2 for odd g",
            detail: format!("g = {g}, m1 = {m1}, m2 = {m2}"),
        });
    }
    if g == 6 && !(m1 == m2 && (m1 == 1 || m1 == 2)) {
        return Err(Error::MultiplicityRule {
            rule: "Abresch: g = 6 forces m1 = m2 in {1,2}",
            detail: format!("m1 = {m1}, m2 = {m2}"),
        });
    }
    Ok(())
}

pub(crate) fn min_with_index<T: Scalar>(v: &[T]) -> (T, usize) {
    v.iter().enumerate().fold(
        (T::infinity(), 0),
        |acc, (i, &x)| if x < acc.0 { (x, i) } else { acc },
    )
}

/// Angle between two unit vectors, `2 asin(|a - b| / 2)`; accurate for
/// nearly parallel vectors.
fn unit_angle<T: Scalar>(a: &[T], b: &[T]) -> T {
    let half = linalg::distance(a, b) / T::lit(2.0);
    T::lit(2.0) * half.min(T::one()).asin()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
