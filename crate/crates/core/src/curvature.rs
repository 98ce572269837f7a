//! Mean curvature vectors and shape-operator norms from root sums.
//!
//! For a chamber point `x` the parallel leaf `M_x` has
//!
//! ```text
//! H^E(x)     = -sum m_i alpha_i / <x, alpha_i>
//! H^S(x)     = H^E(x) + n x / |x|^2
//! |A^E(x)|^2 = sum m_i / <x, alpha_i>^2
//! |A^S(x)|^2 = |A^E(x)|^2 - n / |x|^2
//! ```
//!
//! and `phi = |A^S|^2 - |H^S|^2 / n` is the squared norm of the traceless
//! part of the spherical shape operator. These root sums work in any rank
//! and serve as the reference against which closed forms are compared.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CompensatedSum};
use crate::root_system::RootSystemData;
use crate::scalar::Scalar;

/// Points whose margin is below this multiple of `|x|` are rejected.
pub const MARGIN_GUARD: f64 = 1e-13;

/// Where a reported quantity came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Root-sum evaluation at a chamber point.
    Oracle,
    /// Explicit rank-2 formulas.
    ClosedForm,
    /// Numerical integration of the chamber ODE.
    Ode,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Oracle => "oracle",
            Provenance::ClosedForm => "closed_form",
            Provenance::Ode => "ode",
        }
    }
}

/// All curvature quantities at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport<T> {
    pub h_euclidean: Vec<T>,
    pub h_spherical: Vec<T>,
    pub a2_euclidean: T,
    pub a2_spherical: T,
    pub phi: T,
    pub provenance: Provenance,
}

impl<T: Scalar> CurvatureReport<T> {
    pub fn h2_euclidean(&self) -> T {
        linalg::norm_sq(&self.h_euclidean)
    }

    pub fn h2_spherical(&self) -> T {
        linalg::norm_sq(&self.h_spherical)
    }
}

/// Pairings `<x, alpha_i>` after checking the margin guard.
fn guarded_pairings<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<Vec<T>> {
    let p = rs.pairings(x)?;
    let margin = p.iter().fold(T::infinity(), |m, &v| m.min(v));
    let guard = T::tol(MARGIN_GUARD) * linalg::norm(x);
    if !(margin > guard) {
        return Err(Error::OutsideChamber {
            margin: margin.to_f64_lossy(),
        });
    }
    Ok(p)
}

fn h_euclidean_from<T: Scalar>(rs: &RootSystemData<T>, p: &[T]) -> Vec<T> {
    let mut acc = vec![CompensatedSum::<T>::new(); rs.rank()];
    for ((alpha, &m), &pi) in rs.roots().iter().zip(rs.multiplicities()).zip(p) {
        let w = T::lit(m as f64) / pi;
        for (a, &c) in acc.iter_mut().zip(alpha) {
            a.add(-w * c);
        }
    }
    acc.iter().map(CompensatedSum::value).collect()
}

fn a2_euclidean_from<T: Scalar>(rs: &RootSystemData<T>, p: &[T]) -> T {
    linalg::sum_compensated(
        rs.multiplicities()
            .iter()
            .zip(p)
            .map(|(&m, &pi)| T::lit(m as f64) / (pi * pi)),
    )
}

fn spherical_from<T: Scalar>(rs: &RootSystemData<T>, x: &[T], he: &[T]) -> Vec<T> {
    let s = rs.n() / linalg::norm_sq(x);
    he.iter().zip(x).map(|(&h, &xi)| h + s * xi).collect()
}

pub fn mean_curvature_euclidean<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<Vec<T>> {
    let p = guarded_pairings(rs, x)?;
    Ok(h_euclidean_from(rs, &p))
}

pub fn mean_curvature_spherical<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<Vec<T>> {
    let he = mean_curvature_euclidean(rs, x)?;
    Ok(spherical_from(rs, x, &he))
}

pub fn shape_norm_sq_euclidean<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<T> {
    let p = guarded_pairings(rs, x)?;
    Ok(a2_euclidean_from(rs, &p))
}

pub fn shape_norm_sq_spherical<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<T> {
    let a2 = shape_norm_sq_euclidean(rs, x)?;
    Ok(a2 - rs.n() / linalg::norm_sq(x))
}

/// `phi = |A^S|^2 - |H^S|^2 / n`.
pub fn traceless_norm_sq<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<T> {
    Ok(curvature_report(rs, x)?.phi)
}

pub fn curvature_report<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<CurvatureReport<T>> {
    let p = guarded_pairings(rs, x)?;
    let he = h_euclidean_from(rs, &p);
    let hs = spherical_from(rs, x, &he);
    let a2e = a2_euclidean_from(rs, &p);
    let a2s = a2e - rs.n() / linalg::norm_sq(x);
    let phi = a2s - linalg::norm_sq(&hs) / rs.n();
    Ok(CurvatureReport {
        h_euclidean: he,
        h_spherical: hs,
        a2_euclidean: a2e,
        a2_spherical: a2s,
        phi,
        provenance: Provenance::Oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn g2() -> RootSystemData<f64> {
        RootSystemData::dihedral(2, 1, 1).unwrap()
    }

    #[test]
    fn g2_sample_point() {
        let x = [FRAC_PI_6.cos(), FRAC_PI_6.sin()];
        let rep = curvature_report(&g2(), &x).unwrap();
        let s3 = 3f64.sqrt();
        assert!(close(rep.h_euclidean[0], -2.0 / s3, 1e-15));
        assert!(close(rep.h_euclidean[1], -2.0, 1e-15));
        let expected_hs = [2.0 / s3 * 0.5, -2.0 / s3 * s3 / 2.0];
        assert!(close(rep.h_spherical[0], expected_hs[0], 1e-14));
        assert!(close(rep.h_spherical[1], expected_hs[1], 1e-14));
        assert!(close(rep.a2_euclidean, 16.0 / 3.0, 1e-15));
        assert!(close(rep.a2_spherical, 10.0 / 3.0, 1e-15));
        assert!(close(rep.phi, 8.0 / 3.0, 1e-14));
    }

    #[test]
    fn clifford_minimal_point() {
        let x = [FRAC_PI_4.cos(), FRAC_PI_4.sin()];
        let rep = curvature_report(&g2(), &x).unwrap();
        assert!(linalg::norm(&rep.h_spherical) < 1e-14);
        assert!(close(linalg::norm(&rep.h_euclidean), 2.0, 1e-15));
        assert!(close(rep.a2_spherical, 2.0, 1e-14));
    }

    #[test]
    fn g1_equator_is_minimal() {
        let rs = RootSystemData::<f64>::dihedral(1, 4, 4).unwrap();
        let rep = curvature_report(&rs, &[0.0, 1.0]).unwrap();
        assert!(close(rep.h_euclidean[1], -4.0, 1e-15));
        assert!(rep.h_euclidean[0].abs() < 1e-15);
        assert!(rep.phi.abs() < 1e-15);
        let off = curvature_report(&rs, &[0.3, 0.8]).unwrap();
        assert!(off.phi.abs() < 1e-13);
    }

    #[test]
    fn g3_minimal_value() {
        let rs = RootSystemData::<f64>::dihedral(3, 1, 1).unwrap();
        let x = [FRAC_PI_6.cos(), FRAC_PI_6.sin()];
        assert!(close(shape_norm_sq_spherical(&rs, &x).unwrap(), 6.0, 1e-14));
    }

    #[test]
    fn homogeneity() {
        let rs = g2();
        let x = [0.8, 0.3];
        let s = 3.7;
        let xs = [x[0] * s, x[1] * s];
        let a = shape_norm_sq_euclidean(&rs, &x).unwrap();
        let b = shape_norm_sq_euclidean(&rs, &xs).unwrap();
        assert!(close(b, a / (s * s), 1e-14));
        let h = mean_curvature_euclidean(&rs, &x).unwrap();
        let hs = mean_curvature_euclidean(&rs, &xs).unwrap();
        for (u, v) in h.iter().zip(&hs) {
            assert!(close(*v, u / s, 1e-14));
        }
    }

    #[test]
    fn wall_points_are_rejected() {
        let rs = g2();
        assert!(matches!(
            mean_curvature_euclidean(&rs, &[1.0, 0.0]),
            Err(Error::OutsideChamber { .. })
        ));
        assert!(shape_norm_sq_euclidean(&rs, &[1.0, 1e-14]).is_err());
        assert!(shape_norm_sq_euclidean(&rs, &[1.0, 1e-12]).is_ok());
    }

    #[test]
    fn blow_up_towards_wall() {
        let rs = g2();
        let mut last = 0.0;
        for k in 1..12 {
            let eps = 10f64.powi(-k);
            let a = shape_norm_sq_euclidean(&rs, &[1.0, eps]).unwrap();
            assert!(a > last);
            last = a;
        }
    }

    #[test]
    fn single_precision_report() {
        let rs = RootSystemData::<f32>::dihedral(2, 1, 1).unwrap();
        let x = [
            std::f32::consts::FRAC_PI_6.cos(),
            std::f32::consts::FRAC_PI_6.sin(),
        ];
        let rep = curvature_report(&rs, &x).unwrap();
        assert!((rep.a2_euclidean - 16.0 / 3.0).abs() < 1e-5);
    }
}
