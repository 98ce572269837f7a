//! Closed forms for isoparametric hypersurfaces in spheres (rank 2).
//!
//! The chamber is the sector `0 < theta < pi/g` and everything is a function
//! of `(g, m1, m2)` through `n = g (m1 + m2) / 2` and
//! `delta = (m2 - m1) / (m2 + m1)`. Along the spherical flow the quantity
//! `w(t) = cos g theta(t) + delta` evolves as `w(t) = e^{g n t} w(0)`, which
//! is how every formula here is evaluated: keeping `w` instead of
//! `cos g theta` avoids cancellation once the flow is close to `theta_min`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::root_system::{check_dihedral_multiplicities, RootSystemData};
use crate::scalar::Scalar;

/// `|cos g theta_0 + delta|` below this counts as the minimal leaf.
pub const FIXED_POINT_TOL: f64 = 1e-13;
/// Slack allowed on `cos g theta` before a time is declared out of domain.
pub const ARCCOS_CLAMP_TOL: f64 = 1e-14;
/// Cotangent terms with `|sin| <` this are treated as poles.
pub const POLE_TOL: f64 = 1e-12;

/// Multiplicity data `(g, m1, m2)` of a hypersurface family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DihedralFamily {
    g: u32,
    m1: u32,
    m2: u32,
}

impl DihedralFamily {
    /// Checked against the admissible multiplicity rules.
    pub fn new(g: u32, m1: u32, m2: u32) -> Result<Self> {
        check_dihedral_multiplicities(g, m1, m2)?;
        Ok(Self { g, m1, m2 })
    }

    /// Any `g >= 1`; odd `g` still needs `m1 = m2` since consecutive roots
    /// of an odd dihedral group are conjugate.
    pub fn unchecked(g: u32, m1: u32, m2: u32) -> Result<Self> {
        if g == 0 {
            return Err(Error::param("g", "must be positive"));
        }
        if m1 == 0 || m2 == 0 {
            return Err(Error::param("m1/m2", "multiplicities must be positive"));
        }
        if g % 2 == 1 && m1 != m2 {
            return Err(Error::param("m1/m2", "odd g needs m1 = m2"));
        }
        Ok(Self { g, m1, m2 })
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn n(&self) -> u32 {
        self.g * (self.m1 + self.m2) / 2
    }

    pub fn delta<T: Scalar>(&self) -> T {
        if self.g < 2 {
            return T::zero();
        }
        T::lit(self.m2 as f64 - self.m1 as f64) / T::lit((self.m1 + self.m2) as f64)
    }

    /// Upper edge `pi / g` of the chamber sector.
    pub fn sector_upper<T: Scalar>(&self) -> T {
        T::PI() / T::lit(self.g as f64)
    }

    /// The minimal leaf: `cos g theta_min = -delta`.
    pub fn theta_min<T: Scalar>(&self) -> T {
        (-self.delta::<T>()).acos() / T::lit(self.g as f64)
    }

    pub fn root_system<T: Scalar>(&self) -> RootSystemData<T> {
        RootSystemData::dihedral_unchecked(self.g, self.m1, self.m2)
            .expect("family parameters already validated")
    }

    fn gn<T: Scalar>(&self) -> (T, T) {
        (T::lit(self.g as f64), T::lit(self.n() as f64))
    }

    fn check_angle<T: Scalar>(&self, theta: T) -> Result<()> {
        let upper = self.sector_upper::<T>();
        if theta > T::zero() && theta < upper {
            Ok(())
        } else {
            Err(Error::OutsideSector {
                theta: theta.to_f64_lossy(),
                upper: upper.to_f64_lossy(),
            })
        }
    }
}

/// A family together with the starting leaf `theta_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rank2Config<T> {
    family: DihedralFamily,
    theta0: T,
}

/// Which focal submanifold the flow collapses onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FocalTarget {
    /// The wall `theta = 0`.
    MPlus,
    /// The wall `theta = pi / g`.
    MMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseInfo<T> {
    pub time: T,
    pub target: FocalTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstants<T> {
    /// Limit of `|A|^2` as `t -> -inf`, `(g - 1) n`.
    pub a2_limit: T,
    /// Limit of `|H|^2 e^{-2 g n t}`, `n^2 (cos g theta_0 + delta)^2 / (1 - delta^2)`.
    pub c0: T,
    /// Set when `theta_0` is the minimal leaf, so `c0 = 0`.
    pub degenerate: bool,
}

impl<T: Scalar> Rank2Config<T> {
    pub fn new(family: DihedralFamily, theta0: T) -> Result<Self> {
        family.check_angle(theta0)?;
        Ok(Self { family, theta0 })
    }

    pub fn family(&self) -> &DihedralFamily {
        &self.family
    }

    pub fn theta0(&self) -> T {
        self.theta0
    }

    pub fn with_theta0(&self, theta0: T) -> Result<Self> {
        Self::new(self.family, theta0)
    }

    pub fn g(&self) -> u32 {
        self.family.g
    }

    pub fn n(&self) -> u32 {
        self.family.n()
    }

    pub fn delta(&self) -> T {
        self.family.delta()
    }

    pub fn theta_min(&self) -> T {
        self.family.theta_min()
    }

    /// `w(0) = cos g theta_0 + delta`.
    pub fn excess0(&self) -> T {
        (T::lit(self.family.g as f64) * self.theta0).cos() + self.delta()
    }

    pub fn is_minimal(&self) -> bool {
        self.excess0().abs() < T::tol(FIXED_POINT_TOL)
    }

    /// `w(t) = e^{g n t} w(0)` along the spherical flow.
    pub fn excess(&self, t: T) -> T {
        let (g, n) = self.family.gn::<T>();
        (g * n * t).exp() * self.excess0()
    }

    /// Chamber point `(cos theta_0, sin theta_0)`.
    pub fn initial_point(&self) -> Vec<T> {
        vec![self.theta0.cos(), self.theta0.sin()]
    }
}

/// Recovers `theta` from `w = cos g theta + delta`, via the half-angle form
/// so that neither wall loses precision.
fn theta_from_excess<T: Scalar>(fam: &DihedralFamily, w: T) -> Option<T> {
    let delta = fam.delta::<T>();
    let two = T::lit(2.0);
    let lo = (T::one() + delta) - w;
    let hi = (T::one() - delta) + w;
    let slack = T::tol(ARCCOS_CLAMP_TOL);
    if lo < -slack || hi < -slack || !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    let half = (lo.max(T::zero()) / two)
        .sqrt()
        .atan2((hi.max(T::zero()) / two).sqrt());
    Some(two * half / T::lit(fam.g as f64))
}

/// `theta(t)` of the spherical flow, from `cos g theta(t) = e^{g n t}(cos g theta_0 + delta) - delta`.
pub fn spherical_theta<T: Scalar>(cfg: &Rank2Config<T>, t: T) -> Result<T> {
    if cfg.is_minimal() {
        return Ok(cfg.theta0);
    }
    theta_from_excess(&cfg.family, cfg.excess(t)).ok_or_else(|| out_of_domain(cfg, t))
}

/// Unit chamber point on the spherical flow at time `t`.
pub fn spherical_state<T: Scalar>(cfg: &Rank2Config<T>, t: T) -> Result<Vec<T>> {
    let th = spherical_theta(cfg, t)?;
    Ok(vec![th.cos(), th.sin()])
}

/// `(r, theta)` of the Euclidean flow: `r = sqrt(1 - 2 n t)` and
/// `cos g theta = (1 - 2 n t)^{-g/2}(cos g theta_0 + delta) - delta`.
pub fn euclidean_solution<T: Scalar>(cfg: &Rank2Config<T>, t: T) -> Result<(T, T)> {
    let (g, n) = cfg.family.gn::<T>();
    let rho = T::one() - T::lit(2.0) * n * t;
    if !(rho > T::zero()) {
        return Err(Error::OutOfDomain {
            t: t.to_f64_lossy(),
            collapse: Some(euclidean_collapse_time(cfg).to_f64_lossy()),
        });
    }
    let r = rho.sqrt();
    if cfg.is_minimal() {
        return Ok((r, cfg.theta0));
    }
    let w = rho.powf(-g / T::lit(2.0)) * cfg.excess0();
    let th = theta_from_excess(&cfg.family, w).ok_or_else(|| Error::OutOfDomain {
        t: t.to_f64_lossy(),
        collapse: Some(euclidean_collapse_time(cfg).to_f64_lossy()),
    })?;
    Ok((r, th))
}

fn out_of_domain<T: Scalar>(cfg: &Rank2Config<T>, t: T) -> Error {
    Error::OutOfDomain {
        t: t.to_f64_lossy(),
        collapse: collapse_times(cfg).map(|c| c.time.to_f64_lossy()),
    }
}

/// Collapse time of the spherical flow,
/// `T = (1 / (g n)) ln((delta +- 1) / (delta + cos g theta_0))`; `None` for
/// the minimal leaf.
pub fn collapse_times<T: Scalar>(cfg: &Rank2Config<T>) -> Option<CollapseInfo<T>> {
    if cfg.is_minimal() {
        return None;
    }
    let (g, n) = cfg.family.gn::<T>();
    let delta = cfg.delta();
    let w0 = cfg.excess0();
    let (num, target) = if w0 > T::zero() {
        (delta + T::one(), FocalTarget::MPlus)
    } else {
        (delta - T::one(), FocalTarget::MMinus)
    };
    Some(CollapseInfo {
        time: (num / w0).ln() / (g * n),
        target,
    })
}

/// Collapse time of the Euclidean flow from the unit leaf at `theta_0`;
/// `1 / (2n)` for the minimal leaf and strictly smaller otherwise.
pub fn euclidean_collapse_time<T: Scalar>(cfg: &Rank2Config<T>) -> T {
    let n = T::lit(cfg.n() as f64);
    let two_n = T::lit(2.0) * n;
    match collapse_times(cfg) {
        None => two_n.recip(),
        Some(c) => -(-two_n * c.time).exp_m1() / two_n,
    }
}

fn ratio_q<T: Scalar>(fam: &DihedralFamily, theta: T) -> (T, T, T) {
    let gt = T::lit(fam.g as f64) * theta;
    let (s, c) = gt.sin_cos();
    ((c + fam.delta::<T>()) / s, s, c)
}

/// Euclidean and spherical mean curvature vectors at `r e^{i theta}`.
pub fn mean_curvature_closed<T: Scalar>(
    fam: &DihedralFamily,
    r: T,
    theta: T,
) -> Result<(Vec<T>, Vec<T>)> {
    fam.check_angle(theta)?;
    check_radius(r)?;
    let n = T::lit(fam.n() as f64);
    let (q, _, _) = ratio_q(fam, theta);
    let (st, ct) = theta.sin_cos();
    let k = -n / r;
    let he = vec![k * (ct - q * st), k * (st + q * ct)];
    let hs = vec![-k * q * st, k * q * ct];
    Ok((he, hs))
}

/// `|H^S|^2 = (n / r)^2 (cot g theta + delta csc g theta)^2`.
pub fn h2_spherical_closed<T: Scalar>(fam: &DihedralFamily, r: T, theta: T) -> Result<T> {
    fam.check_angle(theta)?;
    check_radius(r)?;
    let n = T::lit(fam.n() as f64);
    let (q, _, _) = ratio_q(fam, theta);
    Ok((n * q / r).powi(2))
}

/// `(|A^E|^2, |A^S|^2)` with `|A^E|^2 = (n g / r^2) csc^2 g theta (1 + delta cos g theta)`.
pub fn shape_norms_closed<T: Scalar>(fam: &DihedralFamily, r: T, theta: T) -> Result<(T, T)> {
    fam.check_angle(theta)?;
    check_radius(r)?;
    let (g, n) = fam.gn::<T>();
    let (_, s, c) = ratio_q(fam, theta);
    let r2 = r * r;
    let ae = n * g / r2 * (T::one() + fam.delta::<T>() * c) / (s * s);
    Ok((ae, ae - n / r2))
}

/// `phi = n csc^2 g theta (g - 1 - delta^2 + delta (g - 2) cos g theta)` on the unit sphere.
pub fn phi_closed<T: Scalar>(fam: &DihedralFamily, theta: T) -> Result<T> {
    fam.check_angle(theta)?;
    let (g, n) = fam.gn::<T>();
    let d = fam.delta::<T>();
    let (_, s, c) = ratio_q(fam, theta);
    Ok(n * (g - T::one() - d * d + d * (g - T::lit(2.0)) * c) / (s * s))
}

/// Right-hand side of
/// `|A^S|^2 - (g / 2n) |H^S|^2 = (n / 2r^2)(g (1 - delta^2) csc^2 g theta + g - 2)`.
pub fn a_minus_h_rhs<T: Scalar>(fam: &DihedralFamily, r: T, theta: T) -> Result<T> {
    fam.check_angle(theta)?;
    check_radius(r)?;
    let (g, n) = fam.gn::<T>();
    let d = fam.delta::<T>();
    let (_, s, _) = ratio_q(fam, theta);
    Ok(n / (T::lit(2.0) * r * r) * (g * (T::one() - d * d) / (s * s) + g - T::lit(2.0)))
}

/// Right-hand side `((n - 2) / (n - 1)) tan^2 theta` of the torus identity
/// `|A|^2 - |H|^2 / (n - 1) - 2` for `g = 2`, `m = (1, n - 1)` on the unit sphere.
pub fn torus_excess_rhs<T: Scalar>(n: u32, theta: T) -> Result<T> {
    if n < 2 {
        return Err(Error::param("n", "needs n >= 2"));
    }
    let nf = T::lit(n as f64);
    let t = theta.tan();
    Ok((nf - T::lit(2.0)) / (nf - T::one()) * t * t)
}

/// `d theta / dt = -n (cot g theta + delta csc g theta)` on the unit sphere.
pub fn theta_velocity<T: Scalar>(fam: &DihedralFamily, theta: T) -> Result<T> {
    fam.check_angle(theta)?;
    let n = T::lit(fam.n() as f64);
    Ok(-n * ratio_q(fam, theta).0)
}

pub fn limit_constants<T: Scalar>(cfg: &Rank2Config<T>) -> LimitConstants<T> {
    let (g, n) = cfg.family.gn::<T>();
    let d = cfg.delta();
    let degenerate = cfg.is_minimal();
    let c0 = if degenerate {
        T::zero()
    } else {
        let w0 = cfg.excess0();
        n * n * w0 * w0 / (T::one() - d * d)
    };
    LimitConstants {
        a2_limit: (g - T::one()) * n,
        c0,
        degenerate,
    }
}

fn check_radius<T: Scalar>(r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::param("r", "must be positive and finite"))
    }
}

fn cot_terms<T: Scalar>(g: u32, beta: T) -> Result<Vec<(T, T)>> {
    if g == 0 {
        return Err(Error::param("g", "must be positive"));
    }
    let gf = T::lit(g as f64);
    let pi_lo = T::lit((std::f64::consts::PI - T::PI().to_f64_lossy()) + 1.2246467991473532e-16);
    (1..=g)
        .map(|k| {
            let q = (T::lit(k as f64) / gf + beta / T::PI()).round();
            let j = T::lit(k as f64) - q * gf;
            let c_hi = j / gf;
            let c_lo = (-c_hi).mul_add(gf, j) / gf;
            let p = c_hi * T::PI();
            let e = c_hi.mul_add(T::PI(), -p);
            let a = (beta + p) + (e + c_lo * T::PI() + c_hi * pi_lo);
            let (s, c) = a.sin_cos();
            if s.abs() < T::tol(POLE_TOL) {
                Err(Error::NearPole {
                    beta: beta.to_f64_lossy(),
                })
            } else {
                Ok((s, c))
            }
        })
        .collect()
}

/// `sum_{k=1}^g cot(k pi / g + beta)`, summed term by term.
pub fn sum_cot<T: Scalar>(g: u32, beta: T) -> Result<T> {
    let terms = cot_terms(g, beta)?;
    Ok(linalg::sum_compensated(
        terms.into_iter().map(|(s, c)| c / s),
    ))
}

/// `sum_{k=1}^g cot^2(k pi / g + beta)`, summed term by term.
pub fn sum_cot_sq<T: Scalar>(g: u32, beta: T) -> Result<T> {
    let terms = cot_terms(g, beta)?;
    Ok(linalg::sum_compensated(terms.into_iter().map(|(s, c)| {
        let q = c / s;
        q * q
    })))
}

fn sin_g_beta<T: Scalar>(g: u32, beta: T) -> Result<(T, T, T)> {
    if g == 0 {
        return Err(Error::param("g", "must be positive"));
    }
    let gf = T::lit(g as f64);
    let p = gf * beta;
    let e = gf.mul_add(beta, -p);
    let (s0, c0) = p.sin_cos();
    let (s, c) = (s0 + c0 * e, c0 - s0 * e);
    if s.abs() < T::tol(POLE_TOL) {
        return Err(Error::NearPole {
            beta: beta.to_f64_lossy(),
        });
    }
    Ok((gf, s, c))
}

/// `g cot g beta`.
pub fn sum_cot_closed<T: Scalar>(g: u32, beta: T) -> Result<T> {
    let (gf, s, c) = sin_g_beta(g, beta)?;
    Ok(gf * c / s)
}

/// `g^2 csc^2 g beta - g`.
pub fn sum_cot_sq_closed<T: Scalar>(g: u32, beta: T) -> Result<T> {
    let (gf, s, _) = sin_g_beta(g, beta)?;
    Ok(gf * gf / (s * s) - gf)
}
