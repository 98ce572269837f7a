//! Audits of curvature estimates along exact flows, and the identity checks
//! shared by the command-line `check` and the test suites.
//!
//! Audits work on a [`CurvatureSeries`]: `|A^S|^2`, `ln |H^S|^2` and `phi`
//! sampled on an increasing time grid. Rank-2 configurations use the closed
//! forms in `w = cos g theta + delta`, which stay accurate far into the past
//! where `|H^S|^2 ~ e^{2 g n t}`; other trajectories use the root sums.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::curvature::{self, Provenance};
use crate::error::{Error, Result};
use crate::flow::{self, FlowTrajectory};
use crate::linalg;
use crate::rank2::{self, DihedralFamily, Rank2Config};
use crate::root_system::RootSystemData;
use crate::sampling::Sampler;
use crate::scalar::Scalar;

/// Slack when locating `t_1` for the ratio envelope.
pub const ENVELOPE_SLACK: f64 = 1e-9;
/// Log-slope of the ratio over the tail above which it counts as bounded.
pub const BOUNDED_SLOPE_TOL: f64 = 1e-6;
/// Absolute slack, in units of `n`, on the `phi` band edges.
pub const BAND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// `|A|^2 < C |H|^2`.
    HsRatioBounded,
    /// `|A|^2 < e^{-B t} |H|^2` with `B < 4n`.
    HsExponential,
    /// `|A|^2 - |H|^2 / (n - 1) <= 2`.
    HsTraceless,
    RatioEnvelope,
    PhiBand,
    Sharpness,
}

impl ConditionId {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::HsRatioBounded => "hs_ratio_bounded",
            ConditionId::HsExponential => "hs_exponential",
            ConditionId::HsTraceless => "hs_traceless",
            ConditionId::RatioEnvelope => "ratio_envelope",
            ConditionId::PhiBand => "phi_band",
            ConditionId::Sharpness => "sharpness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub values: BTreeMap<&'static str, f64>,
    pub source: Provenance,
    pub note: Option<String>,
    pub violating_t: Option<f64>,
}

impl Witness {
    fn new(source: Provenance) -> Self {
        Self {
            values: BTreeMap::new(),
            source,
            note: None,
            violating_t: None,
        }
    }

    fn set(&mut self, key: &'static str, v: f64) -> &mut Self {
        self.values.insert(key, v);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateAudit {
    pub condition_id: ConditionId,
    pub holds: bool,
    pub witness: Witness,
}

/// Curvature quantities of a spherical flow on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureSeries {
    pub times: Vec<f64>,
    /// `ln |H^S|^2`, `-inf` where it vanishes.
    pub ln_h2: Vec<f64>,
    /// `|A^S|^2`.
    pub a2: Vec<f64>,
    pub phi: Vec<f64>,
    /// Number of roots for rank-2 data.
    pub g: Option<u32>,
    pub n: u32,
    /// `lim |H|^2 e^{-2gnt}` when known in closed form.
    pub c0: Option<f64>,
    pub stationary: bool,
    pub source: Provenance,
}

impl CurvatureSeries {
    /// Closed-form series of the spherical flow from `cfg` at `times`.
    pub fn closed_form<T: Scalar>(cfg: &Rank2Config<T>, times: &[T]) -> Result<Self> {
        check_increasing(times)?;
        let fam = cfg.family();
        let (g, n) = (T::lit(fam.g() as f64), T::lit(fam.n() as f64));
        let d = cfg.delta();
        let one = T::one();
        let two = T::lit(2.0);
        let stationary = cfg.is_minimal();
        let w0 = cfg.excess0();
        let lc = rank2::limit_constants(cfg);
        let mut out = Self {
            times: Vec::with_capacity(times.len()),
            ln_h2: Vec::with_capacity(times.len()),
            a2: Vec::with_capacity(times.len()),
            phi: Vec::with_capacity(times.len()),
            g: Some(fam.g()),
            n: fam.n(),
            c0: (!stationary).then(|| lc.c0.to_f64_lossy()),
            stationary,
            source: Provenance::ClosedForm,
        };
        for &t in times {
            let (w, ln_w) = if stationary {
                (T::zero(), T::neg_infinity())
            } else {
                let ln_w = g * n * t + w0.abs().ln();
                (w0.signum() * ln_w.exp(), ln_w)
            };
            let s2 = ((one + d) - w) * ((one - d) + w);
            if !(s2 > T::zero()) {
                return Err(Error::OutOfDomain {
                    t: t.to_f64_lossy(),
                    collapse: rank2::collapse_times(cfg).map(|c| c.time.to_f64_lossy()),
                });
            }
            let base = (g - one) * (one - d * d);
            let a2 = if fam.g() == 1 {
                n * (two * ln_w - s2.ln()).exp()
            } else {
                n * (base + (g - two) * d * w + w * w) / s2
            };
            let ln_h2 = two * n.ln() + two * ln_w - s2.ln();
            let phi = n * (base + d * (g - two) * w) / s2;
            out.times.push(t.to_f64_lossy());
            out.ln_h2.push(ln_h2.to_f64_lossy());
            out.a2.push(a2.to_f64_lossy());
            out.phi.push(phi.to_f64_lossy());
        }
        Ok(out)
    }

    /// Root-sum series along an integrated spherical trajectory, restricted
    /// to the integrated part.
    pub fn from_trajectory<T: Scalar>(traj: &FlowTrajectory<T>) -> Result<Self> {
        if traj.kind() != flow::FlowKind::Spherical {
            return Err(Error::param("trajectory", "needs a spherical flow"));
        }
        let rs = traj.root_system();
        let start = traj.integrated_from();
        let mut out = Self {
            times: Vec::new(),
            ln_h2: Vec::new(),
            a2: Vec::new(),
            phi: Vec::new(),
            g: (rs.rank() == 2).then(|| rs.num_roots() as u32),
            n: rs.dimension(),
            c0: None,
            stationary: false,
            source: Provenance::Ode,
        };
        let mut h_max = 0.0f64;
        for (&t, p) in traj.times().iter().zip(traj.points()) {
            if t < start {
                continue;
            }
            let rep = curvature::curvature_report(rs, p.coords())?;
            let h2 = rep.h2_spherical().to_f64_lossy();
            h_max = h_max.max(h2.sqrt());
            out.times.push(t.to_f64_lossy());
            out.ln_h2.push(h2.ln());
            out.a2.push(rep.a2_spherical.to_f64_lossy());
            out.phi.push(rep.phi.to_f64_lossy());
        }
        out.stationary = h_max < flow::CONVERGENCE_TOL * out.n as f64;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `ln(|A|^2 / |H|^2)` at index `i`.
    pub fn ln_ratio(&self, i: usize) -> f64 {
        self.a2[i].ln() - self.ln_h2[i]
    }

    pub fn h2(&self, i: usize) -> f64 {
        self.ln_h2[i].exp()
    }

    /// Indices with `t <= 0`.
    fn ancient(&self) -> std::ops::Range<usize> {
        0..self.times.partition_point(|&t| t <= 0.0)
    }

    /// The most negative half of the `t <= 0` part.
    fn tail(&self) -> std::ops::Range<usize> {
        let end = self.ancient().end;
        0..end.div_ceil(2)
    }
}

fn check_increasing<T: Scalar>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("times", "empty grid"));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("times", "must be strictly increasing"));
    }
    Ok(())
}

/// `count` equally spaced times over `[t0, t1]`.
pub fn uniform_grid<T: Scalar>(t0: T, t1: T, count: usize) -> Vec<T> {
    if count < 2 {
        return vec![t0];
    }
    (0..count)
        .map(|i| {
            if i + 1 == count {
                t1
            } else {
                t0 + (t1 - t0) * T::count(i) / T::count(count - 1)
            }
        })
        .collect()
}

/// The three conditions on `|A|^2` versus `|H|^2` along a spherical flow.
pub fn audit_hs_conditions(series: &CurvatureSeries) -> Result<Vec<EstimateAudit>> {
    let g = series.g.unwrap_or(1) as f64;
    let n = series.n as f64;
    let ancient = series.ancient();
    if ancient.is_empty() || series.times[0] > -3.0 / (g * n) {
        return Err(Error::param("series", "needs t_start <= -3/(g n)"));
    }
    let tail = series.tail();
    let mut out = Vec::with_capacity(3);

    let mut w = Witness::new(series.source);
    let mut w_exp = Witness::new(series.source);
    if series.stationary {
        let note = "undefined: H vanishes identically".to_string();
        w.note = Some(note.clone());
        w_exp.note = Some(note);
        out.push(EstimateAudit {
            condition_id: ConditionId::HsRatioBounded,
            holds: false,
            witness: w,
        });
        out.push(EstimateAudit {
            condition_id: ConditionId::HsExponential,
            holds: false,
            witness: w_exp,
        });
    } else {
        let mut c = f64::NEG_INFINITY;
        let mut at = series.times[0];
        for i in tail.clone() {
            let r = series.ln_ratio(i);
            if r > c {
                c = r;
                at = series.times[i];
            }
        }
        let (i0, i1) = (tail.start, tail.end - 1);
        let slope = if i1 > i0 {
            (series.ln_ratio(i1) - series.ln_ratio(i0)) / (series.times[i1] - series.times[i0])
        } else {
            0.0
        };
        let positive = series.a2[ancient.clone()].iter().all(|&a| a > 0.0);
        let holds = positive && slope >= -BOUNDED_SLOPE_TOL && c.is_finite();
        w.set("c", c.exp())
            .set("tail_log_slope", slope)
            .set("t_max", at);
        if !holds {
            w.violating_t = Some(series.times[i0]);
            w.note = Some("ratio grows without bound as t decreases".into());
        }
        out.push(EstimateAudit {
            condition_id: ConditionId::HsRatioBounded,
            holds,
            witness: w,
        });

        let mut b = f64::NEG_INFINITY;
        let mut at = f64::NAN;
        for i in tail.clone() {
            let t = series.times[i];
            if t < 0.0 {
                let v = series.ln_ratio(i) / -t;
                if v > b {
                    b = v;
                    at = t;
                }
            }
        }
        let holds = b.is_finite() && b < 4.0 * n;
        w_exp.set("b", b).set("four_n", 4.0 * n).set("t_max", at);
        if !holds {
            w_exp.violating_t = Some(at);
        }
        out.push(EstimateAudit {
            condition_id: ConditionId::HsExponential,
            holds,
            witness: w_exp,
        });
    }

    let mut w = Witness::new(series.source);
    if series.n < 2 {
        w.note = Some("undefined for n = 1".into());
        out.push(EstimateAudit {
            condition_id: ConditionId::HsTraceless,
            holds: false,
            witness: w,
        });
    } else {
        let mut worst = f64::NEG_INFINITY;
        let mut at = series.times[0];
        for i in 0..series.len() {
            let v = series.a2[i] - series.h2(i) / (n - 1.0) - 2.0;
            if v > worst {
                worst = v;
                at = series.times[i];
            }
        }
        let holds = worst <= 0.0;
        w.set("max_excess", worst).set("t_max", at);
        if !holds {
            w.violating_t = Some(at);
        }
        out.push(EstimateAudit {
            condition_id: ConditionId::HsTraceless,
            holds,
            witness: w,
        });
    }
    Ok(out)
}

/// Fits `c_2 e^{-2gnt} <= |A|^2/|H|^2 <= c_1 e^{-2gnt}` over the tail.
pub fn ratio_envelope(series: &CurvatureSeries) -> Result<EstimateAudit> {
    let g = series
        .g
        .ok_or_else(|| Error::param("series", "envelope needs rank-2 data"))?;
    if series.stationary {
        return Err(Error::Stationary);
    }
    let tail = series.tail();
    if tail.is_empty() {
        return Err(Error::param("series", "no samples with t <= 0"));
    }
    let n = series.n as f64;
    let mut w = Witness::new(series.source);
    if g == 1 {
        let r = series.ln_ratio(tail.start).exp();
        w.set("ratio", r).set("one_over_n", 1.0 / n);
        w.note = Some("g = 1: ratio is constant".into());
        return Ok(EstimateAudit {
            condition_id: ConditionId::RatioEnvelope,
            holds: (r - 1.0 / n).abs() <= 1e-12 / n,
            witness: w,
        });
    }
    let k = 2.0 * g as f64 * n;
    let v: Vec<f64> = (0..series.len())
        .map(|i| series.ln_ratio(i) + k * series.times[i])
        .collect();
    let (lo, hi) = v[tail.clone()]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let (c1, c2) = (hi.exp(), lo.exp());
    let mut t_star = series.times[tail.start];
    let mut broke = None;
    for (i, &vi) in v.iter().enumerate() {
        if vi >= lo - ENVELOPE_SLACK && vi <= hi + ENVELOPE_SLACK {
            t_star = series.times[i];
        } else {
            broke = Some(series.times[i]);
            break;
        }
    }
    let holds = c1.is_finite() && c2.is_finite() && c1 > 0.0 && c2 > 0.0;
    w.set("c1", c1).set("c2", c2).set("t1", -t_star);
    if let Some(c0) = series.c0 {
        w.set("c0", c0).set("theory", (g as f64 - 1.0) * n / c0);
    }
    w.violating_t = broke;
    Ok(EstimateAudit {
        condition_id: ConditionId::RatioEnvelope,
        holds,
        witness: w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Above,
}

/// Band `[lo, hi]` for `phi / n` on one side of `theta_min`. The side facing
/// `pi / 2g` gets the lower band when `delta != 0`.
fn band(g: f64, delta: f64, eps: f64, side: Side) -> (f64, f64) {
    let lower = match side {
        Side::Below => delta > 0.0,
        Side::Above => delta < 0.0,
    };
    if lower {
        (g - 1.0 - eps, g - 1.0)
    } else {
        (g - 1.0, g - 1.0 + eps)
    }
}

/// Largest `c` such that `phi` stays in the band on `(theta_min, theta_min +- c)`.
fn band_reach<T: Scalar>(fam: &DihedralFamily, eps: f64, side: Side) -> Result<f64> {
    let g = fam.g() as f64;
    let n = fam.n() as f64;
    let tm = fam.theta_min::<f64>();
    let (lo, hi) = band(g, fam.delta::<f64>(), eps, side);
    let slack = BAND_TOL * g;
    let reach = match side {
        Side::Below => tm,
        Side::Above => fam.sector_upper::<f64>() - tm,
    };
    let at = |c: f64| -> Result<bool> {
        let th = match side {
            Side::Below => tm - c,
            Side::Above => tm + c,
        };
        let p = rank2::phi_closed(fam, T::lit(th))?.to_f64_lossy() / n;
        Ok(p >= lo - slack && p <= hi + slack)
    };
    let steps = 4000;
    let mut prev = 0.0;
    for j in 1..steps {
        let c = reach * j as f64 / steps as f64;
        if !at(c)? {
            let (mut a, mut b) = (prev, c);
            while b - a > 1e-15 * reach.max(1.0) {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if at(m)? {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok(a);
        }
        prev = c;
    }
    Ok(reach)
}

/// Largest half-width `c0` of the window around `theta_min` on which `phi`
/// stays within its band for `t <= 0`, and an audit of `cfg` itself.
pub fn phi_band<T: Scalar>(cfg: &Rank2Config<T>, eps: f64) -> Result<(f64, EstimateAudit)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", "must lie in (0, 1)"));
    }
    let fam = cfg.family();
    let g = fam.g() as f64;
    let n = fam.n() as f64;
    let delta = fam.delta::<f64>();
    let tm = fam.theta_min::<f64>();
    let th0 = cfg.theta0().to_f64_lossy();
    let below = band_reach::<T>(fam, eps, Side::Below)?;
    let above = band_reach::<T>(fam, eps, Side::Above)?;
    let side = if th0 < tm { Side::Below } else { Side::Above };
    let c0 = if delta == 0.0 || cfg.is_minimal() {
        below.min(above)
    } else {
        match side {
            Side::Below => below,
            Side::Above => above,
        }
    };
    let (lo, hi) = band(g, delta, eps, side);
    let slack = BAND_TOL * g;

    let mut w = Witness::new(Provenance::ClosedForm);
    w.set("c0", c0)
        .set("c0_below", below)
        .set("c0_above", above)
        .set("band_lo", lo * n)
        .set("band_hi", hi * n)
        .set("theta0", th0)
        .set("theta_min", tm)
        .set("eps", eps);
    let mut phi_min = f64::INFINITY;
    let mut phi_max = f64::NEG_INFINITY;
    let samples = 2000;
    let mut violating = None;
    for j in 0..=samples {
        let th = th0 + (tm - th0) * j as f64 / samples as f64;
        let p = rank2::phi_closed(fam, T::lit(th))?.to_f64_lossy();
        phi_min = phi_min.min(p);
        phi_max = phi_max.max(p);
        if violating.is_none() && !(p / n >= lo - slack && p / n <= hi + slack) {
            violating = Some(th);
        }
    }
    w.set("phi_min", phi_min).set("phi_max", phi_max);
    let inside = cfg.is_minimal() || (th0 - tm).abs() < c0;
    if let Some(th) = violating {
        let wv = (g * th).cos() + delta;
        let w0 = cfg.excess0().to_f64_lossy();
        w.violating_t = Some((wv / w0).ln() / (g * n));
    }
    if !inside {
        w.note = Some("theta0 lies outside the window".into());
    }
    Ok((
        c0,
        EstimateAudit {
            condition_id: ConditionId::PhiBand,
            holds: inside && violating.is_none(),
            witness: w,
        },
    ))
}

/// `g (1 + delta) / (n (cos g theta_0 + delta)^2)`.
pub fn sharpness_coefficient<T: Scalar>(fam: &DihedralFamily, theta0: T) -> T {
    let (g, n) = (T::lit(fam.g() as f64), T::lit(fam.n() as f64));
    let d = fam.delta::<T>();
    let w = (g * theta0).cos() + d;
    g * (T::one() + d) / (n * w * w)
}

/// The largest `theta_0` with coefficient below 1, and an audit of
/// `|A|^2 < e^{-2gnt} |H|^2` over `t in [-5, 0.9 T_+]`.
pub fn sharpness_witness(g: u32, m1: u32, m2: u32) -> Result<(f64, EstimateAudit)> {
    let fam = DihedralFamily::new(g, m1, m2)?;
    sharpness_witness_on(&fam, -5.0, 2001)
}

pub fn sharpness_witness_on(
    fam: &DihedralFamily,
    t_start: f64,
    points: usize,
) -> Result<(f64, EstimateAudit)> {
    let (g, n) = (fam.g(), fam.n());
    if g < 2 {
        return Err(Error::param("g", "sharpness needs g >= 2"));
    }
    if n <= g {
        return Err(Error::param(
            "n",
            format!("sharpness needs n > g, got n = {n}, g = {g}"),
        ));
    }
    if !(t_start < 0.0) || points < 2 {
        return Err(Error::param(
            "t_start",
            "needs t_start < 0 and at least two points",
        ));
    }
    let (mut a, mut b) = (0.0f64, fam.theta_min::<f64>());
    if !(sharpness_coefficient(fam, b * 1e-9) < 1.0) {
        return Err(Error::NoConvergence { residual: f64::NAN });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if sharpness_coefficient(fam, m) < 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let theta0 = a;
    let cfg = Rank2Config::new(*fam, theta0)?;
    let t_plus = rank2::collapse_times(&cfg).ok_or(Error::Stationary)?.time;
    let times = uniform_grid(t_start, 0.9 * t_plus, points);
    let series = CurvatureSeries::closed_form(&cfg, &times)?;
    let k = 2.0 * g as f64 * n as f64;
    let mut margin = f64::INFINITY;
    let mut worst = times[0];
    for i in 0..series.len() {
        let m = -(series.ln_ratio(i) + k * series.times[i]);
        if m < margin {
            margin = m;
            worst = series.times[i];
        }
    }
    let holds = margin > 0.0 && margin.is_finite();
    let mut w = Witness::new(Provenance::ClosedForm);
    w.set("theta0", theta0)
        .set("coefficient", sharpness_coefficient(fam, theta0))
        .set("min_log_margin", margin)
        .set("worst_t", worst)
        .set("t_start", t_start)
        .set("t_end", 0.9 * t_plus)
        .set("t_plus", t_plus)
        .set("g", g as f64)
        .set("n", n as f64);
    if !holds {
        w.violating_t = Some(worst);
    }
    Ok((
        theta0,
        EstimateAudit {
            condition_id: ConditionId::Sharpness,
            holds,
            witness: w,
        },
    ))
}

/// Smallest log-margin of
/// `(2n/g) |A|^2/|H|^2 <= 2 (1 + delta) / (cos g theta_0 + delta)^2 e^{-2gnt}`
/// over `times`, with the time attaining it.
pub fn chain_inequality_margin<T: Scalar>(cfg: &Rank2Config<T>, times: &[T]) -> Result<(f64, f64)> {
    if cfg.is_minimal() {
        return Err(Error::Stationary);
    }
    let series = CurvatureSeries::closed_form(cfg, times)?;
    let (g, n) = (cfg.g() as f64, cfg.n() as f64);
    let d = cfg.delta().to_f64_lossy();
    let w0 = cfg.excess0().to_f64_lossy();
    let ln_rhs0 = (2.0 * (1.0 + d) / (w0 * w0)).ln();
    let mut margin = f64::INFINITY;
    let mut at = series.times[0];
    for i in 0..series.len() {
        let t = series.times[i];
        let lhs = (2.0 * n / g).ln() + series.ln_ratio(i);
        let m = ln_rhs0 - 2.0 * g * n * t - lhs;
        if m < margin {
            margin = m;
            at = t;
        }
    }
    Ok((margin, at))
}

/// `|a - b| / max(|a|, |b|, scale)`.
pub fn rel_residual(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(scale.abs())
}

/// One numerical identity checked over a set of samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    /// Sample attaining `max_residual`.
    pub worst_at: Vec<f64>,
    pub source: Provenance,
}

#[derive(Debug)]
struct Accumulator {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    worst_at: Vec<f64>,
    samples: usize,
    source: Provenance,
}

impl Accumulator {
    fn new(name: &'static str, tolerance: f64, source: Provenance) -> Self {
        Self {
            name,
            tolerance,
            worst: 0.0,
            worst_at: Vec::new(),
            samples: 0,
            source,
        }
    }

    fn push(&mut self, residual: f64, at: &[f64]) {
        self.samples += 1;
        let r = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual
        };
        if r > self.worst || self.worst_at.is_empty() {
            self.worst = self.worst.max(r);
            self.worst_at = at.to_vec();
        }
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name,
            max_residual: self.worst,
            tolerance: self.tolerance,
            samples: self.samples,
            passed: self.samples > 0 && self.worst <= self.tolerance,
            worst_at: self.worst_at,
            source: self.source,
        }
    }
}

fn vec_rel<T: Scalar>(a: &[T], b: &[T], scale: f64) -> f64 {
    let d = linalg::distance(a, b).to_f64_lossy();
    if d == 0.0 {
        return 0.0;
    }
    let na = linalg::norm(a).to_f64_lossy();
    let nb = linalg::norm(b).to_f64_lossy();
    d / na.max(nb).max(scale)
}

/// Root sums on `rs` against the closed forms of `fam` at random `(r, theta)`.
pub fn check_oracle_vs_closed<T: Scalar>(
    fam: &DihedralFamily,
    rs: &RootSystemData<T>,
    sampler: &mut Sampler,
    count: usize,
) -> Result<IdentityCheck> {
    let mut acc = Accumulator::new("oracle_vs_closed_form", 1e-12, Provenance::Oracle);
    for (r, th) in sampler.polar(fam.sector_upper::<f64>(), 0.5, 2.0, count) {
        let (rt, tt) = (T::lit(r), T::lit(th));
        let x = vec![rt * tt.cos(), rt * tt.sin()];
        let rep = curvature::curvature_report(rs, &x)?;
        let (he, hs) = rank2::mean_curvature_closed(fam, rt, tt)?;
        let (ae, as_) = rank2::shape_norms_closed(fam, rt, tt)?;
        let he_norm = linalg::norm(&rep.h_euclidean).to_f64_lossy();
        let ae_o = rep.a2_euclidean.to_f64_lossy();
        let res = [
            vec_rel(&rep.h_euclidean, &he, 0.0),
            vec_rel(&rep.h_spherical, &hs, he_norm),
            rel_residual(ae_o, ae.to_f64_lossy(), 0.0),
            rel_residual(rep.a2_spherical.to_f64_lossy(), as_.to_f64_lossy(), ae_o),
        ];
        acc.push(res.iter().fold(0.0, |m, &v| m.max(v)), &[r, th]);
    }
    Ok(acc.finish())
}

/// Minimal point of `rs` against the values predicted by `fam`:
/// `|H^S(z)| <= 1e-11`, `|H^E(z)| = n`, `|A^S(z)|^2 = n (g - 1)`.
pub fn check_minimal_point<T: Scalar>(
    fam: &DihedralFamily,
    rs: &RootSystemData<T>,
) -> Result<Vec<IdentityCheck>> {
    let mp = flow::find_minimal_point(rs)?;
    let z = mp.z.coords();
    let rep = curvature::curvature_report(rs, z)?;
    let zf: Vec<f64> = z.iter().map(|v| v.to_f64_lossy()).collect();
    let (g, n) = (fam.g() as f64, fam.n() as f64);
    let mut hs = Accumulator::new("minimal_hs_vanishes", 1e-11, Provenance::Oracle);
    hs.push(linalg::norm(&rep.h_spherical).to_f64_lossy(), &zf);
    let mut he = Accumulator::new("minimal_he_norm", 1e-10, Provenance::Oracle);
    he.push(
        (linalg::norm(&rep.h_euclidean).to_f64_lossy() - n).abs(),
        &zf,
    );
    let mut a = Accumulator::new("minimal_shape_norm", 1e-8, Provenance::Oracle);
    a.push((rep.a2_spherical.to_f64_lossy() - n * (g - 1.0)).abs(), &zf);
    Ok(vec![hs.finish(), he.finish(), a.finish()])
}

/// `|A^S|^2 - (g/2n)|H^S|^2` from root sums against its closed form, and for
/// `delta = 0` also `|A^S|^2 - (g/n)|H^S|^2 = n (g - 1) / r^2`.
pub fn check_a_minus_h<T: Scalar>(
    fam: &DihedralFamily,
    rs: &RootSystemData<T>,
    sampler: &mut Sampler,
    count: usize,
) -> Result<Vec<IdentityCheck>> {
    let (g, n) = (fam.g() as f64, fam.n() as f64);
    let equal = fam.m1() == fam.m2();
    let mut general = Accumulator::new("a_minus_h_identity", 1e-12, Provenance::Oracle);
    let mut simple = Accumulator::new("a_minus_h_equal_multiplicities", 1e-12, Provenance::Oracle);
    for (r, th) in sampler.polar(fam.sector_upper::<f64>(), 0.5, 2.0, count) {
        let (rt, tt) = (T::lit(r), T::lit(th));
        let x = vec![rt * tt.cos(), rt * tt.sin()];
        let rep = curvature::curvature_report(rs, &x)?;
        let a = rep.a2_spherical.to_f64_lossy();
        let h = rep.h2_spherical().to_f64_lossy();
        let scale = rep.a2_euclidean.to_f64_lossy();
        let rhs = rank2::a_minus_h_rhs(fam, rt, tt)?.to_f64_lossy();
        general.push(rel_residual(a - g / (2.0 * n) * h, rhs, scale), &[r, th]);
        if equal {
            simple.push(
                rel_residual(a - g / n * h, n * (g - 1.0) / (r * r), scale),
                &[r, th],
            );
        }
    }
    let mut out = vec![general.finish()];
    if equal {
        out.push(simple.finish());
    }
    Ok(out)
}

/// `|A|^2 - |H|^2/(n - 1) - 2 = ((n - 2)/(n - 1)) tan^2 theta` on the unit
/// sphere, for `g = 2`, `m = (1, n - 1)`.
pub fn check_torus_identity<T: Scalar>(
    fam: &DihedralFamily,
    rs: &RootSystemData<T>,
    sampler: &mut Sampler,
    count: usize,
) -> Result<IdentityCheck> {
    if fam.g() != 2 || fam.m1() != 1 {
        return Err(Error::param("family", "needs g = 2 and m1 = 1"));
    }
    let n = fam.n();
    let nf = n as f64;
    let mut acc = Accumulator::new("torus_excess_identity", 1e-12, Provenance::Oracle);
    for (_, th) in sampler.polar(fam.sector_upper::<f64>(), 0.5, 2.0, count) {
        let tt = T::lit(th);
        let x = vec![tt.cos(), tt.sin()];
        let rep = curvature::curvature_report(rs, &x)?;
        let lhs =
            rep.a2_spherical.to_f64_lossy() - rep.h2_spherical().to_f64_lossy() / (nf - 1.0) - 2.0;
        let rhs = rank2::torus_excess_rhs(n, tt)?.to_f64_lossy();
        acc.push(
            rel_residual(lhs, rhs, rep.a2_euclidean.to_f64_lossy()),
            &[th],
        );
    }
    Ok(acc.finish())
}

/// `|A^S|^2` as the sum over curvature normals projected onto the sphere,
/// `sum m_i (|alpha_i|^2 - <alpha_i, x/|x|>^2) / <x, alpha_i>^2`.
pub fn shape_norm_sq_tangential<T: Scalar>(rs: &RootSystemData<T>, x: &[T]) -> Result<T> {
    let p = rs.pairings(x)?;
    let r = linalg::norm(x);
    if !(r > T::zero()) {
        return Err(Error::OutsideChamber { margin: 0.0 });
    }
    Ok(linalg::sum_compensated(
        rs.roots()
            .iter()
            .zip(rs.multiplicities())
            .zip(&p)
            .map(|((a, &m), &pi)| {
                let c = pi / r;
                T::lit(m as f64) * (linalg::norm_sq(a) - c * c) / (pi * pi)
            }),
    ))
}

/// The subtraction laws `|H^E|^2 = |H^S|^2 + n^2/|x|^2` and
/// `|A^E|^2 - n/|x|^2 = |A^S|^2`, the latter against the projected-normal
/// sum, plus `<H^S, x> = 0`.
pub fn check_pythagoras<T: Scalar>(
    rs: &RootSystemData<T>,
    sampler: &mut Sampler,
    count: usize,
) -> Result<Vec<IdentityCheck>> {
    let n = rs.dimension() as f64;
    let mut h = Accumulator::new("pythagoras_mean_curvature", 1e-10, Provenance::Oracle);
    let mut a = Accumulator::new("pythagoras_shape_norm", 1e-10, Provenance::Oracle);
    let mut o = Accumulator::new("spherical_orthogonality", 1e-10, Provenance::Oracle);
    for x in sampler.chamber_points(rs, count)? {
        let xf: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
        let rep = curvature::curvature_report(rs, &x)?;
        let r2 = linalg::norm_sq(&x).to_f64_lossy();
        let he2 = rep.h2_euclidean().to_f64_lossy();
        h.push(
            rel_residual(he2, rep.h2_spherical().to_f64_lossy() + n * n / r2, 0.0),
            &xf,
        );
        let ae = rep.a2_euclidean.to_f64_lossy();
        let tang = shape_norm_sq_tangential(rs, &x)?.to_f64_lossy();
        a.push(rel_residual(ae - n / r2, tang, ae), &xf);
        let dot = linalg::dot(&rep.h_spherical, &x).to_f64_lossy().abs();
        o.push(dot / (he2.sqrt() * r2.sqrt()), &xf);
    }
    Ok(vec![h.finish(), a.finish(), o.finish()])
}

/// `sum_k cot(k pi/g + beta) = g cot(g beta)` and the squared version on a
/// grid of `count` angles in `[-pi/2, pi/2)` with `|sin g beta| >= 0.05`.
pub fn check_trig_identities(g: u32, count: usize) -> Result<Vec<IdentityCheck>> {
    let gf = g as f64;
    let raw = 2 * count;
    let pts: Vec<f64> = (0..raw)
        .map(|i| {
            -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / raw as f64
        })
        .filter(|b| (gf * b).sin().abs() >= 0.05)
        .collect();
    if pts.len() < count {
        return Err(Error::param(
            "count",
            "not enough angles away from the poles",
        ));
    }
    let mut lin = Accumulator::new("cot_sum_identity", 1e-9, Provenance::ClosedForm);
    let mut sq = Accumulator::new("cot_square_sum_identity", 1e-9, Provenance::ClosedForm);
    for j in 0..count {
        let b = pts[j * pts.len() / count];
        let s1 = rank2::sum_cot::<f64>(g, b)?;
        let c1 = rank2::sum_cot_closed::<f64>(g, b)?;
        lin.push((s1 - c1).abs(), &[b]);
        let s2 = rank2::sum_cot_sq::<f64>(g, b)?;
        let c2 = rank2::sum_cot_sq_closed::<f64>(g, b)?;
        sq.push((s2 - c2).abs(), &[b]);
    }
    Ok(vec![lin.finish(), sq.finish()])
}

/// Every identity check for the family `fam`, with root sums taken on `rs`
/// (normally `fam.root_system()`, or a corrupted copy as a control).
pub fn check_family<T: Scalar>(
    fam: &DihedralFamily,
    rs: &RootSystemData<T>,
    sampler: &mut Sampler,
) -> Result<Vec<IdentityCheck>> {
    let mut out = vec![check_oracle_vs_closed(fam, rs, sampler, 100)?];
    out.extend(check_minimal_point(fam, rs)?);
    out.extend(check_a_minus_h(fam, rs, sampler, 100)?);
    if fam.g() == 2 && fam.m1() == 1 {
        out.push(check_torus_identity(fam, rs, sampler, 100)?);
    }
    out.extend(check_pythagoras(rs, sampler, 1000)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

    fn cfg(g: u32, m1: u32, m2: u32, th: f64) -> Rank2Config<f64> {
        Rank2Config::new(DihedralFamily::new(g, m1, m2).unwrap(), th).unwrap()
    }

    #[test]
    fn closed_series_matches_oracle() {
        let c = cfg(4, 1, 3, 0.3);
        let times = uniform_grid(-0.2, 0.01, 30);
        let s = CurvatureSeries::closed_form(&c, &times).unwrap();
        let rs = c.family().root_system::<f64>();
        for (i, &t) in times.iter().enumerate() {
            let y = rank2::spherical_state(&c, t).unwrap();
            let rep = curvature::curvature_report(&rs, &y).unwrap();
            assert!(rel_residual(s.a2[i], rep.a2_spherical, 0.0) < 1e-10);
            assert!(rel_residual(s.h2(i), rep.h2_spherical(), 1e-12) < 1e-9);
            assert!(rel_residual(s.phi[i], rep.phi, 0.0) < 1e-10);
        }
    }

    #[test]
    fn shrinking_cap_ratio() {
        let c = cfg(1, 2, 2, 0.4);
        let s = CurvatureSeries::closed_form(&c, &uniform_grid(-3.0, 0.0, 200)).unwrap();
        let audits = audit_hs_conditions(&s).unwrap();
        let c5 = &audits[0];
        assert!(c5.holds);
        assert!((c5.witness.get("c").unwrap() - 0.5).abs() < 1e-13);
        let env = ratio_envelope(&s).unwrap();
        assert!(env.holds);
        assert!(env.witness.note.as_deref().unwrap().contains("g = 1"));
    }

    #[test]
    fn exponential_rate_approaches_eight() {
        let c = cfg(2, 1, 1, FRAC_PI_6);
        let mut prev = f64::INFINITY;
        for t0 in [-5.0, -20.0, -80.0] {
            let s = CurvatureSeries::closed_form(&c, &uniform_grid(t0, 0.0, 400)).unwrap();
            let a = audit_hs_conditions(&s).unwrap();
            assert!(!a[0].holds);
            let b = a[1].witness.get("b").unwrap();
            assert!(b > 8.0 && b < prev);
            prev = b;
        }
        assert!(prev - 8.0 < 0.03);
    }

    #[test]
    fn torus_traceless_quantity() {
        let c = cfg(2, 1, 3, 0.5);
        let times = uniform_grid(-3.0, 0.0, 100);
        let s = CurvatureSeries::closed_form(&c, &times).unwrap();
        let a = audit_hs_conditions(&s).unwrap();
        assert!(!a[2].holds);
        for (i, &t) in times.iter().enumerate() {
            let th = rank2::spherical_theta(&c, t).unwrap();
            let lhs = s.a2[i] - s.h2(i) / 3.0 - 2.0;
            let rhs = 2.0 / 3.0 * th.tan().powi(2);
            assert!((lhs - rhs).abs() < 1e-11 * rhs.max(1.0));
        }
    }

    #[test]
    fn stationary_series_is_undefined() {
        let c = cfg(2, 1, 1, FRAC_PI_4);
        let s = CurvatureSeries::closed_form(&c, &uniform_grid(-3.0, 0.0, 10)).unwrap();
        assert!(s.stationary);
        let a = audit_hs_conditions(&s).unwrap();
        assert!(a[0]
            .witness
            .note
            .as_deref()
            .unwrap()
            .starts_with("undefined"));
        assert!(matches!(ratio_envelope(&s), Err(Error::Stationary)));
    }

    #[test]
    fn envelope_brackets_limit() {
        let c = cfg(2, 1, 1, FRAC_PI_6);
        let s = CurvatureSeries::closed_form(&c, &uniform_grid(-10.0, 0.0, 500)).unwrap();
        let e = ratio_envelope(&s).unwrap();
        let th = e.witness.get("theory").unwrap();
        assert!((th - 2.0).abs() < 1e-12);
        let (c1, c2) = (e.witness.get("c1").unwrap(), e.witness.get("c2").unwrap());
        assert!(c2 * (1.0 - 1e-9) <= th && th <= c1);
    }

    #[test]
    fn phi_band_g2_equal() {
        let c = cfg(2, 1, 1, 0.7);
        let (c0, a) = phi_band(&c, 0.5).unwrap();
        let expect = FRAC_PI_4 - 0.5 * (2.0f64 / 3.0).sqrt().asin();
        assert!((c0 - expect).abs() < 1e-12, "{c0} {expect}");
        assert!(a.holds);
        assert!(a.witness.get("phi_min").unwrap() >= 2.0);
        let far = cfg(2, 1, 1, 0.2);
        assert!(!phi_band(&far, 0.5).unwrap().1.holds);
        assert!(phi_band(&c, 1.0).is_err());
    }

    #[test]
    fn phi_band_g4_below_minimum() {
        let fam = DihedralFamily::new(4, 1, 3).unwrap();
        let tm = fam.theta_min::<f64>();
        let c = Rank2Config::new(fam, tm - 0.01).unwrap();
        let (_, a) = phi_band(&c, 0.1).unwrap();
        assert!(a.holds);
        let n = fam.n() as f64;
        assert!(a.witness.get("phi_max").unwrap() <= 3.0 * n * (1.0 + 1e-12));
        assert!(a.witness.get("band_hi").unwrap() == 3.0 * n);
    }

    #[test]
    fn sharpness_g2_n3() {
        let (th, a) = sharpness_witness(2, 1, 2).unwrap();
        assert!(a.holds, "{a:?}");
        let fam = DihedralFamily::new(2, 1, 2).unwrap();
        assert!(sharpness_coefficient(&fam, th) < 1.0);
        assert!(sharpness_coefficient(&fam, th * (1.0 + 1e-9)) >= 1.0);
        assert!(sharpness_witness(2, 1, 1).is_err());
        let (_, a) = sharpness_witness(4, 2, 2).unwrap();
        assert!(a.holds);
    }

    #[test]
    fn chain_margin_positive() {
        for (g, m1, m2, th) in [
            (2, 1, 3, 0.3),
            (3, 1, 1, 0.2),
            (6, 2, 2, 0.1),
            (4, 1, 1, 0.5),
        ] {
            let c = cfg(g, m1, m2, th);
            let tp = rank2::collapse_times(&c).unwrap().time;
            let (m, _) = chain_inequality_margin(&c, &uniform_grid(-2.0, 0.99 * tp, 300)).unwrap();
            assert!(m > 0.0);
        }
    }

    #[test]
    fn identity_checks_pass_and_detect_corruption() {
        let fam = DihedralFamily::new(2, 1, 3).unwrap();
        let rs = fam.root_system::<f64>();
        let mut s = Sampler::seeded(11);
        let checks = check_family(&fam, &rs, &mut s).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
        let bad = rs.with_multiplicity(0, 2).unwrap();
        let checks = check_family(&fam, &bad, &mut s).unwrap();
        assert!(checks.iter().any(|c| !c.passed));
    }

    #[test]
    fn tangential_route_detects_bad_norms() {
        let rs = RootSystemData::from_raw_parts(vec![vec![1.1, 0.0], vec![0.0, 1.0]], vec![1, 1])
            .unwrap();
        let checks = check_pythagoras(&rs, &mut Sampler::seeded(2), 50).unwrap();
        assert!(!checks[1].passed);
    }

    #[test]
    fn trig_grid() {
        for g in 1..=12 {
            for c in check_trig_identities(g, 1000).unwrap() {
                assert!(c.passed, "g={g} {c:?}");
            }
        }
        let _ = PI;
    }
}
