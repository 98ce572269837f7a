//! Mean curvature flow as an ODE in the Weyl chamber.
//!
//! The Euclidean flow is `x' = H^E(x)` and the spherical flow is
//! `y' = H^S(y)` on the unit sphere. Both are integrated from `x0` at
//! `t = 0`, backwards to `t_start` and forwards to `t_end`. Forward legs stop
//! when the chamber margin drops below `collapse_margin`; backward spherical
//! legs stop once the spherical mean curvature is negligible, i.e. the flow
//! has reached the minimal leaf.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::curvature;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::{DenseSegment, Dopri5, StepFailure, StepOptions};
use crate::root_system::{ChamberPoint, RootSystemData};
use crate::scalar::Scalar;

/// Backward spherical integration stops once `|H^S| <` this.
pub const CONVERGENCE_TOL: f64 = 1e-11;
/// Width in `t` to which collapse events are localized.
pub const EVENT_TOL: f64 = 1e-12;
/// Underflow within this multiple of `collapse_margin` of a wall counts as a
/// collapse resolved to the precision of `t`.
pub const TIME_RESOLUTION_FACTOR: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Euclidean,
    Spherical,
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowKind::Euclidean => "euclidean",
            FlowKind::Spherical => "spherical",
        })
    }
}

impl FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "e" => Ok(FlowKind::Euclidean),
            "spherical" | "s" => Ok(FlowKind::Spherical),
            other => Err(Error::param("kind", format!("unknown flow kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSpec<T> {
    pub kind: FlowKind,
    pub root_system: RootSystemData<T>,
    pub x0: Vec<T>,
    pub t_start: T,
    pub t_end: T,
    pub rtol: T,
    pub atol: T,
    pub collapse_margin: T,
    pub max_steps: usize,
}

impl<T: Scalar> FlowSpec<T> {
    /// A spec with the default tolerances (`rtol = 1e-10`, `atol = 1e-12`,
    /// `collapse_margin = 1e-8`).
    pub fn new(
        kind: FlowKind,
        root_system: RootSystemData<T>,
        x0: Vec<T>,
        t_start: T,
        t_end: T,
    ) -> Self {
        Self {
            kind,
            root_system,
            x0,
            t_start,
            t_end,
            rtol: T::tol(1e-10),
            atol: T::tol(1e-12),
            collapse_margin: T::tol(1e-8),
            max_steps: 500_000,
        }
    }

    pub fn with_tolerances(mut self, rtol: T, atol: T) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_collapse_margin(mut self, margin: T) -> Self {
        self.collapse_margin = margin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start < self.t_end) {
            return Err(Error::param("t_span", "t_start must be below t_end"));
        }
        if self.t_start > T::zero() || self.t_end < T::zero() {
            return Err(Error::param("t_span", "the span must contain t = 0"));
        }
        if !(self.rtol > T::zero() && self.atol > T::zero()) {
            return Err(Error::param("rtol/atol", "tolerances must be positive"));
        }
        if !(self.collapse_margin > T::zero()) {
            return Err(Error::param("collapse_margin", "must be positive"));
        }
        self.root_system.chamber_point(self.x0.clone())?;
        if self.kind == FlowKind::Spherical {
            let dev = (linalg::norm(&self.x0) - T::one()).abs();
            if dev > T::tol(1e-12) {
                return Err(Error::param(
                    "x0",
                    format!(
                        "spherical start must be a unit vector (|x0| - 1 = {:e})",
                        dev.to_f64_lossy()
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseDetection {
    /// The margin crossed `collapse_margin`; localized by bisection.
    Margin,
    /// The step size reached the resolution of `t` right next to a wall.
    TimeResolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination<T> {
    ReachedEnd,
    Collapsed {
        t_hit: T,
        wall_index: usize,
        detection: CollapseDetection,
    },
    ConvergedToFixedPoint {
        t: T,
        z: Vec<T>,
    },
}

impl<T: Scalar> Termination<T> {
    pub fn collapse_time(&self) -> Option<T> {
        match self {
            Termination::Collapsed { t_hit, .. } => Some(*t_hit),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedEnd => "reached_end",
            Termination::Collapsed { .. } => "collapsed",
            Termination::ConvergedToFixedPoint { .. } => "converged_to_fixed_point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowStats<T> {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// The relative tolerance finally used (halved once after an underflow).
    pub rtol_used: T,
}

#[derive(Debug, Clone)]
enum Interpolant<T> {
    Dense(Vec<DenseSegment<T>>),
    /// Euclidean flow rebuilt from a spherical one.
    Reparametrized(Box<FlowTrajectory<T>>),
}

/// Integrated flow on an increasing time grid. The backward and forward legs
/// keep separate termination records.
#[derive(Debug, Clone)]
pub struct FlowTrajectory<T> {
    kind: FlowKind,
    root_system: RootSystemData<T>,
    times: Vec<T>,
    points: Vec<ChamberPoint<T>>,
    interp: Interpolant<T>,
    past: Termination<T>,
    future: Termination<T>,
    stats: FlowStats<T>,
}

impl<T: Scalar> FlowTrajectory<T> {
    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn root_system(&self) -> &RootSystemData<T> {
        &self.root_system
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn points(&self) -> &[ChamberPoint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_first(&self) -> T {
        self.times[0]
    }

    pub fn t_last(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// How the backward leg ended.
    pub fn past(&self) -> &Termination<T> {
        &self.past
    }

    /// How the forward leg ended.
    pub fn future(&self) -> &Termination<T> {
        &self.future
    }

    /// The forward record if it ended early, else the backward one.
    pub fn termination(&self) -> &Termination<T> {
        match self.future {
            Termination::ReachedEnd => &self.past,
            _ => &self.future,
        }
    }

    pub fn stats(&self) -> &FlowStats<T> {
        &self.stats
    }

    /// Earliest time that was actually integrated rather than padded with
    /// the fixed point.
    pub fn integrated_from(&self) -> T {
        match &self.past {
            Termination::ConvergedToFixedPoint { t, .. } => *t,
            _ => self.t_first(),
        }
    }

    /// State at time `t` from the dense output.
    pub fn sample(&self, t: T) -> Result<Vec<T>> {
        if !(t >= self.t_first() && t <= self.t_last()) {
            return Err(Error::OutOfDomain {
                t: t.to_f64_lossy(),
                collapse: self.future.collapse_time().map(|c| c.to_f64_lossy()),
            });
        }
        match &self.interp {
            Interpolant::Dense(segs) => {
                let idx = segs.partition_point(|s| s.t_start().max(s.t_end()) < t);
                let seg = &segs[idx.min(segs.len() - 1)];
                let y = seg.eval(t);
                Ok(match self.kind {
                    FlowKind::Spherical => linalg::normalized(&y).unwrap_or(y),
                    FlowKind::Euclidean => y,
                })
            }
            Interpolant::Reparametrized(src) => {
                let n = src.root_system.n();
                let rho = T::one() - T::lit(2.0) * n * t;
                let s = -rho.ln() / (T::lit(2.0) * n);
                let s = s.max(src.t_first()).min(src.t_last());
                Ok(linalg::scale(&src.sample(s)?, rho.sqrt()))
            }
        }
    }
}

fn field<T: Scalar>(rs: &RootSystemData<T>, kind: FlowKind, y: &[T]) -> Option<Vec<T>> {
    match kind {
        FlowKind::Euclidean => curvature::mean_curvature_euclidean(rs, y).ok(),
        FlowKind::Spherical => {
            let h = curvature::mean_curvature_spherical(rs, y).ok()?;
            let radial = linalg::dot(&h, y) / linalg::norm_sq(y);
            Some(h.iter().zip(y).map(|(&a, &b)| a - radial * b).collect())
        }
    }
}

fn hs_norm<T: Scalar>(rs: &RootSystemData<T>, y: &[T]) -> T {
    curvature::mean_curvature_spherical(rs, y)
        .map(|h| linalg::norm(&h))
        .unwrap_or(T::infinity())
}

struct Leg<T> {
    ts: Vec<T>,
    ys: Vec<Vec<T>>,
    segs: Vec<DenseSegment<T>>,
    term: Termination<T>,
    accepted: usize,
    rejected: usize,
}

enum LegError<T> {
    Underflow { t: T, y: Vec<T> },
    Budget { steps: usize, t: T },
}

fn project<T: Scalar>(kind: FlowKind, y: Vec<T>) -> Vec<T> {
    match kind {
        FlowKind::Spherical => linalg::normalized(&y).unwrap_or(y),
        FlowKind::Euclidean => y,
    }
}

fn run_leg<T: Scalar>(spec: &FlowSpec<T>, target: T, rtol: T) -> Result<Leg<T>, LegError<T>> {
    let rs = &spec.root_system;
    let kind = spec.kind;
    let cm = spec.collapse_margin;
    let backward = target < T::zero();
    let opts = StepOptions {
        rtol,
        atol: spec.atol,
        h_max: None,
        max_steps: spec.max_steps,
    };
    let f = |y: &[T], out: &mut [T]| match field(rs, kind, y) {
        Some(v) => {
            out.copy_from_slice(&v);
            true
        }
        None => false,
    };
    let mut stepper = Dopri5::new(f, T::zero(), spec.x0.clone(), target, opts);
    let mut leg = Leg {
        ts: vec![T::zero()],
        ys: vec![spec.x0.clone()],
        segs: Vec::new(),
        term: Termination::ReachedEnd,
        accepted: 0,
        rejected: 0,
    };
    let margin_of = |y: &[T]| rs.margin(y).expect("dimension checked");
    loop {
        if stepper.finished() {
            break;
        }
        let t_prev = stepper.t();
        match stepper.step() {
            Ok(acc) => {
                let y = project(kind, acc.y);
                if kind == FlowKind::Spherical {
                    stepper.set_state(y.clone());
                }
                let (m, _) = margin_of(&y);
                if m < cm {
                    let (mut a, mut b) = (t_prev, acc.t);
                    while (b - a).abs() > T::tol(EVENT_TOL) {
                        let mid = a + (b - a) / T::lit(2.0);
                        if mid == a || mid == b {
                            break;
                        }
                        let ym = project(kind, acc.segment.eval(mid));
                        if margin_of(&ym).0 >= cm {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    if a != t_prev {
                        leg.ts.push(a);
                        leg.ys.push(project(kind, acc.segment.eval(a)));
                    }
                    leg.segs.push(acc.segment);
                    let (_, wall) = margin_of(leg.ys.last().expect("leg is non-empty"));
                    leg.term = Termination::Collapsed {
                        t_hit: *leg.ts.last().expect("leg is non-empty"),
                        wall_index: wall,
                        detection: CollapseDetection::Margin,
                    };
                    break;
                }
                leg.ts.push(acc.t);
                leg.ys.push(y.clone());
                leg.segs.push(acc.segment);
                if kind == FlowKind::Spherical
                    && backward
                    && hs_norm(rs, &y) < T::tol(CONVERGENCE_TOL)
                {
                    leg.term = Termination::ConvergedToFixedPoint { t: acc.t, z: y };
                    break;
                }
            }
            Err(StepFailure::Underflow { t, .. }) => {
                let y = stepper.y().to_vec();
                let (m, wall) = margin_of(&y);
                if !backward && m < cm * T::lit(TIME_RESOLUTION_FACTOR) {
                    leg.term = Termination::Collapsed {
                        t_hit: t,
                        wall_index: wall,
                        detection: CollapseDetection::TimeResolution,
                    };
                    break;
                }
                return Err(LegError::Underflow { t, y });
            }
            Err(StepFailure::Budget { steps, t }) => return Err(LegError::Budget { steps, t }),
        }
    }
    leg.accepted = stepper.steps();
    leg.rejected = stepper.rejected();
    Ok(leg)
}

fn run_leg_with_retry<T: Scalar>(spec: &FlowSpec<T>, target: T) -> Result<(Leg<T>, T)> {
    let first = run_leg(spec, target, spec.rtol);
    let (res, rtol) = match first {
        Err(LegError::Underflow { .. }) => {
            let r = spec.rtol / T::lit(2.0);
            (run_leg(spec, target, r), r)
        }
        other => (other, spec.rtol),
    };
    match res {
        Ok(leg) => Ok((leg, rtol)),
        Err(LegError::Underflow { t, y }) => Err(Error::StepSizeUnderflow {
            t: t.to_f64_lossy(),
            state: y.iter().map(|v| v.to_f64_lossy()).collect(),
        }),
        Err(LegError::Budget { steps, t }) => Err(Error::TooManySteps {
            steps,
            t: t.to_f64_lossy(),
        }),
    }
}

fn constant_leg<T: Scalar>(x0: &[T], target: T, term: Termination<T>) -> Leg<T> {
    Leg {
        ts: vec![T::zero(), target],
        ys: vec![x0.to_vec(), x0.to_vec()],
        segs: vec![DenseSegment::constant(T::zero(), target, x0.to_vec())],
        term,
        accepted: 0,
        rejected: 0,
    }
}

/// Integrates the flow described by `spec`.
pub fn integrate<T: Scalar>(spec: &FlowSpec<T>) -> Result<FlowTrajectory<T>> {
    spec.validate()?;
    let rs = &spec.root_system;
    let stationary =
        spec.kind == FlowKind::Spherical && hs_norm(rs, &spec.x0) < T::tol(CONVERGENCE_TOL);
    let mut rtol_used = spec.rtol;

    let past = if spec.t_start < T::zero() {
        if stationary {
            Some(constant_leg(
                &spec.x0,
                spec.t_start,
                Termination::ConvergedToFixedPoint {
                    t: T::zero(),
                    z: spec.x0.clone(),
                },
            ))
        } else {
            let (mut leg, r) = run_leg_with_retry(spec, spec.t_start)?;
            rtol_used = rtol_used.min(r);
            if let Termination::ConvergedToFixedPoint { t, z } = &leg.term {
                if *t > spec.t_start {
                    leg.segs
                        .push(DenseSegment::constant(*t, spec.t_start, z.clone()));
                    leg.ts.push(spec.t_start);
                    leg.ys.push(z.clone());
                }
            }
            Some(leg)
        }
    } else {
        None
    };
    let future = if spec.t_end > T::zero() {
        if stationary {
            Some(constant_leg(&spec.x0, spec.t_end, Termination::ReachedEnd))
        } else {
            let (leg, r) = run_leg_with_retry(spec, spec.t_end)?;
            rtol_used = rtol_used.min(r);
            Some(leg)
        }
    } else {
        None
    };

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut segs = Vec::new();
    let mut accepted = 0;
    let mut rejected = 0;
    let past_term = match past {
        Some(leg) => {
            times.extend(leg.ts.iter().rev().copied());
            states.extend(leg.ys.into_iter().rev());
            segs.extend(leg.segs.into_iter().rev());
            accepted += leg.accepted;
            rejected += leg.rejected;
            leg.term
        }
        None => {
            times.push(T::zero());
            states.push(spec.x0.clone());
            Termination::ReachedEnd
        }
    };
    let future_term = match future {
        Some(leg) => {
            times.extend(leg.ts.iter().skip(1).copied());
            states.extend(leg.ys.into_iter().skip(1));
            segs.extend(leg.segs);
            accepted += leg.accepted;
            rejected += leg.rejected;
            leg.term
        }
        None => Termination::ReachedEnd,
    };
    let points = states
        .into_iter()
        .map(|y| rs.chamber_point(y))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowTrajectory {
        kind: spec.kind,
        root_system: rs.clone(),
        times,
        points,
        interp: Interpolant::Dense(segs),
        past: past_term,
        future: future_term,
        stats: FlowStats {
            accepted_steps: accepted,
            rejected_steps: rejected,
            rtol_used,
        },
    })
}

/// Maps a spherical time `s` to the Euclidean time `t` with
/// `s = -ln(1 - 2 n t) / (2n)`.
pub fn euclidean_time<T: Scalar>(n: T, s: T) -> T {
    let two_n = T::lit(2.0) * n;
    -(-two_n * s).exp_m1() / two_n
}

/// Rebuilds the Euclidean flow as `x(t) = sqrt(1 - 2nt) y(-ln(1 - 2nt) / 2n)`.
/// With `times = None` the spherical grid is mapped point by point;
/// otherwise `y` is interpolated at the requested Euclidean times.
pub fn euclidean_from_spherical<T: Scalar>(
    y: &FlowTrajectory<T>,
    times: Option<&[T]>,
) -> Result<FlowTrajectory<T>> {
    if y.kind != FlowKind::Spherical {
        return Err(Error::param("trajectory", "expected a spherical flow"));
    }
    let rs = &y.root_system;
    let n = rs.n();
    let two = T::lit(2.0);
    let (ts, states): (Vec<T>, Vec<Vec<T>>) = match times {
        None => y
            .times
            .iter()
            .zip(&y.points)
            .map(|(&s, p)| {
                let t = euclidean_time(n, s);
                let rho = T::one() - two * n * t;
                (t, linalg::scale(p.coords(), rho.sqrt()))
            })
            .unzip(),
        Some(req) => {
            let mut out_t = Vec::with_capacity(req.len());
            let mut out_x = Vec::with_capacity(req.len());
            for &t in req {
                let rho = T::one() - two * n * t;
                if !(rho > T::zero()) {
                    return Err(Error::OutOfDomain {
                        t: t.to_f64_lossy(),
                        collapse: Some((two * n).recip().to_f64_lossy()),
                    });
                }
                let s = -rho.ln() / (two * n);
                let ys = if s == T::zero() {
                    y.sample(T::zero())?
                } else {
                    y.sample(s)?
                };
                out_t.push(t);
                out_x.push(linalg::scale(&ys, rho.sqrt()));
            }
            (out_t, out_x)
        }
    };
    let map_term = |term: &Termination<T>| match term {
        Termination::ReachedEnd => Termination::ReachedEnd,
        Termination::Collapsed {
            t_hit,
            wall_index,
            detection,
        } => Termination::Collapsed {
            t_hit: euclidean_time(n, *t_hit),
            wall_index: *wall_index,
            detection: *detection,
        },
        Termination::ConvergedToFixedPoint { t, z } => Termination::ConvergedToFixedPoint {
            t: euclidean_time(n, *t),
            z: z.clone(),
        },
    };
    let points = states
        .into_iter()
        .map(|x| rs.chamber_point(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowTrajectory {
        kind: FlowKind::Euclidean,
        root_system: rs.clone(),
        times: ts,
        points,
        interp: Interpolant::Reparametrized(Box::new(y.clone())),
        past: map_term(&y.past),
        future: map_term(&y.future),
        stats: y.stats,
    })
}

/// Collapse time of the forward flow from `spec.x0`, searched up to
/// `spec.t_end`. A Euclidean start on the ray of the minimal point shrinks
/// homothetically and collapses at `|x0|^2 / 2n`.
pub fn collapse_time<T: Scalar>(spec: &FlowSpec<T>) -> Result<T> {
    let mut fwd = spec.clone();
    fwd.t_start = T::zero();
    if !(fwd.t_end > T::zero()) {
        return Err(Error::param(
            "t_end",
            "must be positive to search for a collapse",
        ));
    }
    fwd.validate()?;
    let r2 = linalg::norm_sq(&spec.x0);
    let on_ray = hs_norm(
        &spec.root_system,
        &linalg::scale(&spec.x0, r2.sqrt().recip()),
    ) < T::tol(CONVERGENCE_TOL);
    match spec.kind {
        FlowKind::Spherical if on_ray => return Err(Error::Stationary),
        FlowKind::Euclidean if on_ray => {
            let t = r2 / (T::lit(2.0) * spec.root_system.n());
            return if t <= fwd.t_end {
                Ok(t)
            } else {
                Err(Error::NoCollapse {
                    t_end: fwd.t_end.to_f64_lossy(),
                })
            };
        }
        _ => {}
    }
    let traj = integrate(&fwd)?;
    traj.future.collapse_time().ok_or(Error::NoCollapse {
        t_end: fwd.t_end.to_f64_lossy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimalMethod {
    Newton,
    BackwardFlow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalPoint<T> {
    pub z: ChamberPoint<T>,
    /// `|H^S(z)|`.
    pub residual: T,
    pub method: MinimalMethod,
    pub iterations: usize,
}

/// The unit chamber point with vanishing spherical mean curvature.
pub fn find_minimal_point<T: Scalar>(rs: &RootSystemData<T>) -> Result<MinimalPoint<T>> {
    let seed = rs.interior_direction()?;
    let n = rs.n();
    let spec = FlowSpec::new(
        FlowKind::Spherical,
        rs.clone(),
        seed.clone(),
        -n.recip(),
        T::zero(),
    );
    let refined = integrate(&spec)
        .map(|traj| traj.points()[0].coords().to_vec())
        .unwrap_or(seed);
    find_minimal_point_from(rs, &refined)
}

/// As [`find_minimal_point`] but starting Newton from `seed`, any chamber
/// point.
pub fn find_minimal_point_from<T: Scalar>(
    rs: &RootSystemData<T>,
    seed: &[T],
) -> Result<MinimalPoint<T>> {
    let x0 = linalg::normalized(seed).ok_or_else(|| Error::param("seed", "zero vector"))?;
    rs.chamber_point(x0.clone())?;
    let tol = T::tol(CONVERGENCE_TOL);
    let mut best = T::infinity();
    if let Some((z, iters)) = newton(rs, &x0) {
        let z = linalg::normalized(&z).expect("chamber point is nonzero");
        let res = hs_norm(rs, &z);
        if res <= tol {
            return Ok(MinimalPoint {
                z: rs.chamber_point(z)?,
                residual: res,
                method: MinimalMethod::Newton,
                iterations: iters,
            });
        }
        best = best.min(res);
    }
    let n = rs.n();
    let spec = FlowSpec::new(
        FlowKind::Spherical,
        rs.clone(),
        x0,
        -T::lit(500.0) / n,
        T::zero(),
    );
    let traj = integrate(&spec)?;
    if let Termination::ConvergedToFixedPoint { z, .. } = traj.past() {
        let res = hs_norm(rs, z);
        if res <= tol {
            return Ok(MinimalPoint {
                z: rs.chamber_point(z.clone())?,
                residual: res,
                method: MinimalMethod::BackwardFlow,
                iterations: traj.stats().accepted_steps,
            });
        }
        best = best.min(res);
    }
    best = best.min(hs_norm(rs, traj.points()[0].coords()));
    Err(Error::NoConvergence {
        residual: best.to_f64_lossy(),
    })
}

/// Maximizes `sum m_i ln <x, alpha_i> - n |x|^2 / 2` over the chamber with a
/// damped Newton iteration. Its critical point is the minimal point, which
/// automatically has unit length.
fn newton<T: Scalar>(rs: &RootSystemData<T>, x0: &[T]) -> Option<(Vec<T>, usize)> {
    let k = rs.rank();
    let n = rs.n();
    let objective = |x: &[T]| -> Option<T> {
        let p = rs.pairings(x).ok()?;
        if p.iter().any(|&v| v <= T::zero()) {
            return None;
        }
        let logs = linalg::sum_compensated(
            p.iter()
                .zip(rs.multiplicities())
                .map(|(&v, &m)| T::lit(m as f64) * v.ln()),
        );
        Some(logs - n * linalg::norm_sq(x) / T::lit(2.0))
    };
    let mut x = x0.to_vec();
    let mut phi = objective(&x)?;
    for it in 0..100 {
        let p = rs.pairings(&x).ok()?;
        let mut grad = vec![linalg::CompensatedSum::<T>::new(); k];
        let mut jac = vec![vec![T::zero(); k]; k];
        for ((alpha, &m), &pi) in rs.roots().iter().zip(rs.multiplicities()).zip(&p) {
            let mf = T::lit(m as f64);
            for a in 0..k {
                grad[a].add(mf * alpha[a] / pi);
                for b in 0..k {
                    jac[a][b] -= mf * alpha[a] * alpha[b] / (pi * pi);
                }
            }
        }
        let g: Vec<T> = grad
            .iter()
            .zip(&x)
            .map(|(s, &xi)| s.value() - n * xi)
            .collect();
        let gnorm = linalg::norm(&g);
        if gnorm <= T::epsilon() * n * T::lit(4.0) {
            return Some((x, it));
        }
        for (a, row) in jac.iter_mut().enumerate() {
            row[a] -= n;
        }
        let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
        let dx = linalg::solve(&jac, &neg_g)?;
        let slope = linalg::dot(&g, &dx);
        let mut lambda = T::one();
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + lambda * d).collect();
            if let Some(v) = objective(&cand) {
                if v >= phi + T::lit(1e-4) * lambda * slope
                    || lambda * linalg::norm(&dx) < T::epsilon()
                {
                    moved = cand != x;
                    x = cand;
                    phi = v;
                    break;
                }
            }
            lambda /= T::lit(2.0);
        }
        if !moved {
            return Some((x, it));
        }
    }
    Some((x, 100))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAudit<T> {
    pub kind: FlowKind,
    pub holds: bool,
    /// Euclidean: smallest finite-difference slope of `D`. Spherical: largest
    /// `f(a) e^{-2n(a - t_ref)} / f(t_ref)`.
    pub statistic: T,
    /// Euclidean: `-1e-9 max D`. Spherical: `1 + 1e-6`.
    pub threshold: T,
    pub max_distance_sq: T,
    /// Grid time attaining the statistic.
    pub worst_t: T,
    pub grid: (T, T, usize),
}

/// Audits the distance between two flows of the same family: for the
/// Euclidean flow `D(t) = |x(t) - x~(t)|^2` is non-decreasing, and for the
/// spherical flow `f(a) <= f(0) e^{2na}` for `a <= 0`.
pub fn pair_distance_audit<T: Scalar>(
    a: &FlowTrajectory<T>,
    b: &FlowTrajectory<T>,
) -> Result<PairAudit<T>> {
    if a.kind != b.kind {
        return Err(Error::param("trajectories", "flows of different kinds"));
    }
    if a.root_system != b.root_system {
        return Err(Error::param(
            "trajectories",
            "flows of different root systems",
        ));
    }
    let n = a.root_system.n();
    match a.kind {
        FlowKind::Euclidean => {
            let lo = a.t_first().max(b.t_first());
            let hi = a.t_last().min(b.t_last());
            if !(lo < hi) {
                return Err(Error::NoOverlap);
            }
            let m = 200;
            let mut grid: Vec<T> = (0..=m)
                .map(|i| lo + (hi - lo) * T::count(i) / T::count(m))
                .collect();
            grid[m] = hi;
            let d = grid
                .iter()
                .map(|&t| Ok(linalg::norm_sq(&linalg::sub(&a.sample(t)?, &b.sample(t)?))))
                .collect::<Result<Vec<T>>>()?;
            let max_d = d.iter().fold(T::zero(), |acc, &v| acc.max(v));
            let mut worst = T::infinity();
            let mut worst_t = lo;
            for i in 0..m {
                let slope = (d[i + 1] - d[i]) / (grid[i + 1] - grid[i]);
                if slope < worst {
                    worst = slope;
                    worst_t = grid[i];
                }
            }
            let threshold = -T::lit(1e-9) * max_d;
            Ok(PairAudit {
                kind: FlowKind::Euclidean,
                holds: worst >= threshold,
                statistic: worst,
                threshold,
                max_distance_sq: max_d,
                worst_t,
                grid: (lo, hi, m + 1),
            })
        }
        FlowKind::Spherical => {
            let lo = a
                .integrated_from()
                .max(b.integrated_from())
                .max(-T::lit(3.0));
            let hi = a.t_last().min(b.t_last()).min(T::zero());
            if !(lo < hi) {
                return Err(Error::NoOverlap);
            }
            let f = |t: T| -> Result<T> {
                Ok(linalg::norm_sq(&linalg::sub(&a.sample(t)?, &b.sample(t)?)))
            };
            let f_ref = f(hi)?;
            let m = 100;
            let mut worst = T::zero();
            let mut worst_t = hi;
            let mut max_d = f_ref;
            for i in 0..m {
                let t = (lo + (hi - lo) * T::count(i) / T::count(m - 1)).min(hi);
                let v = f(t)?;
                max_d = max_d.max(v);
                let ratio = if f_ref > T::zero() {
                    v * (-T::lit(2.0) * n * (t - hi)).exp() / f_ref
                } else if v > T::zero() {
                    T::infinity()
                } else {
                    T::zero()
                };
                if ratio > worst {
                    worst = ratio;
                    worst_t = t;
                }
            }
            let threshold = T::one() + T::lit(1e-6);
            Ok(PairAudit {
                kind: FlowKind::Spherical,
                holds: worst <= threshold,
                statistic: worst,
                threshold,
                max_distance_sq: max_d,
                worst_t,
                grid: (lo, hi, m),
            })
        }
    }
}
