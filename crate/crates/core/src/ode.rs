//! Dormand–Prince 5(4) stepper with a continuous extension.
//!
//! The stepper hands back one accepted step at a time so the caller can
//! post-process the state (projection, event checks) between steps. The
//! vector field is autonomous and may refuse a state by returning `false`,
//! which rejects the step and retries with a quarter of the step size.

use serde::Serialize;

use crate::scalar::Scalar;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Upper bound on `|h|`; `None` means the full span.
    pub h_max: Option<T>,
    /// Accepted plus rejected steps before giving up.
    pub max_steps: usize,
}

impl<T: Scalar> Default for StepOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::tol(1e-10),
            atol: T::tol(1e-12),
            h_max: None,
            max_steps: 200_000,
        }
    }
}

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment<T> {
    t0: T,
    h: T,
    rcont: [Vec<T>; 5],
}

impl<T: Scalar> DenseSegment<T> {
    pub fn t_start(&self) -> T {
        self.t0
    }

    pub fn t_end(&self) -> T {
        self.t0 + self.h
    }

    pub fn contains(&self, t: T) -> bool {
        let (a, b) = ordered(self.t0, self.t0 + self.h);
        t >= a && t <= b
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
            .collect()
    }

    /// A constant segment, used to pad trajectories that stopped early.
    pub fn constant(t0: T, t1: T, y: Vec<T>) -> Self {
        let z = vec![T::zero(); y.len()];
        Self {
            t0,
            h: t1 - t0,
            rcont: [y, z.clone(), z.clone(), z.clone(), z],
        }
    }
}

fn ordered<T: Scalar>(a: T, b: T) -> (T, T) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Why a step could not be taken.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure<T> {
    /// `|h|` fell below a few ulps of `t`.
    Underflow { t: T, h: T },
    /// The step budget ran out.
    Budget { steps: usize, t: T },
}

/// Result of one accepted step.
#[derive(Debug, Clone)]
pub struct Accepted<T> {
    pub t: T,
    pub y: Vec<T>,
    pub segment: DenseSegment<T>,
}

pub struct Dopri5<T, F> {
    f: F,
    opts: StepOptions<T>,
    t: T,
    t_end: T,
    y: Vec<T>,
    k1: Option<Vec<T>>,
    h: T,
    steps: usize,
    rejected: usize,
}

impl<T: Scalar, F: FnMut(&[T], &mut [T]) -> bool> Dopri5<T, F> {
    pub fn new(f: F, t0: T, y0: Vec<T>, t_end: T, opts: StepOptions<T>) -> Self {
        Self {
            f,
            opts,
            t: t0,
            t_end,
            y: y0,
            k1: None,
            h: T::zero(),
            steps: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn finished(&self) -> bool {
        self.t == self.t_end
    }

    /// Replaces the current state, e.g. after a projection.
    pub fn set_state(&mut self, y: Vec<T>) {
        self.y = y;
        self.k1 = None;
    }

    fn eval(&mut self, y: &[T]) -> Option<Vec<T>> {
        let mut out = vec![T::zero(); y.len()];
        if (self.f)(y, &mut out) && out.iter().all(|v| v.is_finite()) {
            Some(out)
        } else {
            None
        }
    }

    fn err_scale(&self, a: &[T], b: &[T]) -> Vec<T> {
        a.iter()
            .zip(b)
            .map(|(&u, &v)| self.opts.atol + self.opts.rtol * u.abs().max(v.abs()))
            .collect()
    }

    fn rms(v: &[T], sc: &[T]) -> T {
        let s: T = v.iter().zip(sc).map(|(&x, &s)| (x / s) * (x / s)).sum();
        (s / T::count(v.len().max(1))).sqrt()
    }

    /// Hairer's starting step heuristic for a fifth-order method.
    fn initial_step(&mut self, k1: &[T], dir: T, h_max: T) -> T {
        let sc = self.err_scale(&self.y, &self.y);
        let d0 = Self::rms(&self.y, &sc);
        let d1 = Self::rms(k1, &sc);
        let small = T::lit(1e-10);
        let mut h0 = if d0 < small || d1 < small {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        h0 = h0.min(h_max);
        let y1: Vec<T> = self
            .y
            .iter()
            .zip(k1)
            .map(|(&y, &k)| y + dir * h0 * k)
            .collect();
        let Some(k2) = self.eval(&y1) else {
            return h0 * T::lit(0.01);
        };
        let diff: Vec<T> = k2.iter().zip(k1).map(|(&a, &b)| a - b).collect();
        let d2 = Self::rms(&diff, &sc) / h0;
        let m = d1.max(d2);
        let h1 = if m <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / m).powf(T::lit(0.2))
        };
        (T::lit(100.0) * h0).min(h1).min(h_max)
    }

    /// Takes one accepted step towards `t_end`.
    pub fn step(&mut self) -> Result<Accepted<T>, StepFailure<T>> {
        let span = self.t_end - self.t;
        let dir = if span >= T::zero() {
            T::one()
        } else {
            -T::one()
        };
        let h_max = self.opts.h_max.unwrap_or(span.abs()).min(span.abs());
        let k1 = match self.k1.take() {
            Some(k) => k,
            None => match self.eval(&self.y.clone()) {
                Some(k) => k,
                None => {
                    return Err(StepFailure::Underflow {
                        t: self.t,
                        h: T::zero(),
                    })
                }
            },
        };
        if self.h == T::zero() {
            self.h = self.initial_step(&k1, dir, h_max);
        }
        let n = self.y.len();
        let c = T::lit;
        loop {
            if self.steps + self.rejected >= self.opts.max_steps {
                self.k1 = Some(k1);
                return Err(StepFailure::Budget {
                    steps: self.steps + self.rejected,
                    t: self.t,
                });
            }
            let mut habs = self.h.abs().min(h_max);
            let min_step = T::lit(4.0) * T::epsilon() * self.t.abs().max(T::min_positive_value());
            if habs < min_step {
                self.k1 = Some(k1);
                return Err(StepFailure::Underflow { t: self.t, h: habs });
            }
            if (span.abs() - habs) < min_step {
                habs = span.abs();
            }
            let h = dir * habs;
            let y = self.y.clone();
            let stage = |coef: &[(f64, &Vec<T>)]| -> Vec<T> {
                (0..n)
                    .map(|i| y[i] + h * coef.iter().map(|(a, k)| c(*a) * k[i]).sum::<T>())
                    .collect()
            };
            let Some(k2) = self.eval(&stage(&[(A21, &k1)])) else {
                self.reject_invalid();
                continue;
            };
            let Some(k3) = self.eval(&stage(&[(A31, &k1), (A32, &k2)])) else {
                self.reject_invalid();
                continue;
            };
            let Some(k4) = self.eval(&stage(&[(A41, &k1), (A42, &k2), (A43, &k3)])) else {
                self.reject_invalid();
                continue;
            };
            let Some(k5) = self.eval(&stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))
            else {
                self.reject_invalid();
                continue;
            };
            let Some(k6) = self.eval(&stage(&[
                (A61, &k1),
                (A62, &k2),
                (A63, &k3),
                (A64, &k4),
                (A65, &k5),
            ])) else {
                self.reject_invalid();
                continue;
            };
            let y_new = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let Some(k7) = self.eval(&y_new) else {
                self.reject_invalid();
                continue;
            };
            let err_vec: Vec<T> = (0..n)
                .map(|i| {
                    h * (c(E1) * k1[i]
                        + c(E3) * k3[i]
                        + c(E4) * k4[i]
                        + c(E5) * k5[i]
                        + c(E6) * k6[i]
                        + c(E7) * k7[i])
                })
                .collect();
            let sc = self.err_scale(&self.y, &y_new);
            let err = Self::rms(&err_vec, &sc);
            if err.is_finite() && err <= T::one() {
                let factor = if err == T::zero() {
                    c(5.0)
                } else {
                    (c(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0))
                };
                let rc2: Vec<T> = (0..n).map(|i| y_new[i] - self.y[i]).collect();
                let rc3: Vec<T> = (0..n).map(|i| h * k1[i] - rc2[i]).collect();
                let rc4: Vec<T> = (0..n).map(|i| rc2[i] - h * k7[i] - rc3[i]).collect();
                let rc5: Vec<T> = (0..n)
                    .map(|i| {
                        h * (c(D1) * k1[i]
                            + c(D3) * k3[i]
                            + c(D4) * k4[i]
                            + c(D5) * k5[i]
                            + c(D6) * k6[i]
                            + c(D7) * k7[i])
                    })
                    .collect();
                let segment = DenseSegment {
                    t0: self.t,
                    h,
                    rcont: [self.y.clone(), rc2, rc3, rc4, rc5],
                };
                self.t = if habs == span.abs() {
                    self.t_end
                } else {
                    self.t + h
                };
                self.y = y_new.clone();
                self.k1 = Some(k7);
                self.h = habs * factor;
                self.steps += 1;
                return Ok(Accepted {
                    t: self.t,
                    y: y_new,
                    segment,
                });
            }
            self.rejected += 1;
            let shrink = if err.is_finite() {
                (c(0.9) * err.powf(c(-0.2))).max(c(0.2))
            } else {
                c(0.2)
            };
            self.h = habs * shrink;
        }
    }

    fn reject_invalid(&mut self) {
        self.rejected += 1;
        self.h = self.h.abs() * T::lit(0.25);
    }
}
