//! Sample points for identity checks: random by default, a fixed
//! low-discrepancy grid when `ISOFLOW_SEEDLESS=1`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::linalg;
use crate::root_system::RootSystemData;
use crate::scalar::Scalar;

pub const SEEDLESS_ENV: &str = "ISOFLOW_SEEDLESS";

#[derive(Debug)]
pub enum Sampler {
    Random(Box<StdRng>),
    /// Kronecker sequence with the generalized golden ratio; `offset`
    /// advances between calls so repeated requests do not coincide.
    Grid {
        offset: usize,
    },
}

impl Sampler {
    /// Grid when `ISOFLOW_SEEDLESS=1`, otherwise seeded from entropy.
    pub fn from_env() -> Self {
        match std::env::var(SEEDLESS_ENV) {
            Ok(v) if v.trim() == "1" => Sampler::grid(),
            _ => Sampler::Random(Box::new(StdRng::from_entropy())),
        }
    }

    pub fn grid() -> Self {
        Sampler::Grid { offset: 0 }
    }

    pub fn seeded(seed: u64) -> Self {
        Sampler::Random(Box::new(StdRng::seed_from_u64(seed)))
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Sampler::Grid { .. })
    }

    /// `count` points of `[0, 1)^dim`.
    pub fn unit_cube(&mut self, dim: usize, count: usize) -> Vec<Vec<f64>> {
        match self {
            Sampler::Random(rng) => (0..count)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
                .collect(),
            Sampler::Grid { offset } => {
                let alpha = kronecker_alpha(dim);
                let start = *offset;
                *offset += count;
                (start..start + count)
                    .map(|i| {
                        alpha
                            .iter()
                            .map(|a| (0.5 + a * (i + 1) as f64).fract())
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// `count` pairs `(r, theta)` with `r` log-uniform in `[r_lo, r_hi]` and
    /// `theta` inside `(0, upper)`, kept `1%` away from the walls.
    pub fn polar(&mut self, upper: f64, r_lo: f64, r_hi: f64, count: usize) -> Vec<(f64, f64)> {
        self.unit_cube(2, count)
            .into_iter()
            .map(|u| {
                let r = (r_lo.ln() + u[0] * (r_hi / r_lo).ln()).exp();
                let th = upper * (0.01 + 0.98 * u[1]);
                (r, th)
            })
            .collect()
    }

    /// `count` chamber points of any rank with norms in `[0.5, 2]`.
    pub fn chamber_points<T: Scalar>(
        &mut self,
        rs: &RootSystemData<T>,
        count: usize,
    ) -> Result<Vec<Vec<T>>> {
        let k = rs.rank();
        let rays = rs.extreme_rays();
        let interior = rs.interior_direction()?;
        let mut out = Vec::with_capacity(count);
        let simplicial = rays.len() >= k && k >= 2;
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            let u = self
                .unit_cube(rays.len().max(k) + 2, 1)
                .pop()
                .expect("one sample");
            let mut x = if simplicial {
                let mut x = linalg::scale(&interior, T::lit(0.02));
                for (ray, &w) in rays.iter().zip(&u) {
                    for (xi, &ri) in x.iter_mut().zip(ray) {
                        *xi += T::lit(0.02 + w) * ri;
                    }
                }
                x
            } else {
                let mut x: Vec<T> = u[..k].iter().map(|&v| T::lit(2.0 * v - 1.0)).collect();
                for (xi, &d) in x.iter_mut().zip(&interior) {
                    *xi += T::lit(0.05) * d;
                }
                x
            };
            let Some(unit) = linalg::normalized(&x) else {
                continue;
            };
            let r = (0.5f64.ln() + u[u.len() - 1] * 4f64.ln()).exp();
            x = linalg::scale(&unit, T::lit(r));
            let (m, _) = rs.margin(&x)?;
            if m > T::tol(1e-6) * T::lit(r) {
                out.push(x);
            } else if attempts > 1000 * count.max(1) {
                break;
            }
        }
        Ok(out)
    }
}

/// `1 / phi_d^j` for the unique positive root `phi_d` of `x^{d+1} = x + 1`.
fn kronecker_alpha(dim: usize) -> Vec<f64> {
    let d = dim as f64;
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d + 1.0));
    }
    (1..=dim).map(|j| phi.powi(-(j as i32))).collect()
}
