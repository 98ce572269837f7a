//! Named example configurations with documented values.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

use serde::Serialize;

use crate::curvature;
use crate::error::{Error, Result};
use crate::flow::{self, FlowKind, FlowSpec};
use crate::rank2::{self, DihedralFamily, Rank2Config};
use crate::root_system::RootSystemData;
use crate::sampling::Sampler;

/// Tolerance for facts that follow from exact formulas.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for facts re-derived by integration.
pub const ODE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactSource {
    /// Stated in the literature.
    Published,
    /// Obtained by evaluating a closed form.
    Derived,
    /// Holds by construction.
    Definitional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `n = g (m1 + m2) / 2`.
    Dimension,
    Delta,
    ThetaMin,
    /// `|A^S|^2` at the minimal leaf.
    MinimalShapeNorm,
    /// Collapse time of the spherical flow from the reference `theta_0`.
    CollapseTime,
    /// `sup |phi|` over the chamber, for `g = 1`.
    PhiSup,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Dimension => "n",
            Quantity::Delta => "delta",
            Quantity::ThetaMin => "theta_min",
            Quantity::MinimalShapeNorm => "minimal_shape_norm",
            Quantity::CollapseTime => "collapse_time",
            Quantity::PhiSup => "phi_sup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DocumentedFact {
    pub quantity: Quantity,
    pub value: f64,
    pub source: FactSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CatalogConfig {
    Rank2(Rank2Config<f64>),
    General(RootSystemData<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub config: CatalogConfig,
    pub documented_facts: Vec<DocumentedFact>,
}

/// A documented value next to its re-derivation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactCheck {
    pub quantity: Quantity,
    pub documented: f64,
    pub rederived: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CatalogEntry {
    pub fn rank2(&self) -> Option<&Rank2Config<f64>> {
        match &self.config {
            CatalogConfig::Rank2(c) => Some(c),
            CatalogConfig::General(_) => None,
        }
    }

    pub fn family(&self) -> Option<&DihedralFamily> {
        self.rank2().map(Rank2Config::family)
    }

    pub fn root_system(&self) -> RootSystemData<f64> {
        match &self.config {
            CatalogConfig::Rank2(c) => c.family().root_system(),
            CatalogConfig::General(rs) => rs.clone(),
        }
    }

    pub fn fact(&self, q: Quantity) -> Option<f64> {
        self.documented_facts
            .iter()
            .find(|f| f.quantity == q)
            .map(|f| f.value)
    }

    /// `g`, multiplicities and `theta_0` as a short parameter string.
    pub fn parameters(&self) -> String {
        match &self.config {
            CatalogConfig::Rank2(c) => {
                let f = c.family();
                format!(
                    "g={} m1={} m2={} n={} theta0={:.16e}",
                    f.g(),
                    f.m1(),
                    f.m2(),
                    f.n(),
                    c.theta0()
                )
            }
            CatalogConfig::General(rs) => format!(
                "rank={} roots={} n={}",
                rs.rank(),
                rs.num_roots(),
                rs.dimension()
            ),
        }
    }

    /// Re-derives every documented fact through the root sums, the minimal
    /// point search and the integrator.
    pub fn verify(&self) -> Result<Vec<FactCheck>> {
        let rs = self.root_system();
        let mut out = Vec::with_capacity(self.documented_facts.len());
        for f in &self.documented_facts {
            let (rederived, tolerance) = match f.quantity {
                Quantity::Dimension => (rs.dimension() as f64, 0.0),
                Quantity::Delta => {
                    let m = rs.multiplicities();
                    let (odd, even): (Vec<_>, Vec<_>) =
                        m.iter().enumerate().partition(|(i, _)| i % 2 == 0);
                    let m1 = odd.first().map(|(_, &v)| v).unwrap_or(0) as f64;
                    let m2 = even.first().map(|(_, &v)| v).unwrap_or(m1 as u32) as f64;
                    ((m2 - m1) / (m2 + m1), EXACT_TOL)
                }
                Quantity::ThetaMin => {
                    let z = flow::find_minimal_point(&rs)?.z;
                    (rs.polar(z.coords())?.1, EXACT_TOL)
                }
                Quantity::MinimalShapeNorm => {
                    let z = flow::find_minimal_point(&rs)?.z;
                    (
                        curvature::shape_norm_sq_spherical(&rs, z.coords())?,
                        EXACT_TOL,
                    )
                }
                Quantity::CollapseTime => {
                    let cfg = self
                        .rank2()
                        .ok_or_else(|| Error::param("config", "collapse time needs rank-2 data"))?;
                    let spec = FlowSpec::new(
                        FlowKind::Spherical,
                        rs.clone(),
                        cfg.initial_point(),
                        0.0,
                        2.0 * f.value + 1.0,
                    );
                    (flow::collapse_time(&spec)?, ODE_TOL)
                }
                Quantity::PhiSup => {
                    let mut s = Sampler::grid();
                    let mut sup = 0.0f64;
                    for x in s.chamber_points(&rs, 200)? {
                        sup = sup.max(curvature::traceless_norm_sq(&rs, &x)?.abs());
                    }
                    (sup, EXACT_TOL)
                }
            };
            out.push(FactCheck {
                quantity: f.quantity,
                documented: f.value,
                rederived,
                tolerance,
                passed: (rederived - f.value).abs() <= tolerance * f.value.abs().max(1.0),
            });
        }
        Ok(out)
    }
}

fn family_facts(fam: &DihedralFamily) -> Vec<DocumentedFact> {
    let (g, n) = (fam.g() as f64, fam.n() as f64);
    vec![
        DocumentedFact {
            quantity: Quantity::Dimension,
            value: n,
            source: FactSource::Definitional,
        },
        DocumentedFact {
            quantity: Quantity::Delta,
            value: fam.delta(),
            source: FactSource::Definitional,
        },
        DocumentedFact {
            quantity: Quantity::ThetaMin,
            value: fam.theta_min(),
            source: FactSource::Definitional,
        },
        DocumentedFact {
            quantity: Quantity::MinimalShapeNorm,
            value: n * (g - 1.0),
            source: FactSource::Published,
        },
    ]
}

fn entry(name: String, cfg: Rank2Config<f64>, mut facts: Vec<DocumentedFact>) -> CatalogEntry {
    if let Some(c) = rank2::collapse_times(&cfg) {
        facts.push(DocumentedFact {
            quantity: Quantity::CollapseTime,
            value: c.time,
            source: FactSource::Derived,
        });
    }
    CatalogEntry {
        name,
        config: CatalogConfig::Rank2(cfg),
        documented_facts: facts,
    }
}

/// Family entry with reference leaf `theta_0 = theta_min / 2`.
pub fn dihedral_entry(g: u32, m1: u32, m2: u32) -> Result<CatalogEntry> {
    let fam = DihedralFamily::new(g, m1, m2)?;
    let cfg = Rank2Config::new(fam, fam.theta_min::<f64>() / 2.0)?;
    let mut facts = family_facts(&fam);
    if g == 1 {
        facts.push(DocumentedFact {
            quantity: Quantity::PhiSup,
            value: 0.0,
            source: FactSource::Published,
        });
    }
    Ok(entry(format!("dihedral-g{g}-m{m1}-{m2}"), cfg, facts))
}

/// The `g = 2` family of products of spheres `S^k x S^{n-k}` in `S^{n+1}`,
/// with multiplicities ordered so that `m1 <= m2`. Its minimal leaf is the
/// minimal Clifford torus; the reference leaf is `theta_min / 2`.
pub fn clifford_torus(n: u32, k: u32) -> Result<CatalogEntry> {
    if n < 2 {
        return Err(Error::param("n", "needs n >= 2"));
    }
    if k < 1 || k >= n {
        return Err(Error::param("k", format!("needs 1 <= k < n, got k = {k}")));
    }
    let (m1, m2) = (k.min(n - k), k.max(n - k));
    let fam = DihedralFamily::new(2, m1, m2)?;
    let cfg = Rank2Config::new(fam, fam.theta_min::<f64>() / 2.0)?;
    Ok(entry(
        format!("clifford-torus-n{n}-k{k}"),
        cfg,
        family_facts(&fam),
    ))
}

/// The isoparametric family through the flag manifold of `R^3` in `S^4`,
/// reference leaf `theta_0 = pi / 12`.
pub fn flag_so3() -> CatalogEntry {
    let fam = DihedralFamily::new(3, 1, 1).expect("valid family");
    let cfg = Rank2Config::new(fam, FRAC_PI_6 / 2.0).expect("inside sector");
    let facts = vec![
        DocumentedFact {
            quantity: Quantity::Dimension,
            value: 3.0,
            source: FactSource::Definitional,
        },
        DocumentedFact {
            quantity: Quantity::ThetaMin,
            value: FRAC_PI_6,
            source: FactSource::Published,
        },
        DocumentedFact {
            quantity: Quantity::MinimalShapeNorm,
            value: 6.0,
            source: FactSource::Published,
        },
    ];
    entry("flag-so3".into(), cfg, facts)
}

/// `cos theta diag(1, 1, -2)/sqrt 6 + sin theta diag(1, -1, 0)/sqrt 2` for
/// `theta` in `[0, pi/3]`.
pub fn flag_matrix(theta: f64) -> Result<[[f64; 3]; 3]> {
    if !(0.0..=FRAC_PI_3).contains(&theta) {
        return Err(Error::OutsideSector {
            theta,
            upper: FRAC_PI_3,
        });
    }
    let (s, c) = theta.sin_cos();
    let a = c / 6f64.sqrt();
    let b = s / 2f64.sqrt();
    let mut m = [[0.0; 3]; 3];
    m[0][0] = a + b;
    m[1][1] = a - b;
    m[2][2] = -2.0 * a;
    Ok(m)
}

/// Representative families for `g = 1, 2, 3, 4, 6`.
pub fn standard_suite() -> Vec<CatalogEntry> {
    [
        (1, 3, 3),
        (2, 1, 1),
        (2, 1, 3),
        (2, 2, 2),
        (3, 1, 1),
        (4, 1, 1),
        (4, 1, 3),
        (4, 2, 2),
        (6, 1, 1),
        (6, 2, 2),
    ]
    .into_iter()
    .map(|(g, m1, m2)| dihedral_entry(g, m1, m2).expect("suite families are valid"))
    .collect()
}

/// Every named entry: the suite, the flag manifold and a few tori.
pub fn all_entries() -> Vec<CatalogEntry> {
    let mut out = standard_suite();
    out.push(flag_so3());
    for (n, k) in [(2, 1), (3, 1), (4, 1), (4, 2)] {
        out.push(clifford_torus(n, k).expect("valid torus"));
    }
    out
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    all_entries().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn suite_shape() {
        let suite = standard_suite();
        assert_eq!(suite.len(), 10);
        assert!(suite
            .iter()
            .all(|e| e.root_system().validate().passes() || e.family().unwrap().g() == 1));
        let g6 = suite.iter().find(|e| e.name == "dihedral-g6-m2-2").unwrap();
        assert_eq!(g6.fact(Quantity::Dimension), Some(12.0));
        let g1 = &suite[0];
        assert_eq!(g1.fact(Quantity::PhiSup), Some(0.0));
        for e in &suite {
            let f = e.family().unwrap();
            let tm: f64 = f.theta_min();
            assert!(((f.g() as f64 * tm).cos() + f.delta::<f64>()).abs() < 1e-14);
        }
    }

    #[test]
    fn tori() {
        let t = clifford_torus(2, 1).unwrap();
        assert!((t.fact(Quantity::ThetaMin).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(t.fact(Quantity::MinimalShapeNorm), Some(2.0));
        let t = clifford_torus(4, 1).unwrap();
        assert_eq!(t.fact(Quantity::Delta), Some(0.5));
        assert!((t.fact(Quantity::ThetaMin).unwrap() - PI / 3.0).abs() < 1e-15);
        let t = clifford_torus(6, 3).unwrap();
        assert_eq!(t.fact(Quantity::Delta), Some(0.0));
        assert!(clifford_torus(3, 3).is_err());
        assert!(clifford_torus(1, 1).is_err());
    }

    #[test]
    fn flag_entry() {
        let e = flag_so3();
        let t = e.fact(Quantity::CollapseTime).unwrap();
        assert!((t - 2f64.sqrt().ln() / 9.0).abs() < 1e-15);
        for c in e.verify().unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn flag_matrix_values() {
        let s6 = 6f64.sqrt();
        let m = flag_matrix(0.0).unwrap();
        assert_eq!(m[0][0], 1.0 / s6);
        assert_eq!(m[2][2], -2.0 / s6);
        let m = flag_matrix(FRAC_PI_6).unwrap();
        assert!((m[0][0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(m[1][1].abs() < 1e-15);
        let m = flag_matrix(FRAC_PI_3).unwrap();
        assert!((m[0][0] - 2.0 / s6).abs() < 1e-15);
        assert!((m[1][1] + 1.0 / s6).abs() < 1e-15);
        assert!(flag_matrix(1.1).is_err());
        assert!(flag_matrix(-0.1).is_err());
    }

    #[test]
    fn suite_facts_rederive() {
        for e in all_entries() {
            for c in e.verify().unwrap() {
                assert!(c.passed, "{} {c:?}", e.name);
            }
        }
    }
}
