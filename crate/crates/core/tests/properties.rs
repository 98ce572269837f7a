use std::f64::consts::PI;

use isoflow::curvature;
use isoflow::flow::{self, FlowKind};
use isoflow::invariants::{self, rel_residual};
use isoflow::linalg;
use isoflow::rank2;
use isoflow::{DihedralFamily, FlowSpec, Rank2Config, RootSystem, Sampler};
use proptest::prelude::*;

const FAMILIES: [(u32, u32, u32); 10] = [
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
];

fn family() -> impl Strategy<Value = DihedralFamily> {
    (0..FAMILIES.len()).prop_map(|i| {
        let (g, m1, m2) = FAMILIES[i];
        DihedralFamily::new(g, m1, m2).unwrap()
    })
}

/// Family, radius and an angle strictly inside the sector.
fn polar_point() -> impl Strategy<Value = (DihedralFamily, f64, f64)> {
    (family(), 0.1f64..10.0, 0.01f64..0.99).prop_map(|(f, r, u)| {
        let th = u * f.sector_upper::<f64>();
        (f, r, th)
    })
}

fn b3() -> RootSystem {
    let mut roots = Vec::new();
    for i in 0..3 {
        let mut e = vec![0.0; 3];
        e[i] = 1.0;
        roots.push(e);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v[j] = s;
            roots.push(v);
        }
    }
    let mut rs = RootSystem::new(roots, vec![1, 1, 1, 2, 2, 2, 2, 2, 2]).unwrap();
    let flip: Vec<Vec<f64>> = rs
        .roots()
        .iter()
        .map(|a| {
            let probe = [3.0, 2.0, 1.0];
            if linalg::dot(a, &probe) < 0.0 {
                a.iter().map(|v| -v).collect()
            } else {
                a.clone()
            }
        })
        .collect();
    rs = RootSystem::new(flip, rs.multiplicities().to_vec()).unwrap();
    rs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polar_round_trip((f, r, th) in polar_point()) {
        let rs = f.root_system::<f64>();
        let x = rs.from_polar(r, th).unwrap();
        let (r2, th2) = rs.polar(x.coords()).unwrap();
        prop_assert!((r2 - r).abs() <= 1e-14 * r);
        prop_assert!((th2 - th).abs() <= 1e-14);
    }

    #[test]
    fn chamber_is_a_cone(x in prop::array::uniform2(-5.0f64..5.0), s in 1e-3f64..1e3, i in 0..FAMILIES.len()) {
        let (g, m1, m2) = FAMILIES[i];
        let rs = RootSystem::dihedral(g, m1, m2).unwrap();
        let (inside, _) = rs.in_chamber(&x).unwrap();
        if inside {
            let xs = [x[0] * s, x[1] * s];
            prop_assert!(rs.in_chamber(&xs).unwrap().0);
        }
    }

    #[test]
    fn dimension_is_consistent(f in family()) {
        let rs = f.root_system::<f64>();
        prop_assert_eq!(rs.dimension(), f.n());
        prop_assert_eq!(rs.multiplicities().iter().sum::<u32>(), f.g() * (f.m1() + f.m2()) / 2);
    }

    #[test]
    fn homogeneity((f, r, th) in polar_point(), s in 0.1f64..10.0) {
        let rs = f.root_system::<f64>();
        let x = rs.from_polar(r, th).unwrap().into_coords();
        let xs = linalg::scale(&x, s);
        let h = curvature::mean_curvature_euclidean(&rs, &x).unwrap();
        let hs = curvature::mean_curvature_euclidean(&rs, &xs).unwrap();
        let scaled = linalg::scale(&h, 1.0 / s);
        prop_assert!(linalg::distance(&hs, &scaled) <= 1e-13 * linalg::norm(&scaled));
        let a = curvature::shape_norm_sq_euclidean(&rs, &x).unwrap();
        let a_s = curvature::shape_norm_sq_euclidean(&rs, &xs).unwrap();
        prop_assert!(rel_residual(a_s, a / (s * s), 0.0) <= 1e-13);
    }

    #[test]
    fn orthogonal_decomposition((f, r, th) in polar_point()) {
        let rs = f.root_system::<f64>();
        let x = rs.from_polar(r, th).unwrap().into_coords();
        let rep = curvature::curvature_report(&rs, &x).unwrap();
        let dot = linalg::dot(&rep.h_spherical, &x).abs();
        prop_assert!(dot <= 1e-10 * linalg::norm(&rep.h_euclidean) * linalg::norm(&x));
        let n = f.n() as f64;
        let r2 = r * r;
        prop_assert!(rel_residual(rep.h2_euclidean(), rep.h2_spherical() + n * n / r2, 0.0) <= 1e-10);
        let tang = invariants::shape_norm_sq_tangential(&rs, &x).unwrap();
        prop_assert!(rel_residual(rep.a2_spherical, tang, rep.a2_euclidean) <= 1e-10);
    }

    #[test]
    fn closed_forms_match_root_sums((f, r, th) in polar_point()) {
        let rs = f.root_system::<f64>();
        let x = rs.from_polar(r, th).unwrap().into_coords();
        let rep = curvature::curvature_report(&rs, &x).unwrap();
        let (he, hs) = rank2::mean_curvature_closed(&f, r, th).unwrap();
        let (ae, as_) = rank2::shape_norms_closed(&f, r, th).unwrap();
        let scale = linalg::norm(&rep.h_euclidean);
        prop_assert!(linalg::distance(&he, &rep.h_euclidean) <= 1e-12 * scale);
        prop_assert!(linalg::distance(&hs, &rep.h_spherical) <= 1e-12 * scale);
        prop_assert!(rel_residual(ae, rep.a2_euclidean, 0.0) <= 1e-12);
        prop_assert!(rel_residual(as_, rep.a2_spherical, rep.a2_euclidean) <= 1e-12);
        let lhs = rep.a2_spherical - f.g() as f64 / (2.0 * f.n() as f64) * rep.h2_spherical();
        let rhs = rank2::a_minus_h_rhs(&f, r, th).unwrap();
        prop_assert!(rel_residual(lhs, rhs, rep.a2_euclidean) <= 1e-12);
        let phi = rank2::phi_closed(&f, th).unwrap() / (r * r);
        prop_assert!(rel_residual(phi, rep.phi, rep.a2_euclidean) <= 1e-12);
    }

    #[test]
    fn theta_velocity_sign((f, _r, th) in polar_point()) {
        let tm = f.theta_min::<f64>();
        prop_assume!((th - tm).abs() > 1e-9);
        let v = rank2::theta_velocity(&f, th).unwrap();
        if th < tm {
            prop_assert!(v < 0.0);
        } else {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn exponential_law_is_exact((f, _r, th) in polar_point(), t in -3.0f64..0.0) {
        let cfg = Rank2Config::new(f, th).unwrap();
        prop_assume!(!cfg.is_minimal());
        let g = f.g() as f64;
        let theta = rank2::spherical_theta(&cfg, t).unwrap();
        let lhs = (g * theta).cos() + cfg.delta();
        let rhs = cfg.excess(t);
        prop_assert!((lhs - rhs).abs() <= 8.0 * f64::EPSILON);
    }

    #[test]
    fn euclidean_closed_form_is_reparametrized_spherical((f, _r, th) in polar_point(), u in 0.0f64..0.9) {
        let cfg = Rank2Config::new(f, th).unwrap();
        let n = f.n() as f64;
        let t_end = rank2::euclidean_collapse_time(&cfg);
        for t in [-2.0 / n, -0.1 / n, u * t_end] {
            let (r, theta) = rank2::euclidean_solution(&cfg, t).unwrap();
            let s = -(1.0 - 2.0 * n * t).ln() / (2.0 * n);
            let ts = rank2::spherical_theta(&cfg, s).unwrap();
            prop_assert!((r - (1.0 - 2.0 * n * t).sqrt()).abs() <= 1e-12 * r);
            prop_assert!((theta - ts).abs() <= 1e-12);
        }
    }

    #[test]
    fn trig_identities(g in 1u32..=12, beta in -PI / 2.0..PI / 2.0) {
        prop_assume!((g as f64 * beta).sin().abs() >= 0.05);
        let a = rank2::sum_cot::<f64>(g, beta).unwrap();
        let b = rank2::sum_cot_closed::<f64>(g, beta).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
        let a = rank2::sum_cot_sq::<f64>(g, beta).unwrap();
        let b = rank2::sum_cot_sq_closed::<f64>(g, beta).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn chain_inequality_is_strict((f, _r, th) in polar_point()) {
        let cfg = Rank2Config::new(f, th).unwrap();
        prop_assume!((cfg.excess0()).abs() > 1e-6);
        let t_end = rank2::collapse_times(&cfg).unwrap().time;
        let n = f.n() as f64;
        let g = f.g() as f64;
        let grid = invariants::uniform_grid(-5.0 / (g * n), 0.99 * t_end, 200);
        let (margin, _) = invariants::chain_inequality_margin(&cfg, &grid).unwrap();
        prop_assert!(margin > 0.0);
    }

    #[test]
    fn ancient_limits((f, _r, th) in polar_point()) {
        let cfg = Rank2Config::new(f, th).unwrap();
        prop_assume!((cfg.excess0()).abs() > 1e-6);
        let (g, n) = (f.g() as f64, f.n() as f64);
        let lc = rank2::limit_constants(&cfg);
        let s = invariants::CurvatureSeries::closed_form(&cfg, &[-20.0 / (g * n), -10.0 / (g * n)]).unwrap();
        let h_scaled = (s.ln_h2[1] - 2.0 * g * n * s.times[1]).exp();
        prop_assert!((h_scaled - lc.c0).abs() <= 1e-2 * lc.c0);
        prop_assert!((s.a2[0] - lc.a2_limit).abs() <= 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spherical_flow_stays_on_sphere_and_matches((f, _r, th) in polar_point()) {
        let cfg = Rank2Config::new(f, th).unwrap();
        let rs = f.root_system::<f64>();
        let n = f.n() as f64;
        let g = f.g() as f64;
        let t_end = rank2::collapse_times(&cfg).map(|c| 0.9 * c.time).unwrap_or(1.0 / (g * n));
        let spec = FlowSpec::new(FlowKind::Spherical, rs.clone(), cfg.initial_point(), -3.0 / (g * n), t_end);
        let traj = flow::integrate(&spec).unwrap();
        for (&t, p) in traj.times().iter().zip(traj.points()) {
            prop_assert!((p.norm() - 1.0).abs() <= 1e-10);
            if t >= traj.integrated_from() {
                let (_, theta) = rs.polar(p.coords()).unwrap();
                let expect = rank2::spherical_theta(&cfg, t).unwrap();
                prop_assert!((theta - expect).abs() <= 1e-7, "t={} {} {}", t, theta, expect);
            }
        }
    }

    #[test]
    fn euclidean_radial_law((f, _r, th) in polar_point()) {
        let cfg = Rank2Config::new(f, th).unwrap();
        let rs = f.root_system::<f64>();
        let n = f.n() as f64;
        let t_end = 0.95 * rank2::euclidean_collapse_time(&cfg);
        let spec = FlowSpec::new(FlowKind::Euclidean, rs, cfg.initial_point(), -2.0 / n, t_end);
        let traj = flow::integrate(&spec).unwrap();
        for (&t, p) in traj.times().iter().zip(traj.points()) {
            let r = (1.0 - 2.0 * n * t).sqrt();
            prop_assert!((p.norm() - r).abs() <= 1e-8 * r);
        }
    }

    #[test]
    fn ancient_convergence_rate((f, _r, th) in polar_point()) {
        let cfg = Rank2Config::new(f, th).unwrap();
        prop_assume!(!cfg.is_minimal());
        let rs = f.root_system::<f64>();
        let n = f.n() as f64;
        let z = flow::find_minimal_point(&rs).unwrap().z.into_coords();
        let spec = FlowSpec::new(FlowKind::Spherical, rs, cfg.initial_point(), -5.0 / n, 0.0);
        let traj = flow::integrate(&spec).unwrap();
        let d0 = linalg::distance(&traj.sample(0.0).unwrap(), &z);
        let mut k = 0.0f64;
        for (&t, p) in traj.times().iter().zip(traj.points()) {
            if t >= traj.integrated_from() {
                k = k.max(linalg::distance(p.coords(), &z) / (d0 * (n * t).exp()));
            }
        }
        prop_assert!(k <= 1.0 + 1e-6, "K = {}", k);
    }

    #[test]
    fn minimal_point_is_seed_independent(f in family(), u in 0.02f64..0.98) {
        let rs = f.root_system::<f64>();
        let z = flow::find_minimal_point(&rs).unwrap().z.into_coords();
        let seed = rs.from_polar(1.0, u * f.sector_upper::<f64>()).unwrap().into_coords();
        let z2 = flow::find_minimal_point_from(&rs, &seed).unwrap().z.into_coords();
        prop_assert!(linalg::distance(&z, &z2) <= 1e-10);
    }

    #[test]
    fn general_rank_identities(seed in any::<u64>()) {
        let rs = b3();
        let mut s = Sampler::seeded(seed);
        for c in invariants::check_pythagoras(&rs, &mut s, 200).unwrap() {
            prop_assert!(c.passed, "{:?}", c);
        }
    }
}

fn profile_gap(cfg: &Rank2Config, z: &[f64], t: f64) -> f64 {
    let (r, th) = rank2::euclidean_solution(cfg, t).unwrap();
    let x = [r * th.cos(), r * th.sin()];
    linalg::distance(&x, &linalg::scale(z, r))
}

#[test]
fn euclidean_asymptotic_profile() {
    for (g, m1, m2) in [(2, 1, 1), (2, 1, 3), (3, 1, 1), (4, 1, 3), (6, 2, 2)] {
        let f = DihedralFamily::new(g, m1, m2).unwrap();
        let rs = f.root_system::<f64>();
        let n = f.n() as f64;
        let z = flow::find_minimal_point(&rs).unwrap().z.into_coords();
        for u in [0.3, 0.7] {
            let cfg = Rank2Config::new(f, u * f.sector_upper::<f64>()).unwrap();
            let t = -50.0 / n;
            let spec = FlowSpec::new(FlowKind::Euclidean, rs.clone(), cfg.initial_point(), t, 0.0);
            let traj = flow::integrate(&spec).unwrap();
            let x = traj.sample(t).unwrap();
            let rho = 1.0 - 2.0 * n * t;
            let d = linalg::distance(&x, &linalg::scale(&z, rho.sqrt()));
            let d_cf = profile_gap(&cfg, &z, t);
            assert!(
                (d - d_cf).abs() <= 1e-6 * rho.sqrt(),
                "g={g} u={u}: {d} vs {d_cf}"
            );
            let t2 = -5000.0 / n;
            let rate = (profile_gap(&cfg, &z, t2) / d_cf).ln() / ((1.0 - 2.0 * n * t2) / rho).ln();
            assert!(
                (rate - (1.0 - g as f64) / 2.0).abs() < 0.02,
                "g={g}: rate {rate}"
            );
            assert!(profile_gap(&cfg, &z, -1e8 / n) < 1e-3);
        }
    }
}

#[test]
fn general_rank_minimal_point_and_radial_law() {
    let rs = b3();
    let n = rs.dimension() as f64;
    let mp = flow::find_minimal_point(&rs).unwrap();
    assert!(mp.residual <= 1e-11);
    let he = curvature::mean_curvature_euclidean(&rs, mp.z.coords()).unwrap();
    assert!((linalg::norm(&he) - n).abs() <= 1e-10);
    let x0 = linalg::normalized(&[3.0, 2.0, 1.0]).unwrap();
    let spec = FlowSpec::new(FlowKind::Euclidean, rs, x0, -1.0 / n, 0.0);
    let traj = flow::integrate(&spec).unwrap();
    for (&t, p) in traj.times().iter().zip(traj.points()) {
        let r = (1.0 - 2.0 * n * t).sqrt();
        assert!((p.norm() - r).abs() <= 1e-8 * r);
    }
}

#[test]
fn single_precision_flow() {
    let f = DihedralFamily::new(2, 1, 1).unwrap();
    let rs = f.root_system::<f32>();
    let cfg = isoflow::Rank2Config32::new(f, 0.5).unwrap();
    let spec = isoflow::FlowSpec32::new(
        FlowKind::Spherical,
        rs.clone(),
        cfg.initial_point(),
        -0.5,
        0.0,
    )
    .with_tolerances(1e-5, 1e-6)
    .with_collapse_margin(1e-4);
    let traj = flow::integrate(&spec).unwrap();
    let th = rs.polar(traj.points()[0].coords()).unwrap().1;
    let expect = rank2::spherical_theta(&cfg, traj.times()[0]).unwrap();
    assert!((th - expect).abs() < 1e-4);
}
