use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, LN_2, PI};

use isoflow::catalog;
use isoflow::curvature::{self, curvature_report};
use isoflow::flow::{self, FlowKind};
use isoflow::linalg;
use isoflow::rank2::{self, FocalTarget};
use isoflow::roots_file;
use isoflow::{DihedralFamily, Error, FlowSpec, Rank2Config, RootSystem};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
}

fn close_vec(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        close(*x, *y, tol);
    }
}

fn dihedral(g: u32, m1: u32, m2: u32) -> RootSystem {
    RootSystem::dihedral(g, m1, m2).unwrap()
}

fn angles(rs: &RootSystem) -> Vec<f64> {
    rs.roots().iter().map(|a| a[1].atan2(a[0])).collect()
}

#[test]
fn dihedral_roots() {
    let rs = dihedral(2, 1, 1);
    close_vec(&angles(&rs), &[0.0, FRAC_PI_2], 1e-15);
    assert_eq!(rs.dimension(), 2);

    let rs = dihedral(1, 3, 3);
    close_vec(&angles(&rs), &[FRAC_PI_2], 1e-15);
    assert_eq!(rs.dimension(), 3);

    let rs = dihedral(3, 1, 1);
    close_vec(&angles(&rs), &[-FRAC_PI_6, FRAC_PI_6, FRAC_PI_2], 1e-15);
    assert_eq!(rs.dimension(), 3);
}

#[test]
fn chamber_membership() {
    let rs = dihedral(2, 1, 1);
    assert_eq!(rs.in_chamber(&[1.0, 1.0]).unwrap(), (true, 1.0));
    let (inside, m) = rs.in_chamber(&[1.0, -1.0]).unwrap();
    assert!(!inside);
    close(m, -1.0, 1e-15);
    let (inside, m) = dihedral(3, 1, 1).in_chamber(&[0.0, 1.0]).unwrap();
    assert!(!inside);
    close(m, -0.5, 1e-15);
    let (inside, m) = dihedral(3, 1, 1)
        .in_chamber(&[FRAC_PI_6.cos(), FRAC_PI_6.sin()])
        .unwrap();
    assert!(inside);
    close(m, 0.5, 1e-15);
}

#[test]
fn validation() {
    assert!(dihedral(2, 1, 1).validate().passes());
    let twin = RootSystem::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![1, 1]).unwrap();
    let rep = twin.validate();
    assert!(!rep.distinct && !rep.full);
    let flat = RootSystem::new(
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
        ],
        vec![1, 1, 1],
    )
    .unwrap();
    assert_eq!(flat.validate().failures(), vec!["full"]);
}

#[test]
fn polar_coordinates() {
    let rs = dihedral(2, 1, 1);
    let (_, th) = rs.polar(&[1.0, 1e-3]).unwrap();
    close(th, 1e-3, 1e-9);
    let (r, th) = rs.polar(&[3f64.sqrt() / 2.0, 0.5]).unwrap();
    close(r, 1.0, 1e-15);
    close(th, FRAC_PI_6, 1e-15);
    assert!(matches!(
        rs.polar(&[0.0, 2.0]),
        Err(Error::OutsideSector { .. })
    ));
}

#[test]
fn curvature_values() {
    let rs = dihedral(2, 1, 1);
    let x = [3f64.sqrt() / 2.0, 0.5];
    let rep = curvature_report(&rs, &x).unwrap();
    close_vec(&rep.h_euclidean, &[-2.0 / 3f64.sqrt(), -2.0], 1e-14);
    close_vec(&rep.h_spherical, &[1.0 / 3f64.sqrt(), -1.0], 1e-14);
    close(rep.h2_spherical().sqrt(), 2.0 / 3f64.sqrt(), 1e-14);
    close(rep.a2_euclidean, 16.0 / 3.0, 1e-14);
    close(rep.a2_spherical, 10.0 / 3.0, 1e-14);
    close(rep.phi, 8.0 / 3.0, 1e-14);
    close(
        rank2::phi_closed(&DihedralFamily::new(2, 1, 1).unwrap(), FRAC_PI_6).unwrap(),
        8.0 / 3.0,
        1e-14,
    );

    let h = curvature::mean_curvature_spherical(&rs, &[FRAC_PI_4.cos(), FRAC_PI_4.sin()]).unwrap();
    close(linalg::norm(&h), 0.0, 1e-14);

    let rs = dihedral(1, 3, 3);
    close_vec(
        &curvature::mean_curvature_euclidean(&rs, &[0.0, 1.0]).unwrap(),
        &[0.0, -3.0],
        1e-15,
    );
    for x in [[0.3, 0.8], [-2.0, 0.1]] {
        close(curvature::traceless_norm_sq(&rs, &x).unwrap(), 0.0, 1e-13);
    }

    let rs = dihedral(4, 1, 3);
    let x = [0.6, 0.2];
    let a = curvature::shape_norm_sq_euclidean(&rs, &x).unwrap();
    let scaled = curvature::shape_norm_sq_euclidean(&rs, &[3.0 * x[0], 3.0 * x[1]]).unwrap();
    close(scaled, a / 9.0, 1e-12 * a);
}

#[test]
fn minimal_points() {
    for (g, m1, m2, theta) in [
        (2, 1, 1, FRAC_PI_4),
        (2, 1, 3, FRAC_PI_3),
        (4, 1, 1, FRAC_PI_8),
        (3, 1, 1, FRAC_PI_6),
        (1, 2, 2, FRAC_PI_2),
    ] {
        let rs = dihedral(g, m1, m2);
        let mp = flow::find_minimal_point(&rs).unwrap();
        let (_, th) = rs.polar(mp.z.coords()).unwrap();
        close(th, theta, 1e-12);
        let n = rs.dimension() as f64;
        let he = curvature::mean_curvature_euclidean(&rs, mp.z.coords()).unwrap();
        close_vec(&he, &linalg::scale(mp.z.coords(), -n), 1e-10);
        close(
            curvature::shape_norm_sq_euclidean(&rs, mp.z.coords()).unwrap(),
            n * g as f64,
            1e-9,
        );
        close(
            curvature::shape_norm_sq_spherical(&rs, mp.z.coords()).unwrap(),
            n * (g as f64 - 1.0),
            1e-9,
        );
    }
    let rs = dihedral(3, 1, 1);
    let z = flow::find_minimal_point(&rs).unwrap().z;
    close(
        curvature::shape_norm_sq_spherical(&rs, z.coords()).unwrap(),
        6.0,
        1e-10,
    );
}

#[test]
fn closed_form_solutions() {
    let fam = DihedralFamily::new(2, 1, 1).unwrap();
    let cfg = Rank2Config::new(fam, FRAC_PI_6).unwrap();
    let th = rank2::spherical_theta(&cfg, -1.0).unwrap();
    close(th, ((-4f64).exp() / 2.0).acos() / 2.0, 1e-15);

    let (r, th) = rank2::euclidean_solution(&cfg, -0.75).unwrap();
    close(r, 2.0, 1e-15);
    close((2.0 * th).cos(), 0.125, 1e-15);
    assert_eq!(
        rank2::euclidean_solution(&cfg, 0.0).unwrap(),
        (1.0, FRAC_PI_6)
    );

    let c = rank2::collapse_times(&cfg).unwrap();
    close(c.time, LN_2 / 4.0, 1e-15);
    assert_eq!(c.target, FocalTarget::MPlus);

    let min = Rank2Config::new(fam, FRAC_PI_4).unwrap();
    assert!(rank2::collapse_times(&min).is_none());
    close(
        rank2::spherical_theta(&min, -7.0).unwrap(),
        FRAC_PI_4,
        1e-15,
    );
    let (r, th) = rank2::euclidean_solution(&min, 0.1).unwrap();
    close(r, 0.6f64.sqrt(), 1e-15);
    close(th, FRAC_PI_4, 1e-15);

    let fam3 = DihedralFamily::new(3, 1, 1).unwrap();
    for th0 in [0.6, 0.8, 1.0] {
        let c = rank2::collapse_times(&Rank2Config::new(fam3, th0).unwrap()).unwrap();
        assert_eq!(c.target, FocalTarget::MMinus);
        close(c.time, (-1.0 / (3.0 * th0).cos()).ln() / 9.0, 1e-14);
    }

    close(
        DihedralFamily::new(2, 1, 3).unwrap().theta_min::<f64>(),
        FRAC_PI_3,
        1e-15,
    );
    close(fam3.theta_min::<f64>(), FRAC_PI_6, 1e-15);
    close(
        DihedralFamily::new(1, 4, 4).unwrap().theta_min::<f64>(),
        FRAC_PI_2,
        1e-15,
    );
}

#[test]
fn flows() {
    let fam = DihedralFamily::new(2, 1, 1).unwrap();
    let rs = fam.root_system::<f64>();
    let min = Rank2Config::new(fam, FRAC_PI_4).unwrap();

    let spec = FlowSpec::new(
        FlowKind::Spherical,
        rs.clone(),
        min.initial_point(),
        -1.0,
        1.0,
    );
    let traj = flow::integrate(&spec).unwrap();
    for t in [-1.0, -0.3, 0.5, 1.0] {
        close_vec(&traj.sample(t).unwrap(), &min.initial_point(), 1e-15);
    }
    assert!(matches!(flow::collapse_time(&spec), Err(Error::Stationary)));

    let spec = FlowSpec::new(
        FlowKind::Euclidean,
        rs.clone(),
        min.initial_point(),
        0.0,
        0.2,
    );
    let traj = flow::integrate(&spec).unwrap();
    for t in [0.05f64, 0.1, 0.2] {
        let want = linalg::scale(&min.initial_point(), (1.0 - 4.0 * t).sqrt());
        close_vec(&traj.sample(t).unwrap(), &want, 1e-7);
    }
    let long = FlowSpec::new(
        FlowKind::Euclidean,
        rs.clone(),
        min.initial_point(),
        0.0,
        1.0,
    );
    close(flow::collapse_time(&long).unwrap(), 0.25, 1e-8);

    let cfg = Rank2Config::new(fam, FRAC_PI_6).unwrap();
    let spec = FlowSpec::new(
        FlowKind::Spherical,
        rs.clone(),
        cfg.initial_point(),
        -3.0,
        0.0,
    );
    let traj = flow::integrate(&spec).unwrap();
    for &t in traj.times() {
        let (_, th) = rs.polar(&traj.sample(t).unwrap()).unwrap();
        close((2.0 * th).cos(), (4.0 * t).exp() / 2.0, 1e-8);
    }

    let spec = FlowSpec::new(
        FlowKind::Spherical,
        rs.clone(),
        cfg.initial_point(),
        0.0,
        1.0,
    );
    close(flow::collapse_time(&spec).unwrap(), LN_2 / 4.0, 1e-6);
    let spec = FlowSpec::new(
        FlowKind::Euclidean,
        rs.clone(),
        cfg.initial_point(),
        0.0,
        1.0,
    );
    assert!(flow::collapse_time(&spec).unwrap() < 0.25);

    let sph = FlowSpec::new(
        FlowKind::Spherical,
        rs.clone(),
        cfg.initial_point(),
        -2.0,
        0.5,
    );
    let sph = flow::integrate(&sph).unwrap();
    let times: Vec<f64> = isoflow::invariants::uniform_grid(-1.0, 0.12, 60);
    let rebuilt = flow::euclidean_from_spherical(&sph, Some(&times)).unwrap();
    let direct = FlowSpec::new(FlowKind::Euclidean, rs, cfg.initial_point(), -1.0, 0.12);
    let direct = flow::integrate(&direct).unwrap();
    for &t in &times {
        close_vec(
            &rebuilt.sample(t).unwrap(),
            &direct.sample(t).unwrap(),
            1e-7,
        );
    }
    close_vec(&rebuilt.sample(0.0).unwrap(), &cfg.initial_point(), 1e-15);
}

#[test]
fn pair_audits() {
    let fam = DihedralFamily::new(2, 1, 1).unwrap();
    let rs = fam.root_system::<f64>();
    let run = |kind, th0: f64, t0: f64| {
        let cfg = Rank2Config::new(fam, th0).unwrap();
        flow::integrate(&FlowSpec::new(
            kind,
            rs.clone(),
            cfg.initial_point(),
            t0,
            0.0,
        ))
        .unwrap()
    };
    let a = run(FlowKind::Spherical, FRAC_PI_6, -3.0);
    let b = run(FlowKind::Spherical, FRAC_PI_3, -3.0);
    assert!(flow::pair_distance_audit(&a, &b).unwrap().holds);
    let same = flow::pair_distance_audit(&a, &a).unwrap();
    assert!(same.holds);
    assert_eq!(same.max_distance_sq, 0.0);

    let fam3 = DihedralFamily::new(3, 1, 1).unwrap();
    let rs3 = fam3.root_system::<f64>();
    let run3 = |th0: f64| {
        let cfg = Rank2Config::new(fam3, th0).unwrap();
        flow::integrate(&FlowSpec::new(
            FlowKind::Euclidean,
            rs3.clone(),
            cfg.initial_point(),
            -2.0,
            0.0,
        ))
        .unwrap()
    };
    let audit = flow::pair_distance_audit(&run3(PI / 12.0), &run3(FRAC_PI_4)).unwrap();
    assert!(audit.holds, "{audit:?}");
}

#[test]
fn catalog_facts_rederive() {
    for e in catalog::all_entries() {
        for c in e.verify().unwrap() {
            assert!(c.passed, "{}: {c:?}", e.name);
        }
    }
    let torus = catalog::find("clifford-torus-n4-k1").unwrap();
    let th = torus.family().unwrap().theta_min::<f64>();
    close(th.cos(), 0.25f64.sqrt(), 1e-15);
    assert!(catalog::find("no-such-entry").is_none());
}

#[test]
fn roots_file_round_trip_preserves_curvature() {
    let rs = dihedral(4, 1, 3);
    let text = roots_file::to_roots_text(&rs);
    let back: RootSystem = roots_file::parse_root_system(&text, false).unwrap();
    let x = [0.9, 0.1];
    let a = curvature_report(&rs, &x).unwrap();
    let b = curvature_report(&back, &x).unwrap();
    close(a.a2_spherical, b.a2_spherical, 1e-12 * a.a2_spherical);
    close_vec(&a.h_spherical, &b.h_spherical, 1e-12);
}
