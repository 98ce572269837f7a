use std::collections::BTreeSet;
use std::io::Write;

use serde_json::{json, Map, Value};

use isoflow::catalog::{self, CatalogConfig, CatalogEntry};
use isoflow::curvature::{self, Provenance};
use isoflow::flow::{self, FlowKind};
use isoflow::invariants::{self, CurvatureSeries, IdentityCheck};
use isoflow::rank2;
use isoflow::{linalg, DihedralFamily, Error, FlowSpec, Rank2Config, RootSystem, Sampler};

use crate::args::{
    CatalogAction, CheckArgs, ClosedFormArgs, Kind, MinimalArgs, ReportFormat, SimulateArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{self, envelope, Cell, Table};
use crate::source::{angle, resolve, Source};

fn flow_kind(k: Kind) -> FlowKind {
    match k {
        Kind::Euclidean => FlowKind::Euclidean,
        Kind::Spherical => FlowKind::Spherical,
    }
}

fn family_json(fam: &DihedralFamily) -> Value {
    json!({
        "g": fam.g(),
        "m1": fam.m1(),
        "m2": fam.m2(),
        "n": fam.n(),
        "delta": fam.delta::<f64>(),
        "theta_min": fam.theta_min::<f64>(),
    })
}

fn curvature_columns() -> [&'static str; 6] {
    [
        "H_E_norm2",
        "H_S_norm2",
        "A_E_norm2",
        "A_S_norm2",
        "phi",
        "ratio_A2_over_H2",
    ]
}

fn curvature_cells(vals: [f64; 5], kind: Kind) -> Vec<Cell> {
    let [he2, hs2, ae2, as2, phi] = vals;
    let ratio = match kind {
        Kind::Spherical => as2 / hs2,
        Kind::Euclidean => ae2 / he2,
    };
    vec![
        Cell::Num(he2),
        Cell::Num(hs2),
        Cell::Num(ae2),
        Cell::Num(as2),
        Cell::Num(phi),
        Cell::Num(ratio),
    ]
}

fn initial_point(
    a: &SimulateArgs,
    src: &Source,
    rs: &RootSystem,
    degrees: bool,
) -> CliResult<Vec<f64>> {
    let x0 = match (a.theta0, &a.x0) {
        (Some(_), Some(_)) => return Err(CliError::field("theta0/x0", "give only one")),
        (Some(th), None) => {
            let th = angle(th, degrees);
            match src {
                Source::Family { fam, .. } => Rank2Config::new(*fam, th)
                    .map_err(|e| CliError::field("theta0", e))?
                    .initial_point(),
                Source::Roots { .. } if rs.rank() == 2 => vec![th.cos(), th.sin()],
                Source::Roots { .. } => {
                    return Err(CliError::field("theta0", "only meaningful for rank-2 data"))
                }
            }
        }
        (None, Some(x)) => x.clone(),
        (None, None) => match src.default_theta0() {
            Some(th) => vec![th.cos(), th.sin()],
            None if matches!(src, Source::Family { .. }) => {
                return Err(CliError::field("theta0", "required for a rank-2 family"))
            }
            None => rs
                .interior_direction()
                .map_err(|e| CliError::from_core("x0", e))?,
        },
    };
    rs.chamber_point(x0.clone())
        .map_err(|e| CliError::field("x0", e))?;
    Ok(x0)
}

pub fn simulate(a: &SimulateArgs, degrees: bool) -> CliResult<()> {
    let src = resolve(&a.source)?;
    let rs = src.root_system();
    let x0 = initial_point(a, &src, &rs, degrees)?;
    let spec = FlowSpec::new(
        flow_kind(a.kind),
        rs.clone(),
        x0.clone(),
        a.t_start,
        a.t_end,
    )
    .with_tolerances(a.rtol, a.atol);
    spec.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    if a.samples.is_some_and(|s| s < 2) {
        return Err(CliError::field("samples", "need at least 2"));
    }
    let traj = flow::integrate(&spec).map_err(|e| CliError::from_core("integration", e))?;

    let k = rs.rank();
    let with_theta = k == 2;
    let mut columns = vec!["t".to_string(), "r".to_string()];
    if with_theta {
        columns.push("theta".into());
    }
    columns.extend((1..=k).map(|i| format!("x_{i}")));
    columns.extend(curvature_columns().iter().map(|s| s.to_string()));

    let states: Vec<(f64, Vec<f64>)> = match a.samples {
        None => traj
            .times()
            .iter()
            .zip(traj.points())
            .map(|(&t, p)| (t, p.coords().to_vec()))
            .collect(),
        Some(s) => invariants::uniform_grid(traj.t_first(), traj.t_last(), s)
            .into_iter()
            .map(|t| Ok((t, traj.sample(t)?)))
            .collect::<Result<_, Error>>()
            .map_err(|e| CliError::from_core("sampling", e))?,
    };
    let mut rows = Vec::with_capacity(states.len());
    for (t, x) in &states {
        let rep =
            curvature::curvature_report(&rs, x).map_err(|e| CliError::from_core("curvature", e))?;
        let mut row = vec![Cell::Num(*t), Cell::Num(linalg::norm(x))];
        if with_theta {
            row.push(Cell::Num(x[1].atan2(x[0])));
        }
        row.extend(x.iter().map(|&v| Cell::Num(v)));
        row.extend(curvature_cells(
            [
                rep.h2_euclidean(),
                rep.h2_spherical(),
                rep.a2_euclidean,
                rep.a2_spherical,
                rep.phi,
            ],
            a.kind,
        ));
        rows.push(row);
    }

    let mut meta = envelope("simulate", a)?;
    meta.insert("degrees".into(), json!(degrees));
    meta.insert(
        "resolved".into(),
        json!({
            "family": src.family().map(|f| family_json(&f)),
            "root_system": rs,
            "x0": x0,
            "n": rs.dimension(),
        }),
    );
    let mut prov = Map::new();
    for c in &columns {
        let tag = if curvature_columns().contains(&c.as_str()) {
            Provenance::Oracle
        } else {
            Provenance::Ode
        };
        prov.insert(c.clone(), json!(tag.as_str()));
    }
    meta.insert("provenance".into(), Value::Object(prov));
    meta.insert(
        "termination".into(),
        json!({
            "past": traj.past(),
            "future": traj.future(),
            "integrated_from": traj.integrated_from(),
        }),
    );
    meta.insert("stats".into(), serde_json::to_value(traj.stats())?);
    output::write_table(a.out.as_deref(), a.format, &Table { columns, rows }, meta)
}

fn require_family(src: &Source, what: &str) -> CliResult<DihedralFamily> {
    src.family().ok_or_else(|| {
        CliError::field(
            "source",
            format!("{what} needs a rank-2 family (--g/--m1/--m2 or --entry)"),
        )
    })
}

pub fn closed_form(a: &ClosedFormArgs, degrees: bool) -> CliResult<()> {
    let src = resolve(&a.source)?;
    let fam = require_family(&src, "closed-form")?;
    let theta0 = a
        .theta0
        .map(|t| angle(t, degrees))
        .or(src.default_theta0())
        .ok_or_else(|| CliError::field("theta0", "required"))?;
    let cfg = Rank2Config::new(fam, theta0).map_err(|e| CliError::field("theta0", e))?;
    let times = match (&a.times, a.t_start, a.t_end) {
        (Some(ts), _, _) if !ts.is_empty() => ts.clone(),
        (None, Some(t0), Some(t1)) => {
            if !(t0 < t1) || a.samples < 2 {
                return Err(CliError::field(
                    "t_start/t_end/samples",
                    "need t_start < t_end and at least 2 samples",
                ));
            }
            invariants::uniform_grid(t0, t1, a.samples)
        }
        _ => {
            return Err(CliError::field(
                "times",
                "give --times or --t-start/--t-end",
            ))
        }
    };

    let mut columns: Vec<String> = ["t", "domain", "r", "theta", "x_1", "x_2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    columns.extend(curvature_columns().iter().map(|s| s.to_string()));
    let mut rows = Vec::with_capacity(times.len());
    for &t in &times {
        let state = match a.kind {
            Kind::Spherical => rank2::spherical_theta(&cfg, t).map(|th| (1.0, th)),
            Kind::Euclidean => rank2::euclidean_solution(&cfg, t),
        };
        let (r, th) = match state {
            Ok(v) => v,
            Err(Error::OutOfDomain { .. }) => {
                let mut row = vec![Cell::Num(t), Cell::Text("out_of_domain")];
                row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), columns.len() - 2));
                rows.push(row);
                continue;
            }
            Err(e) => return Err(CliError::from_core("closed form", e)),
        };
        let eval = || -> Result<[f64; 5], Error> {
            let (he, hs) = rank2::mean_curvature_closed(&fam, r, th)?;
            let (ae, as_) = rank2::shape_norms_closed(&fam, r, th)?;
            let phi = rank2::phi_closed(&fam, th)? / (r * r);
            Ok([linalg::norm_sq(&he), linalg::norm_sq(&hs), ae, as_, phi])
        };
        let vals = eval().map_err(|e| CliError::from_core("closed form", e))?;
        let mut row = vec![
            Cell::Num(t),
            Cell::Text("ok"),
            Cell::Num(r),
            Cell::Num(th),
            Cell::Num(r * th.cos()),
            Cell::Num(r * th.sin()),
        ];
        row.extend(curvature_cells(vals, a.kind));
        rows.push(row);
    }

    let mut meta = envelope("closed-form", a)?;
    meta.insert("degrees".into(), json!(degrees));
    meta.insert(
        "resolved".into(),
        json!({ "family": family_json(&fam), "theta0": theta0 }),
    );
    let prov: Map<String, Value> = columns
        .iter()
        .filter(|c| *c != "t" && *c != "domain")
        .map(|c| (c.clone(), json!(Provenance::ClosedForm.as_str())))
        .collect();
    meta.insert("provenance".into(), Value::Object(prov));
    meta.insert(
        "collapse".into(),
        json!({
            "spherical": rank2::collapse_times(&cfg),
            "euclidean": rank2::euclidean_collapse_time(&cfg),
        }),
    );
    output::write_table(a.out.as_deref(), a.format, &Table { columns, rows }, meta)
}

pub fn minimal(a: &MinimalArgs) -> CliResult<()> {
    let src = resolve(&a.source)?;
    let rs = src.root_system();
    let mp = flow::find_minimal_point(&rs).map_err(|e| CliError::from_core("minimal point", e))?;
    let z = mp.z.coords().to_vec();
    let a2 = curvature::shape_norm_sq_spherical(&rs, &z)
        .map_err(|e| CliError::from_core("curvature", e))?;
    let theta_min = (rs.rank() == 2).then(|| z[1].atan2(z[0]));
    let fam = src.family();
    match a.format {
        ReportFormat::Text => {
            let zs: Vec<String> = z.iter().map(|v| v.to_string()).collect();
            let mut out = std::io::stdout().lock();
            writeln!(out, "z {}", zs.join(" "))?;
            if let Some(th) = theta_min {
                writeln!(out, "theta_min {th}")?;
            }
            writeln!(out, "residual {:e}", mp.residual)?;
            writeln!(out, "A_S_norm2 {a2}")?;
        }
        ReportFormat::Json => {
            let mut m = envelope("minimal", a)?;
            m.insert("z".into(), json!(z));
            m.insert("theta_min".into(), json!(theta_min));
            m.insert("residual".into(), json!(mp.residual));
            m.insert("A_S_norm2".into(), json!(a2));
            m.insert("method".into(), json!(mp.method));
            m.insert("iterations".into(), json!(mp.iterations));
            m.insert(
                "closed_form".into(),
                json!(fam.map(|f| json!({
                    "theta_min": f.theta_min::<f64>(),
                    "A_S_norm2": f.n() as f64 * (f.g() as f64 - 1.0),
                }))),
            );
            m.insert(
                "provenance".into(),
                json!({
                    "z": Provenance::Oracle.as_str(),
                    "theta_min": Provenance::Oracle.as_str(),
                    "residual": Provenance::Oracle.as_str(),
                    "A_S_norm2": Provenance::Oracle.as_str(),
                    "closed_form": Provenance::ClosedForm.as_str(),
                }),
            );
            output::write_json(None, &Value::Object(m))?;
        }
    }
    Ok(())
}

struct EntryReport {
    json: Value,
    failures: Vec<String>,
}

fn failed_names(name: &str, checks: &[IdentityCheck]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{name}/{}", c.name))
        .collect()
}

fn err_json(what: &str, e: Error) -> Value {
    json!({ "audit": what, "error": e.to_string() })
}

fn estimate_audits(cfg: &Rank2Config) -> Vec<Value> {
    let mut out = Vec::new();
    let (g, n) = (cfg.g() as f64, cfg.n() as f64);
    let grid = invariants::uniform_grid(-10.0 / (g * n), 0.0, 401);
    match CurvatureSeries::closed_form(cfg, &grid) {
        Ok(series) => {
            match invariants::audit_hs_conditions(&series) {
                Ok(v) => out.extend(v.into_iter().map(|a| json!(a))),
                Err(e) => out.push(err_json("hs_conditions", e)),
            }
            match invariants::ratio_envelope(&series) {
                Ok(a) => out.push(json!(a)),
                Err(e) => out.push(err_json("ratio_envelope", e)),
            }
        }
        Err(e) => out.push(err_json("curvature_series", e)),
    }
    match invariants::phi_band(cfg, 0.5) {
        Ok((_, a)) => out.push(json!(a)),
        Err(e) => out.push(err_json("phi_band", e)),
    }
    out
}

fn sharpness(fam: &DihedralFamily) -> Value {
    if fam.g() < 2 || fam.n() <= fam.g() {
        return Value::Null;
    }
    match invariants::sharpness_witness(fam.g(), fam.m1(), fam.m2()) {
        Ok((th, audit)) => json!({ "theta0": th, "holds": audit.holds, "audit": audit }),
        Err(e) => err_json("sharpness", e),
    }
}

fn check_family_entry(
    name: &str,
    fam: &DihedralFamily,
    rs: &RootSystem,
    theta0: f64,
    entry: Option<&CatalogEntry>,
    sampler: &mut Sampler,
) -> CliResult<EntryReport> {
    let checks = invariants::check_family(fam, rs, sampler)
        .map_err(|e| CliError::from_core("identity checks", e))?;
    let mut failures = failed_names(name, &checks);
    let facts = match entry {
        Some(e) => e.verify().map_err(|e| CliError::from_core("facts", e))?,
        None => Vec::new(),
    };
    failures.extend(
        facts
            .iter()
            .filter(|f| !f.passed)
            .map(|f| format!("{name}/fact:{}", f.quantity.as_str())),
    );
    let cfg = Rank2Config::new(*fam, theta0).map_err(|e| CliError::field("theta0", e))?;
    let json = json!({
        "name": name,
        "family": family_json(fam),
        "theta0": theta0,
        "validation": rs.validate(),
        "identity_checks": checks,
        "facts": facts,
        "audits": estimate_audits(&cfg),
        "sharpness": sharpness(fam),
        "passed": failures.is_empty(),
    });
    Ok(EntryReport { json, failures })
}

fn check_roots_entry(rs: &RootSystem, sampler: &mut Sampler) -> CliResult<EntryReport> {
    let name = "roots";
    let mut checks = invariants::check_pythagoras(rs, sampler, 1000)
        .map_err(|e| CliError::from_core("identity checks", e))?;
    let minimal = match flow::find_minimal_point(rs) {
        Ok(mp) => {
            let rep = curvature::curvature_report(rs, mp.z.coords())
                .map_err(|e| CliError::from_core("curvature", e))?;
            let n = rs.dimension() as f64;
            let residual = (linalg::norm(&rep.h_euclidean) - n).abs();
            checks.push(IdentityCheck {
                name: "minimal_he_norm",
                max_residual: residual,
                tolerance: 1e-10,
                samples: 1,
                passed: residual <= 1e-10,
                worst_at: mp.z.coords().to_vec(),
                source: Provenance::Oracle,
            });
            json!({ "z": mp.z.coords(), "residual": mp.residual, "method": mp.method })
        }
        Err(e) => err_json("minimal_point", e),
    };
    let failures = failed_names(name, &checks);
    let json = json!({
        "name": name,
        "family": Value::Null,
        "validation": rs.validate(),
        "identity_checks": checks,
        "minimal_point": minimal,
        "passed": failures.is_empty(),
    });
    Ok(EntryReport { json, failures })
}

/// Runs the checks; returns whether every identity and fact held.
pub fn check(a: &CheckArgs, degrees: bool) -> CliResult<bool> {
    let mut sampler = match a.seed {
        Some(s) => Sampler::seeded(s),
        None => Sampler::from_env(),
    };
    let sampling = match (a.seed, sampler.is_grid()) {
        (Some(_), _) => "seeded",
        (None, true) => "grid",
        (None, false) => "random",
    };
    let theta_arg = a.theta0.map(|t| angle(t, degrees));
    let mut reports = Vec::new();
    let mut gs = BTreeSet::new();
    if a.suite {
        for e in catalog::standard_suite() {
            let fam = *e.family().expect("suite entries are rank 2");
            let th = theta_arg.unwrap_or_else(|| e.rank2().expect("rank 2").theta0());
            gs.insert(fam.g());
            reports.push(check_family_entry(
                &e.name,
                &fam,
                &fam.root_system(),
                th,
                Some(&e),
                &mut sampler,
            )?);
        }
    } else {
        match resolve(&a.source)? {
            Source::Family { fam, theta0 } => {
                let th = theta_arg
                    .or(theta0)
                    .unwrap_or_else(|| fam.theta_min::<f64>() / 2.0);
                let entry = match &a.source.entry {
                    Some(name) => catalog::find(name),
                    None => Some(
                        catalog::dihedral_entry(fam.g(), fam.m1(), fam.m2())
                            .map_err(|e| CliError::field("g/m1/m2", e))?,
                    ),
                };
                let name = entry
                    .as_ref()
                    .map(|e| e.name.clone())
                    .unwrap_or_else(|| "family".into());
                gs.insert(fam.g());
                reports.push(check_family_entry(
                    &name,
                    &fam,
                    &fam.root_system(),
                    th,
                    entry.as_ref(),
                    &mut sampler,
                )?);
            }
            Source::Roots { rs, fam: Some(fam) } => {
                if rs.rank() != 2 {
                    return Err(CliError::field(
                        "roots",
                        "a family check needs rank-2 roots",
                    ));
                }
                let th = theta_arg.unwrap_or_else(|| fam.theta_min::<f64>() / 2.0);
                reports.push(check_family_entry(
                    "roots-vs-family",
                    &fam,
                    &rs,
                    th,
                    None,
                    &mut sampler,
                )?);
            }
            Source::Roots { rs, fam: None } => {
                reports.push(check_roots_entry(&rs, &mut sampler)?);
            }
        }
    }
    let mut trig = Vec::new();
    for &g in &gs {
        trig.extend(
            invariants::check_trig_identities(g, 1000)
                .map_err(|e| CliError::from_core("trig identities", e))?,
        );
    }
    let mut failures: Vec<String> = reports.iter().flat_map(|r| r.failures.clone()).collect();
    failures.extend(failed_names("trig", &trig));
    let passed = failures.is_empty();

    let mut m = envelope("check", a)?;
    m.insert("degrees".into(), json!(degrees));
    m.insert("sampling".into(), json!(sampling));
    m.insert(
        "entries".into(),
        Value::Array(reports.into_iter().map(|r| r.json).collect()),
    );
    m.insert("trig_identities".into(), json!(trig));
    m.insert("passed".into(), json!(passed));
    m.insert("failures".into(), json!(failures));
    output::write_json(a.out.as_deref(), &Value::Object(m))?;
    Ok(passed)
}

pub fn catalog_cmd(action: &CatalogAction) -> CliResult<()> {
    match action {
        CatalogAction::List { format } => {
            let entries = catalog::all_entries();
            match format {
                ReportFormat::Text => {
                    let mut out = std::io::stdout().lock();
                    for e in &entries {
                        let kind = match e.config {
                            CatalogConfig::Rank2(_) => "rank2",
                            CatalogConfig::General(_) => "general",
                        };
                        writeln!(out, "{}\t{kind}\t{}", e.name, e.parameters())?;
                    }
                }
                ReportFormat::Json => {
                    let mut m = envelope("catalog list", &json!({}))?;
                    let list: Vec<Value> = entries
                        .iter()
                        .map(|e| {
                            json!({
                                "name": e.name,
                                "parameters": e.parameters(),
                                "config": e.config,
                                "documented_facts": e.documented_facts,
                            })
                        })
                        .collect();
                    m.insert("entries".into(), Value::Array(list));
                    output::write_json(None, &Value::Object(m))?;
                }
            }
            Ok(())
        }
    }
}
