use std::f64::consts::PI;

use isoflow::catalog::{self, CatalogConfig};
use isoflow::roots_file;
use isoflow::{DihedralFamily, RootSystem};

use crate::args::SourceArgs;
use crate::error::{CliError, CliResult};

/// Resolved root data.
#[derive(Debug, Clone)]
pub enum Source {
    Family {
        fam: DihedralFamily,
        /// Reference leaf from a catalog entry, if any.
        theta0: Option<f64>,
    },
    Roots {
        rs: RootSystem,
        /// Family the file is checked against, when one was also given.
        fam: Option<DihedralFamily>,
    },
}

impl Source {
    pub fn root_system(&self) -> RootSystem {
        match self {
            Source::Family { fam, .. } => fam.root_system(),
            Source::Roots { rs, .. } => rs.clone(),
        }
    }

    pub fn family(&self) -> Option<DihedralFamily> {
        match self {
            Source::Family { fam, .. } => Some(*fam),
            Source::Roots { fam, .. } => *fam,
        }
    }

    pub fn default_theta0(&self) -> Option<f64> {
        match self {
            Source::Family { theta0, .. } => *theta0,
            Source::Roots { .. } => None,
        }
    }
}

pub fn angle(v: f64, degrees: bool) -> f64 {
    if degrees {
        v * PI / 180.0
    } else {
        v
    }
}

fn family_from(a: &SourceArgs) -> CliResult<Option<DihedralFamily>> {
    match (a.g, a.m1, a.m2) {
        (None, None, None) => Ok(None),
        (Some(g), Some(m1), Some(m2)) => DihedralFamily::new(g, m1, m2)
            .map(Some)
            .map_err(|e| CliError::field("g/m1/m2", e)),
        _ => {
            let missing: Vec<&str> = [("g", a.g), ("m1", a.m1), ("m2", a.m2)]
                .iter()
                .filter(|(_, v)| v.is_none())
                .map(|(n, _)| *n)
                .collect();
            Err(CliError::field(
                &missing.join("/"),
                "missing; --g, --m1 and --m2 go together",
            ))
        }
    }
}

pub fn resolve(a: &SourceArgs) -> CliResult<Source> {
    let fam = family_from(a)?;
    if let Some(path) = &a.roots {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::field("roots", format!("{}: {e}", path.display())))?;
        let rs = roots_file::parse_root_system::<f64>(&text, a.raw)
            .map_err(|e| CliError::field("roots", e))?;
        return Ok(Source::Roots { rs, fam });
    }
    if let Some(name) = &a.entry {
        let e = catalog::find(name)
            .ok_or_else(|| CliError::field("entry", format!("no catalog entry named `{name}`")))?;
        return Ok(match e.config {
            CatalogConfig::Rank2(cfg) => Source::Family {
                fam: *cfg.family(),
                theta0: Some(cfg.theta0()),
            },
            CatalogConfig::General(rs) => Source::Roots { rs, fam: None },
        });
    }
    match fam {
        Some(fam) => Ok(Source::Family { fam, theta0: None }),
        None => Err(CliError::field(
            "source",
            "give --g/--m1/--m2, --entry or --roots",
        )),
    }
}
