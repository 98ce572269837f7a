//! Plain-text root data:
//!
//! ```text
//! # comment
//! rank 2
//! 1  1.0 0.0
//! 1  0.0 1.0
//! ```
//!
//! A `rank k` header, then one root per line as the multiplicity followed by
//! `k` coordinates.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::root_system::RootSystemData;
use crate::scalar::Scalar;

/// Parsed file contents before any normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RootsFile<T> {
    pub rank: usize,
    pub roots: Vec<Vec<T>>,
    pub multiplicities: Vec<u32>,
}

impl<T: Scalar + FromStr> RootsFile<T> {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rank = None;
        let mut roots = Vec::new();
        let mut mults = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let Some(k) = rank else {
                let (Some("rank"), Some(v), None) = (fields.next(), fields.next(), fields.next())
                else {
                    return Err(parse_err(line_no, "expected header `rank k`"));
                };
                let k: usize = v
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad rank `{v}`")))?;
                if k == 0 {
                    return Err(parse_err(line_no, "rank must be positive"));
                }
                rank = Some(k);
                continue;
            };
            let m = fields.next().expect("line is not empty");
            let m: u32 = m
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad multiplicity `{m}`")))?;
            let coords = fields
                .map(|f| {
                    f.parse::<T>()
                        .map_err(|_| parse_err(line_no, format!("bad coordinate `{f}`")))
                })
                .collect::<Result<Vec<T>>>()?;
            if coords.len() != k {
                return Err(parse_err(
                    line_no,
                    format!("expected {k} coordinates, found {}", coords.len()),
                ));
            }
            roots.push(coords);
            mults.push(m);
        }
        let rank = rank.ok_or_else(|| parse_err(0, "missing `rank k` header"))?;
        if roots.is_empty() {
            return Err(parse_err(0, "no roots"));
        }
        Ok(Self {
            rank,
            roots,
            multiplicities: mults,
        })
    }

    /// Root system with every root normalized to unit length.
    pub fn into_root_system(self) -> Result<RootSystemData<T>> {
        RootSystemData::new(self.roots, self.multiplicities)
    }

    /// Root system taking the coordinates as given.
    pub fn into_raw_root_system(self) -> Result<RootSystemData<T>> {
        RootSystemData::from_raw_parts(self.roots, self.multiplicities)
    }
}

fn parse_err(line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        line,
        detail: detail.into(),
    }
}

/// Parses `text` into a root system; with `raw` the roots are not normalized.
pub fn parse_root_system<T: Scalar + FromStr>(text: &str, raw: bool) -> Result<RootSystemData<T>> {
    let f = RootsFile::parse(text)?;
    if raw {
        f.into_raw_root_system()
    } else {
        f.into_root_system()
    }
}

/// Writes `rs` in the same format with round-trip precision.
pub fn to_roots_text<T: Scalar + std::fmt::LowerExp>(rs: &RootSystemData<T>) -> String {
    let mut s = format!("rank {}\n", rs.rank());
    for (a, m) in rs.roots().iter().zip(rs.multiplicities()) {
        let _ = write!(s, "{m}");
        for c in a {
            let _ = write!(s, " {c:.16e}");
        }
        s.push('\n');
    }
    s
}
