//! Text field files.
//!
//! ```text
//! wwmv <kind> 1
//! meta n=1 N=128 L=20 hbar=1 mass=1        (or: meta orders=3,4)
//! <re> <im>                                 one line per sample
//! ```
//!
//! Samples are written with 17 significant digits, so a write/read cycle
//! reproduces every value exactly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use nalgebra::DMatrix;

use crate::grid::{GridSpec, MomentumProfile, WaveFunction};
use crate::lca::{FiniteAbelianGroup, GroupFunction, PhaseFunctionG};
use crate::wigner::{DensityKernel, PhaseSpaceFunction};

/// Any quantity that can be stored in a field file.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Wave(WaveFunction),
    Momentum(MomentumProfile),
    /// Stored row-major, `K[q, q′]`.
    Kernel(DensityKernel),
    Phase(PhaseSpaceFunction),
    Group(GroupFunction),
    PhaseG(PhaseFunctionG),
}

impl Field {
    pub fn kind(&self) -> &'static str {
        match self {
            Field::Wave(_) => "wavefunction",
            Field::Momentum(_) => "momentum",
            Field::Kernel(_) => "kernel",
            Field::Phase(_) => "phase2d",
            Field::Group(_) => "groupfn",
            Field::PhaseG(_) => "phaseg",
        }
    }

    fn values(&self) -> Vec<Complex64> {
        match self {
            Field::Wave(f) => f.values().to_vec(),
            Field::Momentum(f) => f.values().to_vec(),
            Field::Kernel(k) => k.values().transpose().as_slice().to_vec(),
            Field::Phase(f) => f.values().to_vec(),
            Field::Group(f) => f.values().to_vec(),
            Field::PhaseG(f) => f.values().to_vec(),
        }
    }
}

fn grid_meta(g: &GridSpec) -> String {
    format!("meta n={} N={} L={} hbar={} mass={}", g.dim(), g.points(), g.length(), g.hbar(), g.mass())
}

fn group_meta(g: &FiniteAbelianGroup) -> String {
    let orders: Vec<String> = g.orders().iter().map(|n| n.to_string()).collect();
    format!("meta orders={}", orders.join(","))
}

/// Serialize a field.
pub fn format_field(field: &Field) -> String {
    let meta = match field {
        Field::Wave(f) => grid_meta(f.grid()),
        Field::Momentum(f) => grid_meta(f.grid()),
        Field::Kernel(k) => grid_meta(k.grid()),
        Field::Phase(f) => grid_meta(f.grid()),
        Field::Group(f) => group_meta(f.group()),
        Field::PhaseG(f) => group_meta(f.group()),
    };
    let mut out = format!("wwmv {} 1\n{}\n", field.kind(), meta);
    for v in field.values() {
        writeln!(out, "{:.16e} {:.16e}", v.re, v.im).expect("writing to a String");
    }
    out
}

fn meta_value<'a>(pairs: &'a [(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    pairs
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("missing meta key `{key}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad {what}: `{s}`")))
}

/// Parse a field from text.
pub fn parse_field(text: &str) -> Result<Field> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 || h[0] != "wwmv" {
        return Err(Error::Parse(format!("bad header `{header}`")));
    }
    if h[2] != "1" {
        return Err(Error::Parse(format!("unsupported format version `{}`", h[2])));
    }
    let meta = lines.next().ok_or_else(|| Error::Parse("missing meta line".into()))?;
    let mut words = meta.split_whitespace();
    if words.next() != Some("meta") {
        return Err(Error::Parse(format!("bad meta line `{meta}`")));
    }
    let pairs: Vec<(&str, &str)> = words
        .map(|w| w.split_once('=').ok_or_else(|| Error::Parse(format!("bad meta entry `{w}`"))))
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut parts = line.split_whitespace();
        let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("sample line {} is not `<re> <im>`", i + 1)));
        };
        values.push(Complex64::new(parse_num(re, "real part")?, parse_num(im, "imaginary part")?));
    }
    let grid = || -> Result<GridSpec> {
        GridSpec::new(
            parse_num(meta_value(&pairs, "n")?, "n")?,
            parse_num(meta_value(&pairs, "N")?, "N")?,
            parse_num(meta_value(&pairs, "L")?, "L")?,
            parse_num(meta_value(&pairs, "hbar")?, "hbar")?,
            parse_num(meta_value(&pairs, "mass")?, "mass")?,
        )
    };
    let group = || -> Result<FiniteAbelianGroup> {
        let orders: Vec<usize> =
            meta_value(&pairs, "orders")?.split(',').map(|s| parse_num(s, "order")).collect::<Result<_>>()?;
        FiniteAbelianGroup::new(&orders)
    };
    match h[1] {
        "wavefunction" => Ok(Field::Wave(WaveFunction::new(grid()?, values)?)),
        "momentum" => Ok(Field::Momentum(MomentumProfile::new(grid()?, values)?)),
        "kernel" => {
            let g = grid()?;
            let m = g.len();
            if values.len() != m * m {
                return Err(Error::DimensionMismatch { expected: m * m, got: values.len() });
            }
            Ok(Field::Kernel(DensityKernel::new(g, DMatrix::from_row_slice(m, m, &values))?))
        }
        "phase2d" => Ok(Field::Phase(PhaseSpaceFunction::new(grid()?, values)?)),
        "groupfn" => Ok(Field::Group(GroupFunction::new(&group()?, values)?)),
        "phaseg" => Ok(Field::PhaseG(PhaseFunctionG::new(&group()?, values)?)),
        other => Err(Error::Parse(format!("unknown field kind `{other}`"))),
    }
}

pub fn write_field(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    std::fs::write(path, format_field(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    parse_field(&std::fs::read_to_string(path)?)
}
