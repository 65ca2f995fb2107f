//! The `U(1)` central extension of phase space and convolution on it.
//!
//! Functions on the extended group are stored as Fourier series in the
//! angle, `A(φ,u) = Σ_n e^{inφ} a_n(u)`. The second half of `u` is the boost
//! coordinate `ν`, so `Γ(u₁,u₂) = ν₁·α₂ − ν₂·α₁`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::heisenberg::SymplecticForm;
use crate::wigner::PhaseSpaceFunction;

/// Element `Z{ξ; α, ν}` of the extended group, with dimensionless angle `ξ = φ/ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedElement {
    xi: f64,
    u: Vec<f64>,
}

impl ExtendedElement {
    pub fn new(xi: f64, u: Vec<f64>) -> Result<Self> {
        if u.len() % 2 != 0 || u.is_empty() {
            return Err(Error::Validation(format!("shift vector must have even length, got {}", u.len())));
        }
        if !xi.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite extended element".into()));
        }
        Ok(Self { xi: xi.rem_euclid(2.0 * PI), u })
    }

    pub fn identity(dim: usize) -> Self {
        Self { xi: 0.0, u: vec![0.0; 2 * dim] }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// `Z(φ,u)⁻¹ = Z(−φ,−u)`.
    pub fn inverse(&self) -> Self {
        Self { xi: (-self.xi).rem_euclid(2.0 * PI), u: self.u.iter().map(|v| -v).collect() }
    }
}

/// `(ξ₁ + ξ₂ + (m/2ħ) Γ(u₁,u₂) mod 2π, u₁ + u₂)`.
pub fn z_compose(e1: &ExtendedElement, e2: &ExtendedElement, mass: f64, hbar: f64) -> Result<ExtendedElement> {
    if e1.u.len() != e2.u.len() {
        return Err(Error::DimensionMismatch { expected: e1.u.len(), got: e2.u.len() });
    }
    let gamma = SymplecticForm::new(e1.u.len() / 2).eval(&e1.u, &e2.u)?;
    let u = e1.u.iter().zip(&e2.u).map(|(a, b)| a + b).collect();
    ExtendedElement::new(e1.xi + e2.xi + mass / (2.0 * hbar) * gamma, u)
}

/// Function on the extended group, held as its nonzero angular sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedFunction {
    grid: GridSpec,
    sectors: BTreeMap<i64, PhaseSpaceFunction>,
}

impl ExtendedFunction {
    pub fn new(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), sectors: BTreeMap::new() }
    }

    /// Add `e^{inφ} a(u)` to the series.
    pub fn with_sector(mut self, n: i64, a: PhaseSpaceFunction) -> Result<Self> {
        if a.grid() != &self.grid {
            return Err(Error::GridMismatch("sector lives on a different grid".into()));
        }
        let next = match self.sectors.remove(&n) {
            Some(prev) => prev.add(&a)?,
            None => a,
        };
        self.sectors.insert(n, next);
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn sector(&self, n: i64) -> Option<&PhaseSpaceFunction> {
        self.sectors.get(&n)
    }

    pub fn sectors(&self) -> impl Iterator<Item = (i64, &PhaseSpaceFunction)> {
        self.sectors.iter().map(|(&n, a)| (n, a))
    }

    /// `A(φ, u)` at flat phase-space index `u`.
    pub fn evaluate(&self, phi: f64, u: usize) -> Complex64 {
        self.sectors.iter().map(|(&n, a)| Complex64::from_polar(1.0, n as f64 * phi) * a.values()[u]).sum()
    }
}

/// Grid index of `w − u` along one axis, for indices on a centred grid.
fn difference_index(w: usize, u: usize, n: usize) -> usize {
    (w + n + n / 2 - u) % n
}

/// `(a ∗_{n,Γ} b)(w) = ∫ e^{−in(m/2ħ)Γ(u,w)} a(u) b(w−u) du` by grid quadrature,
/// with `ħ` taken from the grid. Only `n·m` enters, as the effective twist.
pub fn twisted_convolve(
    a: &PhaseSpaceFunction,
    b: &PhaseSpaceFunction,
    n: i64,
    mass: f64,
) -> Result<PhaseSpaceFunction> {
    let grid = a.grid();
    grid.check_same(b.grid())?;
    let dim = grid.dim();
    let len = grid.len();
    let pts = grid.points();
    let shape = grid.phase_shape();
    let coords: Vec<Vec<f64>> = (0..len * len)
        .map(|i| {
            let (x, y) = (i / len, i % len);
            let mut c = grid.position_vec(x);
            c.extend(grid.momentum_vec(y));
            c
        })
        .collect();
    let idx: Vec<Vec<usize>> = (0..len * len).map(|i| crate::fft::unravel(i, &shape)).collect();
    let strides = crate::fft::strides(&shape);
    let form = SymplecticForm::new(dim);
    let twist = n as f64 * mass / (2.0 * grid.hbar());
    let weight = grid.position_weight() * grid.dp().powi(dim as i32);
    let (av, bv) = (a.values(), b.values());
    let out = (0..len * len)
        .map(|w| {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..len * len {
                if av[u] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let d: usize = (0..2 * dim).map(|k| difference_index(idx[w][k], idx[u][k], pts) * strides[k]).sum();
                let g = form.eval(&coords[u], &coords[w]).expect("matching lengths");
                acc += Complex64::from_polar(1.0, -twist * g) * av[u] * bv[d];
            }
            acc * weight
        })
        .collect();
    PhaseSpaceFunction::new(grid.clone(), out)
}

/// Convolution on the extended group. Sector `n` of the result is
/// `a_n ∗_{n,Γ} b_n`; sectors never mix.
pub fn extended_convolve(a: &ExtendedFunction, b: &ExtendedFunction, mass: f64) -> Result<ExtendedFunction> {
    a.grid.check_same(&b.grid)?;
    let mut out = ExtendedFunction::new(&a.grid);
    for (n, an) in a.sectors() {
        if let Some(bn) = b.sector(n) {
            out = out.with_sector(n, twisted_convolve(an, bn, n, mass)?)?;
        }
    }
    Ok(out)
}
