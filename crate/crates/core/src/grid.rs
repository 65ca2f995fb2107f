//! Periodic position/momentum grids, wave functions and Schrödinger evolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform periodic grid on the box `[-L/2, L/2)^n`.
///
/// Position nodes are `q_j = -L/2 + j L/N`, momentum nodes `p_k = 2πħ k / L`
/// for `k` in `-N/2..N/2`, stored in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    length: f64,
    hbar: f64,
    mass: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64, hbar: f64, mass: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        if points < 2 || points % 2 != 0 {
            return Err(Error::Validation(format!("points per axis must be even and at least 2, got {points}")));
        }
        for (name, v) in [("box length", length), ("hbar", hbar), ("mass", mass)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { dim, points, length, hbar, mass })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Same grid with a different Planck constant.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(self.dim, self.points, self.length, hbar, self.mass)
    }

    pub fn dq(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * self.hbar / self.length
    }

    /// Number of position (or momentum) nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of a position sum, `Δq^n`.
    pub fn position_weight(&self) -> f64 {
        self.dq().powi(self.dim as i32)
    }

    /// Quadrature weight of a momentum sum, `(Δp / 2πħ)^n = L^-n`.
    pub fn momentum_weight(&self) -> f64 {
        (self.dp() / (2.0 * PI * self.hbar)).powi(self.dim as i32)
    }

    /// Phase-space cell weight `Δq^n Δp^n / (2πħ)^n = N^-n`.
    pub fn phase_weight(&self) -> f64 {
        self.position_weight() * self.momentum_weight()
    }

    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dq()
    }

    pub fn momentum(&self, k: usize) -> f64 {
        (k as f64 - (self.points / 2) as f64) * self.dp()
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.points; self.dim]
    }

    pub fn phase_shape(&self) -> Vec<usize> {
        vec![self.points; 2 * self.dim]
    }

    /// Per-axis node indices of a flat (row-major) index.
    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        fft::unravel(flat, &self.shape())
    }

    pub fn position_vec(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).into_iter().map(|j| self.position(j)).collect()
    }

    pub fn momentum_vec(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).into_iter().map(|k| self.momentum(k)).collect()
    }

    /// Wrap a coordinate difference into `[-L/2, L/2)`.
    pub fn min_image(&self, d: f64) -> f64 {
        d - self.length * (d / self.length + 0.5).floor()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

fn check_values(values: &[Complex64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: values.len() });
    }
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Validation("non-finite sample".into()));
    }
    Ok(())
}

/// Samples of ψ on the position grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        check_values(&values, grid.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position_vec(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.position_weight()
    }

    /// Rescale to unit norm.
    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.norm_sqr().sqrt();
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// L2 distance with the position measure.
    pub fn distance(&self, other: &WaveFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
            * self.grid.position_weight().sqrt()
    }
}

/// Samples of ψ̂ on the momentum grid, row-major, increasing momentum per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumProfile {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl MomentumProfile {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        check_values(&values, grid.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.momentum_vec(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.momentum_weight()
    }
}

// Moves bin `k` (monotone order) to DFT slot `(k - N/2) mod N` on every axis,
// multiplying by (-1)^(k - N/2). Self-inverse.
fn reorder_signed(data: &[Complex64], grid: &GridSpec) -> Vec<Complex64> {
    let n = grid.points();
    let half = n / 2;
    let shape = grid.shape();
    let st = fft::strides(&shape);
    let mut out = vec![ZERO; data.len()];
    for (flat, &v) in data.iter().enumerate() {
        let idx = fft::unravel(flat, &shape);
        let mut target = 0;
        let mut sign = 1.0;
        for (a, &k) in idx.iter().enumerate() {
            target += ((k + half) % n) * st[a];
            if (k + half) % 2 == 1 {
                sign = -sign;
            }
        }
        out[target] = v * sign;
    }
    out
}

/// ψ̂[p] = Σ_j ψ(q_j) exp(-(i/ħ) p·q_j) Δq^n.
pub fn to_momentum(psi: &WaveFunction) -> MomentumProfile {
    let grid = &psi.grid;
    let mut data = psi.values.clone();
    fft::transform_all(&mut data, &grid.shape(), FftDirection::Forward);
    let w = grid.position_weight();
    let values = reorder_signed(&data, grid).into_iter().map(|v| v * w).collect();
    MomentumProfile { grid: grid.clone(), values }
}

/// ψ(q) = Σ_k ψ̂[p_k] exp((i/ħ) p_k·q) Δp^n / (2πħ)^n.
pub fn to_position(phi: &MomentumProfile) -> WaveFunction {
    let grid = &phi.grid;
    let mut data = reorder_signed(&phi.values, grid);
    fft::transform_all(&mut data, &grid.shape(), FftDirection::Inverse);
    let w = grid.momentum_weight();
    let values = data.into_iter().map(|v| v * w).collect();
    WaveFunction { grid: grid.clone(), values }
}

/// ⟨ψ₁|ψ₂⟩ with the position measure.
pub fn inner(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    a.grid.check_same(&b.grid)?;
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.position_weight())
}

fn momentum_multiply(psi: &WaveFunction, f: impl Fn(&[f64]) -> Complex64) -> WaveFunction {
    let mut phi = to_momentum(psi);
    for (i, v) in phi.values.iter_mut().enumerate() {
        *v *= f(&phi.grid.momentum_vec(i));
    }
    to_position(&phi)
}

/// Exact free evolution: ψ̂ ↦ exp(-(i/ħ)(p²/2m) t) ψ̂.
pub fn free_propagate(psi: &WaveFunction, t: f64) -> WaveFunction {
    let (hbar, mass) = (psi.grid.hbar, psi.grid.mass);
    momentum_multiply(psi, |p| {
        let p2: f64 = p.iter().map(|x| x * x).sum();
        Complex64::from_polar(1.0, -p2 * t / (2.0 * mass * hbar))
    })
}

/// Strang splitting with a real potential sampled on the position grid.
pub fn split_step_evolve(psi: &WaveFunction, potential: &[Complex64], dt: f64, steps: usize) -> Result<WaveFunction> {
    if potential.len() != psi.grid.len() {
        return Err(Error::DimensionMismatch { expected: psi.grid.len(), got: potential.len() });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Validation(format!("time step must be positive, got {dt}")));
    }
    let scale = potential.iter().fold(1.0_f64, |m, v| m.max(v.re.abs()));
    let max_im = potential.iter().fold(0.0_f64, |m, v| m.max(v.im.abs()));
    if max_im > 1e-12 * scale {
        return Err(Error::NonRealPotential(max_im));
    }
    let hbar = psi.grid.hbar;
    let half: Vec<Complex64> =
        potential.iter().map(|v| Complex64::from_polar(1.0, -v.re * dt / (2.0 * hbar))).collect();
    let mut cur = psi.clone();
    for _ in 0..steps {
        cur.values.iter_mut().zip(&half).for_each(|(v, h)| *v *= h);
        cur = free_propagate(&cur, dt);
        cur.values.iter_mut().zip(&half).for_each(|(v, h)| *v *= h);
    }
    Ok(cur)
}

/// P_a ψ = (ħ/i) ∂ψ/∂q_a, computed spectrally.
pub fn momentum_operator(psi: &WaveFunction, axis: usize) -> WaveFunction {
    momentum_multiply(psi, |p| Complex64::new(p[axis], 0.0))
}

/// Q_a ψ = q_a ψ.
pub fn position_operator(psi: &WaveFunction, axis: usize) -> WaveFunction {
    let grid = psi.grid.clone();
    let values = psi.values.iter().enumerate().map(|(i, v)| v * grid.position(grid.unravel(i)[axis])).collect();
    WaveFunction { grid, values }
}
