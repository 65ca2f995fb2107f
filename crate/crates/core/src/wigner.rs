//! Weyl correspondence between kernels and phase-space functions, and the
//! state-level quantities built on it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{GridSpec, WaveFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest entry modulus of a matrix.
pub trait MaxNorm {
    fn max_norm(&self) -> f64;
}

impl MaxNorm for DMatrix<Complex64> {
    fn max_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

impl MaxNorm for DMatrix<f64> {
    fn max_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Two-point kernel `K[q, q′]` of an operator on the grid.
///
/// The operator acts as `(Kψ)(q) = Σ_{q′} K[q,q′] ψ(q′) Δqⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityKernel {
    grid: GridSpec,
    values: DMatrix<Complex64>,
}

impl DensityKernel {
    pub fn new(grid: GridSpec, values: DMatrix<Complex64>) -> Result<Self> {
        let len = grid.len();
        if values.nrows() != len || values.ncols() != len {
            return Err(Error::DimensionMismatch { expected: len, got: values.nrows().max(values.ncols()) });
        }
        Ok(Self { grid, values })
    }

    /// `ψ(q) conj(ψ(q′))`.
    pub fn from_pure(psi: &WaveFunction) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.values());
        Self { grid: psi.grid().clone(), values: &v * v.adjoint() }
    }

    /// Convex combination of pure-state kernels.
    pub fn mixture(weights: &[f64], states: &[WaveFunction]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Validation("need one weight per state".into()));
        }
        let grid = states[0].grid().clone();
        let mut values = DMatrix::zeros(grid.len(), grid.len());
        for (w, s) in weights.iter().zip(states) {
            grid.check_same(s.grid())?;
            values += Self::from_pure(s).values * Complex64::new(*w, 0.0);
        }
        Ok(Self { grid, values })
    }

    /// Kernel of the identity operator, `δ/Δqⁿ` on the diagonal.
    pub fn identity(grid: &GridSpec) -> Self {
        let w = 1.0 / grid.position_weight();
        Self { grid: grid.clone(), values: DMatrix::identity(grid.len(), grid.len()) * Complex64::new(w, 0.0) }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<Complex64> {
        self.values
    }

    /// Operator matrix `K·Δqⁿ`.
    pub fn operator_matrix(&self) -> DMatrix<Complex64> {
        &self.values * Complex64::new(self.grid.position_weight(), 0.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.values.trace() * self.grid.position_weight()
    }

    /// Kernel of the operator product.
    pub fn compose(&self, other: &DensityKernel) -> Result<DensityKernel> {
        self.grid.check_same(&other.grid)?;
        let values = &self.values * &other.values * Complex64::new(self.grid.position_weight(), 0.0);
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.grid.check_same(psi.grid())?;
        let v = nalgebra::DVector::from_column_slice(psi.values());
        let out = &self.values * v * Complex64::new(self.grid.position_weight(), 0.0);
        WaveFunction::new(self.grid.clone(), out.as_slice().to_vec())
    }

    pub fn adjoint(&self) -> Self {
        Self { grid: self.grid.clone(), values: self.values.adjoint() }
    }

    fn to_row_major(&self) -> Vec<Complex64> {
        let len = self.grid.len();
        let mut out = vec![ZERO; len * len];
        for a in 0..len {
            for b in 0..len {
                out[a * len + b] = self.values[(a, b)];
            }
        }
        out
    }

    fn from_row_major(grid: &GridSpec, data: &[Complex64]) -> Self {
        let len = grid.len();
        Self { grid: grid.clone(), values: DMatrix::from_row_slice(len, len, data) }
    }
}

/// Samples of `A(q, p)` on the product grid; flat index `q_flat·Nⁿ + p_flat`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl PhaseSpaceFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        let expected = grid.len() * grid.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Validation("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64], &[f64]) -> Complex64) -> Self {
        let len = grid.len();
        let mut values = Vec::with_capacity(len * len);
        for a in 0..len {
            let q = grid.position_vec(a);
            for b in 0..len {
                values.push(f(&q, &grid.momentum_vec(b)));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &GridSpec, f: impl Fn(&[f64], &[f64]) -> f64) -> Self {
        Self::from_fn(grid, |q, p| Complex64::new(f(q, p), 0.0))
    }

    pub fn constant(grid: &GridSpec, c: Complex64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len() * grid.len()] }
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

    /// `(q_flat, p_flat)` of a flat sample index.
    pub fn split_index(&self, flat: usize) -> (usize, usize) {
        let len = self.grid.len();
        (flat / len, flat % len)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.re))
    }

    /// Spectral `∂A/∂q_axis`.
    pub fn d_dq(&self, axis: usize) -> Self {
        let shape = self.grid.phase_shape();
        let values = fft::derivative_axis(&self.values, &shape, axis, self.grid.length());
        Self { grid: self.grid.clone(), values }
    }

    /// Spectral `∂A/∂p_axis`.
    pub fn d_dp(&self, axis: usize) -> Self {
        let shape = self.grid.phase_shape();
        let period = self.grid.dp() * self.grid.points() as f64;
        let values = fft::derivative_axis(&self.values, &shape, self.grid.dim() + axis, period);
        Self { grid: self.grid.clone(), values }
    }
}

const ALPHA: Complex64 = Complex64::new(0.5, 0.5);

/// One axis pair of the midpoint map between `K[a, b]` and `A(j, k)`.
///
/// Even separations `s = a − b` read the kernel directly at midpoint `j`.
/// Odd separations read the band-limited interpolant of the kernel moved half
/// a node along the diagonal. The `s = −N/2` column, whose midpoint is
/// ambiguous on the torus, is mixed with its partner row `j + N/2` so the
/// map stays invertible and conjugation-symmetric.
struct Midpoint {
    n: usize,
    phase: Vec<Complex64>,
}

impl Midpoint {
    fn new(n: usize) -> Self {
        let half = (n / 2) as i64;
        let mut phase = vec![ZERO; n * n];
        for m1 in 0..n {
            for m2 in 0..n {
                let u = ((m1 + m2) % n) as i64;
                let u = if u >= half { u - n as i64 } else { u };
                phase[m1 * n + m2] = if u == -half {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, PI * u as f64 / n as f64)
                };
            }
        }
        Self { n, phase }
    }

    fn fft2(&self, data: &mut [Complex64], dir: FftDirection) {
        fft::transform_all(data, &[self.n, self.n], dir);
    }

    // (row, col) of the kernel entry feeding midpoint j at separation s.
    fn source(&self, j: usize, s: i64) -> (usize, usize) {
        let n = self.n as i64;
        let j = j as i64;
        let (a, b) = if s % 2 == 0 { (j + s / 2, j - s / 2) } else { (j + (s - 1) / 2, j - (s + 1) / 2) };
        (a.rem_euclid(n) as usize, b.rem_euclid(n) as usize)
    }

    fn forward(&self, kernel: &[Complex64], dq: f64) -> Vec<Complex64> {
        let n = self.n;
        let half = n / 2;
        let norm = 1.0 / (n * n) as f64;
        let mut shifted = kernel.to_vec();
        self.fft2(&mut shifted, FftDirection::Forward);
        shifted.iter_mut().zip(&self.phase).for_each(|(c, p)| *c *= p * norm);
        self.fft2(&mut shifted, FftDirection::Inverse);

        let mut f = vec![ZERO; n * n];
        for j in 0..n {
            for si in 0..n {
                let s = si as i64 - half as i64;
                let (a, b) = self.source(j, s);
                f[j * n + si] = if s % 2 == 0 { kernel[a * n + b] } else { shifted[a * n + b] };
            }
        }
        let col: Vec<Complex64> = (0..n).map(|j| f[j * n]).collect();
        for j in 0..n {
            f[j * n] = ALPHA * col[j] + ALPHA.conj() * col[(j + half) % n];
        }

        let mut out = vec![ZERO; n * n];
        let mut line = vec![ZERO; n];
        let plan = rustfft::FftPlanner::new().plan_fft_forward(n);
        for j in 0..n {
            for si in 0..n {
                line[(si + half) % n] = f[j * n + si];
            }
            plan.process(&mut line);
            for ki in 0..n {
                out[j * n + ki] = line[(ki + half) % n] * dq;
            }
        }
        out
    }

    fn inverse(&self, symbol: &[Complex64], dq: f64) -> Vec<Complex64> {
        let n = self.n;
        let half = n / 2;
        let mut f = vec![ZERO; n * n];
        let mut line = vec![ZERO; n];
        let plan = rustfft::FftPlanner::new().plan_fft_inverse(n);
        let scale = 1.0 / (n as f64 * dq);
        for j in 0..n {
            for ki in 0..n {
                line[(ki + half) % n] = symbol[j * n + ki];
            }
            plan.process(&mut line);
            for si in 0..n {
                f[j * n + si] = line[(si + half) % n] * scale;
            }
        }
        let col: Vec<Complex64> = (0..n).map(|j| f[j * n]).collect();
        let denom = ALPHA * ALPHA - ALPHA.conj() * ALPHA.conj();
        for j in 0..n {
            f[j * n] = (ALPHA * col[j] - ALPHA.conj() * col[(j + half) % n]) / denom;
        }

        let mut even = vec![ZERO; n * n];
        let mut odd = vec![ZERO; n * n];
        for j in 0..n {
            for si in 0..n {
                let s = si as i64 - half as i64;
                let (a, b) = self.source(j, s);
                if s % 2 == 0 {
                    even[a * n + b] = f[j * n + si];
                } else {
                    odd[a * n + b] = f[j * n + si];
                }
            }
        }
        self.fft2(&mut even, FftDirection::Forward);
        self.fft2(&mut odd, FftDirection::Forward);
        let norm = 1.0 / (n * n) as f64;
        for ((e, o), p) in even.iter_mut().zip(&odd).zip(&self.phase) {
            *e = (*e + o * p.conj()) * norm;
        }
        self.fft2(&mut even, FftDirection::Inverse);
        even
    }
}

// Applies `f` to every 2D slice spanned by axes (a, n + a), for each a.
fn for_each_axis_pair(data: &mut [Complex64], grid: &GridSpec, f: impl Fn(&[Complex64]) -> Vec<Complex64>) {
    let n = grid.points();
    let dim = grid.dim();
    let shape = grid.phase_shape();
    let st = fft::strides(&shape);
    let mut slice = vec![ZERO; n * n];
    for a in 0..dim {
        let (sx, sy) = (st[a], st[dim + a]);
        for base in 0..data.len() {
            let idx = fft::unravel(base, &shape);
            if idx[a] != 0 || idx[dim + a] != 0 {
                continue;
            }
            for x in 0..n {
                for y in 0..n {
                    slice[x * n + y] = data[base + x * sx + y * sy];
                }
            }
            let out = f(&slice);
            for x in 0..n {
                for y in 0..n {
                    data[base + x * sx + y * sy] = out[x * n + y];
                }
            }
        }
    }
}

/// Weyl symbol of a kernel: `A(q,p) = Σ_α exp(−(i/ħ)p·α) K[q+α/2, q−α/2] Δqⁿ`.
pub fn kernel_to_phase(kernel: &DensityKernel) -> PhaseSpaceFunction {
    let grid = kernel.grid();
    let map = Midpoint::new(grid.points());
    let dq = grid.dq();
    let mut data = kernel.to_row_major();
    for_each_axis_pair(&mut data, grid, |s| map.forward(s, dq));
    PhaseSpaceFunction { grid: grid.clone(), values: data }
}

/// Kernel of a Weyl symbol; exact inverse of [`kernel_to_phase`].
pub fn phase_to_kernel(symbol: &PhaseSpaceFunction) -> DensityKernel {
    let grid = symbol.grid();
    let map = Midpoint::new(grid.points());
    let dq = grid.dq();
    let mut data = symbol.values.clone();
    for_each_axis_pair(&mut data, grid, |s| map.inverse(s, dq));
    DensityKernel::from_row_major(grid, &data)
}

/// Wigner function of a pure state.
pub fn wigner_of_pure(psi: &WaveFunction) -> PhaseSpaceFunction {
    kernel_to_phase(&DensityKernel::from_pure(psi))
}

/// Action of the operator with symbol `A` on `ψ`.
pub fn apply_operator(symbol: &PhaseSpaceFunction, psi: &WaveFunction) -> Result<WaveFunction> {
    symbol.grid.check_same(psi.grid())?;
    phase_to_kernel(symbol).apply(psi)
}

/// `Σ A dμ`.
pub fn trace(symbol: &PhaseSpaceFunction) -> Complex64 {
    symbol.values.iter().sum::<Complex64>() * symbol.grid.phase_weight()
}

/// `Σ conj(A) B dμ`.
pub fn hs_inner(a: &PhaseSpaceFunction, b: &PhaseSpaceFunction) -> Result<Complex64> {
    a.grid.check_same(&b.grid)?;
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.phase_weight())
}

/// `∫ ϱ₁ ϱ₂ dμ`; equals `|⟨ψ₁|ψ₂⟩|²` only when both arguments are pure-state
/// Wigner functions, which is not checked.
pub fn transition_probability(rho1: &PhaseSpaceFunction, rho2: &PhaseSpaceFunction) -> Result<f64> {
    Ok(hs_inner(&rho1.conj(), rho2)?.re)
}

/// `∫ ϱ A dμ`, real part.
pub fn expectation(rho: &PhaseSpaceFunction, symbol: &PhaseSpaceFunction) -> Result<f64> {
    Ok(hs_inner(&rho.conj(), symbol)?.re)
}

/// Position density `Σ_p ϱ Δpⁿ/(2πħ)ⁿ`.
pub fn marginal_position(rho: &PhaseSpaceFunction) -> Vec<f64> {
    let len = rho.grid.len();
    let w = rho.grid.momentum_weight();
    (0..len).map(|a| rho.values[a * len..(a + 1) * len].iter().map(|v| v.re).sum::<f64>() * w).collect()
}

/// Momentum density `Σ_q ϱ Δqⁿ`.
pub fn marginal_momentum(rho: &PhaseSpaceFunction) -> Vec<f64> {
    let len = rho.grid.len();
    let w = rho.grid.position_weight();
    (0..len).map(|b| (0..len).map(|a| rho.values[a * len + b].re).sum::<f64>() * w).collect()
}

/// Center and metric of a Gaussian coherent state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentParams {
    xi: Vec<f64>,
    pi: Vec<f64>,
    metric: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl CoherentParams {
    pub fn new(xi: Vec<f64>, pi: Vec<f64>, metric: DMatrix<f64>) -> Result<Self> {
        let n = xi.len();
        if pi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: pi.len() });
        }
        if metric.nrows() != n || metric.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: metric.nrows() });
        }
        if (&metric - metric.transpose()).max_norm() > 1e-12 * metric.max_norm().max(1.0) {
            return Err(Error::Validation("metric is not symmetric".into()));
        }
        let chol =
            metric.clone().cholesky().ok_or_else(|| Error::Validation("metric is not positive definite".into()))?;
        let inverse = chol.inverse();
        Ok(Self { xi, pi, metric, inverse })
    }

    /// Identity metric.
    pub fn standard(xi: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = xi.len();
        Self::new(xi, pi, DMatrix::identity(n, n))
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn inverse_metric(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.xi.len() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: self.xi.len() });
        }
        Ok(())
    }
}

fn quadratic(m: &DMatrix<f64>, d: &[f64]) -> f64 {
    let n = d.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += d[i] * m[(i, j)] * d[j];
        }
    }
    s
}

/// `E(q,p) = 2ⁿ exp(−[(q−ξ)ᵀa(q−ξ) + (p−π)ᵀa⁻¹(p−π)]/ħ)`, distances wrapped to the box.
pub fn coherent_wigner(c: &CoherentParams, grid: &GridSpec) -> Result<PhaseSpaceFunction> {
    c.check_grid(grid)?;
    let n = grid.dim();
    let hbar = grid.hbar();
    let pbox = grid.dp() * grid.points() as f64;
    let wrap_p = |d: f64| d - pbox * (d / pbox + 0.5).floor();
    let pref = 2f64.powi(n as i32);
    Ok(PhaseSpaceFunction::from_real_fn(grid, |q, p| {
        let dq: Vec<f64> = (0..n).map(|a| grid.min_image(q[a] - c.xi[a])).collect();
        let dp: Vec<f64> = (0..n).map(|a| wrap_p(p[a] - c.pi[a])).collect();
        pref * (-(quadratic(&c.metric, &dq) + quadratic(&c.inverse, &dp)) / hbar).exp()
    }))
}

/// Normalized coherent state
/// `ψ(q) = (det a)^{1/4} (πħ)^{−n/4} exp(−(q−ξ)ᵀa(q−ξ)/2ħ + (i/ħ)π·q)`.
pub fn coherent_state(c: &CoherentParams, grid: &GridSpec) -> Result<WaveFunction> {
    c.check_grid(grid)?;
    let n = grid.dim();
    let hbar = grid.hbar();
    let pref = c.metric.determinant().powf(0.25) * (PI * hbar).powf(-(n as f64) / 4.0);
    Ok(WaveFunction::from_fn(grid, |q| {
        let d: Vec<f64> = (0..n).map(|a| grid.min_image(q[a] - c.xi[a])).collect();
        let phase: f64 = q.iter().zip(&c.pi).map(|(x, p)| x * p).sum::<f64>() / hbar;
        Complex64::from_polar(pref * (-quadratic(&c.metric, &d) / (2.0 * hbar)).exp(), phase)
    }))
}

/// Husimi function `ϱ̃(z) = Σ_ζ E_z(ζ) ϱ(ζ) dμ` with standard coherent states.
pub fn husimi(rho: &PhaseSpaceFunction) -> PhaseSpaceFunction {
    let grid = &rho.grid;
    let n = grid.points();
    let dim = grid.dim();
    let shape = grid.phase_shape();
    let hbar = grid.hbar();
    let pref = 2f64.powi(dim as i32);
    let mut kernel: Vec<Complex64> = (0..rho.values.len())
        .map(|flat| {
            let idx = fft::unravel(flat, &shape);
            let mut r2 = 0.0;
            for (ax, &i) in idx.iter().enumerate() {
                let step = if ax < dim { grid.dq() } else { grid.dp() };
                let d = fft::signed(i, n) as f64 * step;
                r2 += d * d;
            }
            Complex64::new(pref * (-r2 / hbar).exp(), 0.0)
        })
        .collect();
    let mut data = rho.values.clone();
    fft::transform_all(&mut kernel, &shape, FftDirection::Forward);
    fft::transform_all(&mut data, &shape, FftDirection::Forward);
    let scale = grid.phase_weight() / data.len() as f64;
    data.iter_mut().zip(&kernel).for_each(|(d, k)| *d *= k * scale);
    fft::transform_all(&mut data, &shape, FftDirection::Inverse);
    PhaseSpaceFunction { grid: grid.clone(), values: data }
}

/// Von Neumann entropy `−Σ λ ln λ` of the spectrum of `K·Δqⁿ`.
pub fn entropy(kernel: &DensityKernel) -> Result<f64> {
    let m = kernel.operator_matrix();
    let herm = (&m - m.adjoint()).max_norm();
    if herm > 1e-8 {
        return Err(Error::NotDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = m.trace();
    if (tr - 1.0).norm() > 1e-8 {
        return Err(Error::NotDensityMatrix(format!("trace is {tr}")));
    }
    let hermitian = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hermitian);
    let mut s = 0.0;
    for &l in eig.eigenvalues.iter() {
        if l < -1e-8 {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {l:e}")));
        }
        if l > 1e-14 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

fn node_index(x: f64, grid: &GridSpec) -> Result<usize> {
    let t = (x + 0.5 * grid.length()) / grid.dq();
    let r = t.round();
    if (t - r).abs() > 1e-9 || !t.is_finite() {
        return Err(Error::IncommensurateShift(format!("{x} is not a grid node")));
    }
    Ok((r as i64).rem_euclid(grid.points() as i64) as usize)
}

/// Phase-space symbol of `|q₁⟩⟨q₂|`: `δ(q − (q₁+q₂)/2) exp((i/ħ) p·(q₂ − q₁))`,
/// with the delta a Kronecker spike of weight `1/Δqⁿ`.
///
/// The midpoint must be a grid node and unambiguous on the torus, so the
/// separation must be an even number of steps below `N/2` per axis.
pub fn basis_distribution_q(q1: &[f64], q2: &[f64], grid: &GridSpec) -> Result<PhaseSpaceFunction> {
    let dim = grid.dim();
    for v in [q1, q2] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
    }
    let n = grid.points() as i64;
    let mut mid = Vec::with_capacity(dim);
    let mut sep = Vec::with_capacity(dim);
    for a in 0..dim {
        let i1 = node_index(q1[a], grid)? as i64;
        let i2 = node_index(q2[a], grid)? as i64;
        let s = (i1 - i2 + n / 2).rem_euclid(n) - n / 2;
        if s % 2 != 0 || s == -n / 2 {
            return Err(Error::IncommensurateShift(format!(
                "midpoint of {} and {} is not a unique grid node",
                q1[a], q2[a]
            )));
        }
        mid.push((i1 - s / 2).rem_euclid(n) as usize);
        sep.push(-s as f64 * grid.dq());
    }
    let st = fft::strides(&grid.shape());
    let mid_flat: usize = mid.iter().zip(&st).map(|(i, s)| i * s).sum();
    let len = grid.len();
    let w = 1.0 / grid.position_weight();
    let hbar = grid.hbar();
    let mut values = vec![ZERO; len * len];
    for b in 0..len {
        let p = grid.momentum_vec(b);
        let phase: f64 = p.iter().zip(&sep).map(|(x, y)| x * y).sum::<f64>() / hbar;
        values[mid_flat * len + b] = Complex64::from_polar(w, phase);
    }
    Ok(PhaseSpaceFunction { grid: grid.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_kernel(g: &GridSpec, seed: u64) -> DensityKernel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let len = g.len();
        let m = DMatrix::from_fn(len, len, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        DensityKernel::new(g.clone(), m).unwrap()
    }

    fn oscillator(g: &GridSpec, level: usize) -> WaveFunction {
        let h = g.hbar();
        WaveFunction::from_fn(g, |q| {
            let x = q[0] / h.sqrt();
            let hermite = if level == 0 { 1.0 } else { 2.0 * x };
            Complex64::new(hermite * (-x * x / 2.0).exp(), 0.0)
        })
        .normalized()
    }

    #[test]
    fn identity_kernel_has_unit_symbol() {
        for (dim, n) in [(1, 16), (2, 8)] {
            let g = GridSpec::new(dim, n, 5.0, 0.9, 1.0).unwrap();
            let a = kernel_to_phase(&DensityKernel::identity(&g));
            assert!(a.max_abs_diff(&PhaseSpaceFunction::constant(&g, Complex64::new(1.0, 0.0))) < 1e-12);
            let back = phase_to_kernel(&PhaseSpaceFunction::constant(&g, Complex64::new(1.0, 0.0)));
            assert!((back.values() - DensityKernel::identity(&g).values()).max_norm() < 1e-10);
        }
    }

    #[test]
    fn position_kernel_has_symbol_q() {
        let g = GridSpec::new(1, 32, 6.0, 1.0, 1.0).unwrap();
        let len = g.len();
        let m =
            DMatrix::from_fn(len, len, |a, b| if a == b { Complex64::new(g.position(a) / g.dq(), 0.0) } else { ZERO });
        let a = kernel_to_phase(&DensityKernel::new(g.clone(), m).unwrap());
        let q = PhaseSpaceFunction::from_real_fn(&g, |q, _| q[0]);
        assert!(a.max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn momentum_symbol_is_spectral_derivative() {
        let g = GridSpec::new(1, 32, 6.0, 0.7, 1.0).unwrap();
        let psi = WaveFunction::from_fn(&g, |q| Complex64::new((-(q[0] - 0.3).powi(2)).exp(), 0.2 * q[0]));
        let p = PhaseSpaceFunction::from_real_fn(&g, |_, p| p[0]);
        let out = apply_operator(&p, &psi).unwrap();
        assert!(out.distance(&grid::momentum_operator(&psi, 0)) < 1e-10);
        let q = PhaseSpaceFunction::from_real_fn(&g, |q, _| q[0]);
        let out = apply_operator(&q, &psi).unwrap();
        assert!(out.distance(&grid::position_operator(&psi, 0)) < 1e-10);
        let one = PhaseSpaceFunction::constant(&g, Complex64::new(1.0, 0.0));
        assert!(apply_operator(&one, &psi).unwrap().distance(&psi) < 1e-12);
    }

    #[test]
    fn hamiltonian_symbol_matches_spectral_hamiltonian() {
        let g = GridSpec::new(1, 64, 16.0, 1.0, 2.0).unwrap();
        let psi = oscillator(&g, 1);
        let h = PhaseSpaceFunction::from_real_fn(&g, |q, p| p[0] * p[0] / 4.0 + 0.3 * q[0] * q[0]);
        let out = apply_operator(&h, &psi).unwrap();
        let p = grid::momentum_operator(&grid::momentum_operator(&psi, 0), 0);
        let expected: Vec<Complex64> = p
            .values()
            .iter()
            .zip(psi.values())
            .enumerate()
            .map(|(j, (pp, v))| pp / 4.0 + 0.3 * g.position(j).powi(2) * v)
            .collect();
        let expected = WaveFunction::new(g, expected).unwrap();
        assert!(out.distance(&expected) < 1e-8);
    }

    #[test]
    fn ground_state_wigner_is_standard_gaussian() {
        let g = GridSpec::new(1, 128, 20.0, 0.8, 1.0).unwrap();
        let rho = wigner_of_pure(&oscillator(&g, 0));
        let e = coherent_wigner(&CoherentParams::standard(vec![0.0], vec![0.0]).unwrap(), &g).unwrap();
        assert!(rho.max_abs_diff(&e) < 1e-10, "{}", rho.max_abs_diff(&e));
        assert!((trace(&rho) - 1.0).norm() < 1e-10);
        assert!((trace(&e) - 1.0).norm() < 1e-10);
        assert!(e.min_real() > 0.0);
    }

    #[test]
    fn excited_state_is_negative_but_husimi_is_not() {
        let g = GridSpec::new(1, 64, 16.0, 1.0, 1.0).unwrap();
        let rho = wigner_of_pure(&oscillator(&g, 1));
        assert!(rho.min_real() < -0.5);
        let h = husimi(&rho);
        assert!(h.min_real() >= -1e-12);
        assert!(h.max_imag() < 1e-12);
    }

    #[test]
    fn husimi_of_ground_state_doubles_covariance() {
        let g = GridSpec::new(1, 64, 16.0, 1.0, 1.0).unwrap();
        let e = coherent_wigner(&CoherentParams::standard(vec![0.0], vec![0.0]).unwrap(), &g).unwrap();
        let h = husimi(&e);
        // Convolving two Gaussians of variance ħ/2 with the weight 2 exp(-r²/ħ) dμ.
        let expected = PhaseSpaceFunction::from_real_fn(&g, |q, p| (-(q[0] * q[0] + p[0] * p[0]) / 2.0).exp());
        assert!(h.max_abs_diff(&expected) < 1e-10);
        // bad marginals: momentum marginal of the Husimi function is blurred
        let m_h = marginal_momentum(&h);
        let m_w = marginal_momentum(&e);
        let diff = m_h.iter().zip(&m_w).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff > 1e-2);
    }

    #[test]
    fn marginals_reproduce_densities() {
        let g = GridSpec::new(1, 64, 16.0, 1.0, 1.0).unwrap();
        let psi = WaveFunction::from_fn(&g, |q| {
            Complex64::from_polar(
                (-(q[0] - 1.0).powi(2)).exp() + 0.5 * (-(q[0] + 2.0).powi(2)).exp(),
                q[0] * q[0] * 0.2,
            )
        })
        .normalized();
        let rho = wigner_of_pure(&psi);
        assert!(rho.max_imag() < 1e-12);
        let mq = marginal_position(&rho);
        for (j, v) in psi.values().iter().enumerate() {
            assert!((mq[j] - v.norm_sqr()).abs() < 1e-12);
        }
        let mp = marginal_momentum(&rho);
        let phi = grid::to_momentum(&psi);
        for (k, v) in phi.values().iter().enumerate() {
            assert!((mp[k] - v.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_probabilities() {
        let g = GridSpec::new(1, 64, 16.0, 1.0, 1.0).unwrap();
        let r0 = wigner_of_pure(&oscillator(&g, 0));
        let r1 = wigner_of_pure(&oscillator(&g, 1));
        assert!((transition_probability(&r0, &r0).unwrap() - 1.0).abs() < 1e-10);
        assert!(transition_probability(&r0, &r1).unwrap().abs() < 1e-8);
        let (x1, p1, x2, p2) = (0.5, -1.0, -0.75, 0.5);
        let c1 = CoherentParams::standard(vec![x1], vec![p1 * g.dp()]).unwrap();
        let c2 = CoherentParams::standard(vec![x2], vec![p2 * g.dp()]).unwrap();
        let e1 = coherent_wigner(&c1, &g).unwrap();
        let e2 = coherent_wigner(&c2, &g).unwrap();
        let d2 = (x1 - x2).powi(2) + ((p1 - p2) * g.dp()).powi(2);
        assert!((transition_probability(&e1, &e2).unwrap() - (-d2 / 2.0).exp()).abs() < 1e-8);
        let ov = grid::inner(&coherent_state(&c1, &g).unwrap(), &coherent_state(&c2, &g).unwrap()).unwrap();
        assert!((ov.norm_sqr() - (-d2 / 2.0).exp()).abs() < 1e-8);
    }

    #[test]
    fn coherent_expectations() {
        let g = GridSpec::new(2, 32, 14.0, 0.9, 1.0).unwrap();
        let metric = DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.8]);
        let c = CoherentParams::new(vec![0.4, -0.6], vec![0.5, 0.25], metric).unwrap();
        let e = coherent_wigner(&c, &g).unwrap();
        assert!((trace(&e) - 1.0).norm() < 1e-10);
        let one = PhaseSpaceFunction::constant(&g, Complex64::new(1.0, 0.0));
        assert!((expectation(&e, &one).unwrap() - 1.0).abs() < 1e-10);
        let q0 = PhaseSpaceFunction::from_real_fn(&g, |q, _| q[0]);
        assert!((expectation(&e, &q0).unwrap() - 0.4).abs() < 1e-8);
        let p1 = PhaseSpaceFunction::from_real_fn(&g, |_, p| p[1] * p[1]);
        let var = 0.5 * g.hbar() * c.metric()[(1, 1)];
        assert!((expectation(&e, &p1).unwrap() - (0.25f64.powi(2) + var)).abs() < 1e-8);
        let psi = coherent_state(&c, &g).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        // cross-check against the operator expectation
        let qpsi = apply_operator(&q0, &psi).unwrap();
        assert!((grid::inner(&psi, &qpsi).unwrap().re - 0.4).abs() < 1e-8);
    }

    #[test]
    fn coherent_state_wigner_matches_closed_form() {
        let g = GridSpec::new(1, 128, 20.0, 0.8, 1.0).unwrap();
        let c = CoherentParams::new(vec![0.7], vec![-0.45], DMatrix::from_element(1, 1, 1.3)).unwrap();
        let e = coherent_wigner(&c, &g).unwrap();
        let psi = coherent_state(&c, &g).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(wigner_of_pure(&psi).max_abs_diff(&e) < 1e-10);
    }

    #[test]
    fn coherent_params_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CoherentParams::new(vec![0.0; 2], vec![0.0; 2], bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(CoherentParams::new(vec![0.0; 2], vec![0.0; 2], asym).is_err());
        let c = CoherentParams::new(vec![0.0; 2], vec![0.0; 2], DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]))
            .unwrap();
        assert!((c.metric() * c.inverse_metric() - DMatrix::<f64>::identity(2, 2)).max_norm() < 1e-14);
    }

    #[test]
    fn entropy_values() {
        let g = GridSpec::new(1, 32, 12.0, 1.0, 1.0).unwrap();
        let s0 = oscillator(&g, 0);
        let s1 = oscillator(&g, 1);
        assert!(entropy(&DensityKernel::from_pure(&s0)).unwrap().abs() < 1e-8);
        let half = DensityKernel::mixture(&[0.5, 0.5], &[s0.clone(), s1.clone()]).unwrap();
        assert!((entropy(&half).unwrap() - 2f64.ln()).abs() < 1e-8);
        let k = DensityKernel::mixture(&[0.75, 0.25], &[s0.clone(), s1.clone()]).unwrap();
        let expected = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert!((entropy(&k).unwrap() - expected).abs() < 1e-8);
        let bad = DensityKernel::mixture(&[0.5, 0.6], &[s0.clone(), s1.clone()]).unwrap();
        assert!(matches!(entropy(&bad), Err(Error::NotDensityMatrix(_))));
        let neg = DensityKernel::mixture(&[1.5, -0.5], &[s0, s1]).unwrap();
        assert!(matches!(entropy(&neg), Err(Error::NotDensityMatrix(_))));
    }

    #[test]
    fn basis_distribution_matches_kernel() {
        let g = GridSpec::new(1, 16, 8.0, 1.0, 1.0).unwrap();
        let (i1, i2) = (9usize, 3usize);
        let q1 = [g.position(i1)];
        let q2 = [g.position(i2)];
        let rho = basis_distribution_q(&q1, &q2, &g).unwrap();
        let w = 1.0 / (g.dq() * g.dq());
        let m = DMatrix::from_fn(16, 16, |a, b| if (a, b) == (i1, i2) { Complex64::new(w, 0.0) } else { ZERO });
        let via_kernel = kernel_to_phase(&DensityKernel::new(g.clone(), m).unwrap());
        assert!(rho.max_abs_diff(&via_kernel) < 1e-10 * rho.max_abs());
        let swapped = basis_distribution_q(&q2, &q1, &g).unwrap();
        assert!(rho.max_abs_diff(&swapped.conj()) < 1e-12);
        let diag = basis_distribution_q(&q1, &q1, &g).unwrap();
        for (f, v) in diag.values().iter().enumerate() {
            let (a, _) = diag.split_index(f);
            let expected = if a == i1 { 1.0 / g.dq() } else { 0.0 };
            assert!((v - expected).norm() < 1e-12);
        }
        assert!(basis_distribution_q(&q1, &[g.position(4)], &g).is_err());
        assert!(basis_distribution_q(&[0.1], &q1, &g).is_err());
    }

    #[test]
    fn odd_half_length_grids_are_conjugation_symmetric() {
        for n in [2usize, 6, 10] {
            let g = GridSpec::new(1, n, 3.0, 1.0, 1.0).unwrap();
            let k = random_kernel(&g, n as u64);
            let h = DensityKernel::new(g.clone(), k.values() + k.values().adjoint()).unwrap();
            assert!(kernel_to_phase(&h).max_imag() < 1e-12, "n={n}");
            let back = phase_to_kernel(&kernel_to_phase(&k));
            assert!((back.values() - k.values()).max_norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn weyl_map_round_trip_and_hermiticity(seed in 0u64..10_000, dim in 1usize..3) {
            let n = if dim == 1 { 16 } else { 6 };
            let g = GridSpec::new(dim, n, 4.0, 0.6, 1.0).unwrap();
            let k = random_kernel(&g, seed);
            let a = kernel_to_phase(&k);
            let back = phase_to_kernel(&a);
            prop_assert!((back.values() - k.values()).max_norm() < 1e-12);
            let h = DensityKernel::new(g.clone(), k.values() + k.values().adjoint()).unwrap();
            let ah = kernel_to_phase(&h);
            prop_assert!(ah.max_imag() < 1e-12);
            let rb = phase_to_kernel(&ah.map(|v| Complex64::new(v.re, 0.0)));
            prop_assert!((rb.values() - rb.values().adjoint()).max_norm() < 1e-12);
            // trace and Hilbert-Schmidt pairing agree with kernel-level values
            prop_assert!((trace(&a) - k.trace()).norm() < 1e-10);
            let k2 = random_kernel(&g, seed + 7);
            let hs = hs_inner(&a, &kernel_to_phase(&k2)).unwrap();
            let kernel_hs = (k.adjoint().compose(&k2).unwrap()).trace();
            prop_assert!((hs - kernel_hs).norm() < 1e-10 * (1.0 + hs.norm()));
            prop_assert!((hs - hs_inner(&kernel_to_phase(&k2), &a).unwrap().conj()).norm() < 1e-10 * (1.0 + hs.norm()));
        }

        #[test]
        fn translation_covariance(seed in 0u64..10_000, shift in 0usize..16, boost in 0usize..16) {
            let g = GridSpec::new(1, 16, 4.0, 0.6, 1.0).unwrap();
            let k = random_kernel(&g, seed);
            let a = kernel_to_phase(&k);
            let shifted = DensityKernel::new(g.clone(), DMatrix::from_fn(16, 16, |x, y| {
                k.values()[((x + 16 - shift) % 16, (y + 16 - shift) % 16)]
            })).unwrap();
            let sa = kernel_to_phase(&shifted);
            for f in 0..256 {
                let (j, kk) = (f / 16, f % 16);
                prop_assert!((sa.values()[f] - a.values()[((j + 16 - shift) % 16) * 16 + kk]).norm() < 1e-12);
            }
            // a momentum shift of the symbol multiplies the kernel by a plane wave
            let moved = PhaseSpaceFunction::new(g.clone(), (0..256).map(|f| {
                let (j, kk) = (f / 16, f % 16);
                a.values()[j * 16 + (kk + 16 - boost) % 16]
            }).collect()).unwrap();
            let mk = phase_to_kernel(&moved);
            let pi = boost as f64 * g.dp();
            for x in 0..16 {
                for y in 0..16 {
                    let ph = Complex64::from_polar(1.0, pi * (g.position(x) - g.position(y)) / g.hbar());
                    prop_assert!((mk.values()[(x, y)] - k.values()[(x, y)] * ph).norm() < 1e-11);
                }
            }
        }

        #[test]
        fn purity_bound_and_positivity(seed in 0u64..10_000) {
            let g = GridSpec::new(1, 16, 5.0, 1.0, 1.0).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let states: Vec<WaveFunction> = (0..3).map(|_| {
                WaveFunction::new(g.clone(), (0..16).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).unwrap().normalized()
            }).collect();
            let w: Vec<f64> = { let r: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect(); let s: f64 = r.iter().sum(); r.iter().map(|x| x / s).collect() };
            let rho = kernel_to_phase(&DensityKernel::mixture(&w, &states).unwrap());
            let purity = hs_inner(&rho, &rho).unwrap().re;
            prop_assert!(purity <= 1.0 + 1e-10);
            let pure = wigner_of_pure(&states[0]);
            prop_assert!((hs_inner(&pure, &pure).unwrap().re - 1.0).abs() < 1e-10);
        }
    }
}
