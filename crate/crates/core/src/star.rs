//! Moyal star product, brackets, semiclassical expansion and von Neumann dynamics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::convergence::fit_order;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::GridSpec;
use crate::wigner::{kernel_to_phase, phase_to_kernel, DensityKernel, PhaseSpaceFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// Band-limited interpolation of a phase-space array onto the lattice refined
// by two along every axis. Nyquist coefficients are split symmetrically.
fn refine(a: &PhaseSpaceFunction) -> Vec<Complex64> {
    let grid = a.grid();
    let n = grid.points();
    let m = 2 * n;
    let axes = 2 * grid.dim();
    let coarse = grid.phase_shape();
    let fine = vec![m; axes];
    let fine_st = fft::strides(&fine);
    let mut c = a.values().to_vec();
    fft::transform_all(&mut c, &coarse, FftDirection::Forward);
    let mut out = vec![ZERO; m.pow(axes as u32)];
    for (flat, &v) in c.iter().enumerate() {
        let idx = fft::unravel(flat, &coarse);
        let mut targets = vec![(0usize, v)];
        for (ax, &i) in idx.iter().enumerate() {
            let f = fft::signed(i, n);
            let mut next = Vec::with_capacity(targets.len() * 2);
            for &(t, w) in &targets {
                if f == -(n as i64) / 2 {
                    next.push((t + (m - n / 2) * fine_st[ax], w * 0.5));
                    next.push((t + (n / 2) * fine_st[ax], w * 0.5));
                } else {
                    next.push((t + f.rem_euclid(m as i64) as usize * fine_st[ax], w));
                }
            }
            targets = next;
        }
        for (t, w) in targets {
            out[t] += w;
        }
    }
    fft::transform_all(&mut out, &fine, FftDirection::Inverse);
    let scale = 1.0 / (n as f64).powi(axes as i32);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

// Transform along the momentum axes of a refined array with the signed
// momentum index: Σ_t exp(∓2πi (t − N)·d / M) X(t).
fn momentum_transform(data: &mut [Complex64], dim: usize, m: usize, dir: FftDirection) {
    let shape = vec![m; 2 * dim];
    for ax in dim..2 * dim {
        fft::transform_axis(data, &shape, ax, dir);
    }
    for (flat, v) in data.iter_mut().enumerate() {
        let idx = fft::unravel(flat, &shape);
        let parity: usize = idx[dim..].iter().sum();
        if parity % 2 == 1 {
            *v = -*v;
        }
    }
}

/// Star product by direct quadrature of the Moyal integral
///
/// `(A⋆B)(z) = (2/2πħ)^{2n} ∫∫ A(z′) B(z″) exp((2i/ħ)[(p″−p)(q′−q) − (p′−p)(q″−q)]) dz′ dz″`,
/// summed on the lattice refined by two per axis, where the exponential kernel
/// is non-degenerate, with `A` and `B` band-limited interpolants.
///
/// Cost grows like `N^{2n}·(2N)^{2n}`: intended as a reference on small grids.
pub fn star_bruteforce(a: &PhaseSpaceFunction, b: &PhaseSpaceFunction) -> Result<PhaseSpaceFunction> {
    a.grid().check_same(b.grid())?;
    let grid = a.grid();
    let dim = grid.dim();
    let n = grid.points();
    let m = 2 * n;
    let mq = m.pow(dim as u32);
    let hbar = grid.hbar();

    let mut ah = refine(a);
    let mut bc = refine(b);
    momentum_transform(&mut ah, dim, m, FftDirection::Forward);
    momentum_transform(&mut bc, dim, m, FftDirection::Inverse);

    let fine_q = vec![m; dim];
    let fq_st = fft::strides(&fine_q);
    let (dq, dp) = (0.5 * grid.dq(), 0.5 * grid.dp());
    let pref = (2.0 / (2.0 * PI * hbar) * dq * dp).powi(2 * dim as i32);
    let roots: Vec<Complex64> = (0..m).map(|t| Complex64::from_polar(1.0, 2.0 * PI * t as f64 / m as f64)).collect();

    // Offsets u (flat over M^n) as per-axis digits.
    let digits: Vec<Vec<usize>> = (0..mq).map(|u| fft::unravel(u, &fine_q)).collect();
    let len = grid.len();
    let coarse_q = grid.shape();
    let mut values = vec![ZERO; len * len];
    let mut shifted = vec![0usize; mq];
    for jq in 0..len {
        let base: Vec<usize> = fft::unravel(jq, &coarse_q).iter().map(|j| 2 * j).collect();
        for (u, d) in digits.iter().enumerate() {
            shifted[u] = d.iter().zip(&base).zip(&fq_st).map(|((x, y), s)| ((x + y) % m) * s).sum();
        }
        for kp in 0..len {
            let tp: Vec<i64> = fft::unravel(kp, &coarse_q).iter().map(|&k| 2 * (k as i64 - (n / 2) as i64)).collect();
            let wave: Vec<Complex64> = digits
                .iter()
                .map(|d| {
                    let e: i64 = d.iter().zip(&tp).map(|(x, t)| *x as i64 * t).sum();
                    roots[e.rem_euclid(m as i64) as usize]
                })
                .collect();
            let mut acc = ZERO;
            for u in 0..mq {
                let row_a = shifted[u] * mq;
                let mut inner = ZERO;
                for v in 0..mq {
                    inner += wave[v] * ah[row_a + v] * bc[shifted[v] * mq + u];
                }
                acc += inner * wave[u].conj();
            }
            values[jq * len + kp] = acc * pref;
        }
    }
    PhaseSpaceFunction::new(grid.clone(), values)
}

/// Star product through kernel composition.
pub fn star(a: &PhaseSpaceFunction, b: &PhaseSpaceFunction) -> Result<PhaseSpaceFunction> {
    a.grid().check_same(b.grid())?;
    Ok(kernel_to_phase(&phase_to_kernel(a).compose(&phase_to_kernel(b))?))
}

/// `(1/iħ)(A⋆B − B⋆A)`.
pub fn moyal_bracket(a: &PhaseSpaceFunction, b: &PhaseSpaceFunction) -> Result<PhaseSpaceFunction> {
    let ka = phase_to_kernel(a);
    let kb = phase_to_kernel(b);
    let hbar = a.grid().hbar();
    let ab = ka.compose(&kb)?;
    let ba = kb.compose(&ka)?;
    let diff = (ab.values() - ba.values()) / Complex64::new(0.0, hbar);
    Ok(kernel_to_phase(&DensityKernel::new(a.grid().clone(), diff)?))
}

/// Classical bracket `Σ(∂A/∂q ∂B/∂p − ∂A/∂p ∂B/∂q)`, so that `{q, p} = 1`.
pub fn poisson_bracket(a: &PhaseSpaceFunction, b: &PhaseSpaceFunction) -> Result<PhaseSpaceFunction> {
    a.grid().check_same(b.grid())?;
    let mut out = PhaseSpaceFunction::constant(a.grid(), ZERO);
    for ax in 0..a.grid().dim() {
        let t1 = a.d_dq(ax).mul(&b.d_dp(ax))?;
        let t2 = a.d_dp(ax).mul(&b.d_dq(ax))?;
        out = out.add(&t1.sub(&t2)?)?;
    }
    Ok(out)
}

/// Residuals of the small-ħ expansion of the star product, one entry per ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiclassicalReport {
    pub hbars: Vec<f64>,
    /// `‖A⋆B − AB‖∞`
    pub r0: Vec<f64>,
    /// `‖A⋆B − AB − (iħ/2){A,B}‖∞`
    pub r1: Vec<f64>,
    /// `‖{A,B}_quant − {A,B}‖∞`
    pub r2: Vec<f64>,
    pub order_r0: f64,
    pub order_r1: f64,
    pub order_r2: f64,
}

/// Samples the ħ-independent symbols `a` and `b` on `base` with each ħ in turn
/// and measures the expansion residuals.
pub fn semiclassical_check(
    a: impl Fn(&[f64], &[f64]) -> Complex64,
    b: impl Fn(&[f64], &[f64]) -> Complex64,
    base: &GridSpec,
    hbars: &[f64],
) -> Result<SemiclassicalReport> {
    let (mut r0, mut r1, mut r2) = (Vec::new(), Vec::new(), Vec::new());
    for &h in hbars {
        let grid = base.with_hbar(h)?;
        let fa = PhaseSpaceFunction::from_fn(&grid, &a);
        let fb = PhaseSpaceFunction::from_fn(&grid, &b);
        let ab = star(&fa, &fb)?;
        let pointwise = fa.mul(&fb)?;
        let classical = poisson_bracket(&fa, &fb)?;
        let first = pointwise.add(&classical.scale(Complex64::new(0.0, 0.5 * h)))?;
        r0.push(ab.max_abs_diff(&pointwise));
        r1.push(ab.max_abs_diff(&first));
        r2.push(moyal_bracket(&fa, &fb)?.max_abs_diff(&classical));
    }
    Ok(SemiclassicalReport {
        order_r0: fit_order(hbars, &r0),
        order_r1: fit_order(hbars, &r1),
        order_r2: fit_order(hbars, &r2),
        hbars: hbars.to_vec(),
        r0,
        r1,
        r2,
    })
}

/// RK4 integration of `∂ϱ/∂t = (1/iħ)(H⋆ϱ − ϱ⋆H)`, carried out on kernels.
pub fn von_neumann_evolve(
    rho: &PhaseSpaceFunction,
    hamiltonian: &PhaseSpaceFunction,
    dt: f64,
    steps: usize,
) -> Result<PhaseSpaceFunction> {
    rho.grid().check_same(hamiltonian.grid())?;
    let scale = hamiltonian.max_abs().max(1.0);
    let im = hamiltonian.max_imag();
    if im > 1e-12 * scale {
        return Err(Error::NonRealHamiltonian(im));
    }
    let grid = rho.grid();
    let h = phase_to_kernel(&hamiltonian.map(|v| Complex64::new(v.re, 0.0))).operator_matrix();
    let k0 = phase_to_kernel(rho).into_values();
    let c = Complex64::new(0.0, -1.0 / grid.hbar());
    let f = |k: &DMatrix<Complex64>| (&h * k - k * &h) * c;
    let mut k = k0;
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    for _ in 0..steps {
        let k1 = f(&k);
        let k2 = f(&(&k + &k1 * half));
        let k3 = f(&(&k + &k2 * half));
        let k4 = f(&(&k + &k3 * full));
        k += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
    }
    Ok(kernel_to_phase(&DensityKernel::new(grid.clone(), k)?))
}
