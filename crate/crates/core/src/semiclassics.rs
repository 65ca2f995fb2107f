//! Small-ħ behaviour of WKB states, coherent states and the rotator.
//!
//! "ħ → 0" is a sweep over ħ with the state data held fixed; each report
//! carries the measured values and a least-squares order fit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::convergence::fit_order;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{split_step_evolve, GridSpec, WaveFunction};
use crate::wigner::{
    apply_operator, coherent_wigner, marginal_position, wigner_of_pure, CoherentParams, PhaseSpaceFunction,
};

/// Density `D ≥ 0` and action `S` on the position grid, with `Σ D Δqⁿ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WkbData {
    grid: GridSpec,
    density: Vec<f64>,
    action: Vec<f64>,
}

impl WkbData {
    pub fn new(grid: &GridSpec, density: Vec<f64>, action: Vec<f64>) -> Result<Self> {
        let len = grid.len();
        for v in [&density, &action] {
            if v.len() != len {
                return Err(Error::DimensionMismatch { expected: len, got: v.len() });
            }
        }
        if density.iter().chain(&action).any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite WKB data".into()));
        }
        if density.iter().any(|&d| d < 0.0) {
            return Err(Error::Validation("density must be nonnegative".into()));
        }
        let mass = density.iter().sum::<f64>() * grid.position_weight();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("density integrates to {mass}, not 1")));
        }
        Ok(Self { grid: grid.clone(), density, action })
    }

    /// Samples `d` and `s`, normalizing the density.
    pub fn from_fns(grid: &GridSpec, d: impl Fn(&[f64]) -> f64, s: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let len = grid.len();
        let mut density: Vec<f64> = (0..len).map(|i| d(&grid.position_vec(i))).collect();
        let mass = density.iter().sum::<f64>() * grid.position_weight();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Validation("density has no mass".into()));
        }
        density.iter_mut().for_each(|x| *x /= mass);
        let action = (0..len).map(|i| s(&grid.position_vec(i))).collect();
        Self::new(grid, density, action)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.grid.hbar()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn action(&self) -> &[f64] {
        &self.action
    }

    /// Same data read with a different ħ.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Ok(Self { grid: self.grid.with_hbar(hbar)?, ..self.clone() })
    }

    /// `∂S/∂q_a` by fourth-order differences; `S` need not be periodic.
    pub fn action_gradient(&self, axis: usize) -> Vec<f64> {
        fd_gradient(&self.action, &self.grid, axis)
    }
}

// Fourth-order central differences along one axis, second-order one-sided at the ends.
fn fd_gradient(values: &[f64], grid: &GridSpec, axis: usize) -> Vec<f64> {
    let n = grid.points();
    let stride = fft::strides(&grid.shape())[axis];
    let h = grid.dq();
    (0..values.len())
        .map(|i| {
            let j = grid.unravel(i)[axis];
            let at = |k: isize| values[(i as isize + k * stride as isize) as usize];
            if j >= 2 && j + 2 < n {
                (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
            } else if j < 2 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else {
                (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
            }
        })
        .collect()
}

/// `ψ = √D e^{iS/ħ}`.
pub fn wkb_state(w: &WkbData) -> WaveFunction {
    let h = w.hbar();
    let values = w.density.iter().zip(&w.action).map(|(d, s)| Complex64::from_polar(d.sqrt(), s / h)).collect();
    WaveFunction::new(w.grid.clone(), values).expect("matching length")
}

/// Measured quantity per ħ and its fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub hbars: Vec<f64>,
    pub values: Vec<f64>,
    pub order: f64,
}

impl OrderReport {
    fn new(hbars: &[f64], values: Vec<f64>) -> Self {
        Self { hbars: hbars.to_vec(), order: fit_order(hbars, &values), values }
    }
}

/// Outcome of [`lagrangian_concentration`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    /// `M(ħ) = ∫ ϱ (p − ∇S)² dμ`
    pub moments: OrderReport,
    /// `max |∫ϱ dp − D|` per ħ.
    pub marginal_errors: Vec<f64>,
}

fn check_hbars(hbars: &[f64]) -> Result<()> {
    if hbars.is_empty() || hbars.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::Validation("need positive ħ values".into()));
    }
    Ok(())
}

/// Spread of the Wigner function of `√D e^{iS/ħ}` about the manifold `p = ∇S`.
pub fn lagrangian_concentration(w: &WkbData, hbars: &[f64]) -> Result<ConcentrationReport> {
    check_hbars(hbars)?;
    let dim = w.grid.dim();
    let grads: Vec<Vec<f64>> = (0..dim).map(|a| w.action_gradient(a)).collect();
    let mut moments = Vec::new();
    let mut marginal_errors = Vec::new();
    for &h in hbars {
        let wh = w.with_hbar(h)?;
        let grid = wh.grid();
        let rho = wigner_of_pure(&wkb_state(&wh));
        let len = grid.len();
        let mut m = 0.0;
        for a in 0..len {
            for b in 0..len {
                let p = grid.momentum_vec(b);
                let d2: f64 = (0..dim).map(|k| (p[k] - grads[k][a]).powi(2)).sum();
                m += rho.values()[a * len + b].re * d2;
            }
        }
        moments.push(m * grid.phase_weight());
        let marg = marginal_position(&rho);
        marginal_errors.push(marg.iter().zip(&w.density).fold(0.0, |e: f64, (x, d)| e.max((x - d).abs())));
    }
    Ok(ConcentrationReport { moments: OrderReport::new(hbars, moments), marginal_errors })
}

fn spectral_gradient(values: &[Complex64], grid: &GridSpec, axis: usize) -> Vec<Complex64> {
    fft::derivative_axis(values, &grid.shape(), axis, grid.length())
}

fn complex_fd_gradient(values: &[Complex64], grid: &GridSpec, axis: usize) -> Vec<Complex64> {
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.im).collect();
    fd_gradient(&re, grid, axis)
        .into_iter()
        .zip(fd_gradient(&im, grid, axis))
        .map(|(a, b)| Complex64::new(a, b))
        .collect()
}

/// Remainder of the first-order action of the operator with symbol `a` on a
/// WKB state: `‖Aψ − A(q,∇S)ψ − (ħ/i)(£_v f) e^{iS/ħ}‖∞`, with
/// `v = ∂A/∂p(q,∇S)` and `£_v f = v·∇f + ½(∇·v) f`.
pub fn first_order_action(a: impl Fn(&[f64], &[f64]) -> Complex64, w: &WkbData, hbars: &[f64]) -> Result<OrderReport> {
    check_hbars(hbars)?;
    let grid = &w.grid;
    let dim = grid.dim();
    let len = grid.len();
    let grads: Vec<Vec<f64>> = (0..dim).map(|k| w.action_gradient(k)).collect();
    let on_manifold = |i: usize| -> Vec<f64> { (0..dim).map(|k| grads[k][i]).collect() };
    // v_k(q) = ∂A/∂p_k at p = ∇S(q), by fourth-order differences in p
    let step = 1e-3;
    let velocity: Vec<Vec<Complex64>> = (0..dim)
        .map(|k| {
            (0..len)
                .map(|i| {
                    let q = grid.position_vec(i);
                    let p0 = on_manifold(i);
                    let at = |t: f64| {
                        let mut p = p0.clone();
                        p[k] += t;
                        a(&q, &p)
                    };
                    (-at(2.0 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2.0 * step)) / (12.0 * step)
                })
                .collect()
        })
        .collect();
    let f: Vec<Complex64> = w.density.iter().map(|d| Complex64::new(d.sqrt(), 0.0)).collect();
    let mut lie = vec![Complex64::new(0.0, 0.0); len];
    for k in 0..dim {
        let df = spectral_gradient(&f, grid, k);
        let dv = complex_fd_gradient(&velocity[k], grid, k);
        for i in 0..len {
            lie[i] += velocity[k][i] * df[i] + 0.5 * dv[i] * f[i];
        }
    }
    let leading: Vec<Complex64> = (0..len).map(|i| a(&grid.position_vec(i), &on_manifold(i))).collect();
    let mut residuals = Vec::new();
    for &h in hbars {
        let wh = w.with_hbar(h)?;
        let psi = wkb_state(&wh);
        let symbol = PhaseSpaceFunction::from_fn(wh.grid(), &a);
        let applied = apply_operator(&symbol, &psi)?;
        let mut r: f64 = 0.0;
        for i in 0..len {
            let phase = Complex64::from_polar(1.0, w.action[i] / h);
            let predicted = leading[i] * psi.values()[i] + Complex64::new(0.0, -h) * lie[i] * phase;
            r = r.max((applied.values()[i] - predicted).norm());
        }
        residuals.push(r);
    }
    Ok(OrderReport::new(hbars, residuals))
}

/// Probability current `(ħ/m) Im(ψ̄ ∂_a ψ)` along `axis`.
pub fn quantum_current(psi: &WaveFunction, axis: usize) -> Vec<f64> {
    let g = psi.grid();
    let d = spectral_gradient(psi.values(), g, axis);
    psi.values().iter().zip(&d).map(|(v, dv)| g.hbar() / g.mass() * (v.conj() * dv).im).collect()
}

/// `max |(D(t+dt) − D(t))/dt + ∇·j(t+dt/2)|` over one split step under `V`.
pub fn continuity_residual(psi: &WaveFunction, potential: &[Complex64], dt: f64) -> Result<f64> {
    let grid = psi.grid();
    let half = split_step_evolve(psi, potential, dt / 2.0, 1)?;
    let full = split_step_evolve(psi, potential, dt, 1)?;
    let mut div = vec![Complex64::new(0.0, 0.0); grid.len()];
    for axis in 0..grid.dim() {
        let j: Vec<Complex64> = quantum_current(&half, axis).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        for (acc, d) in div.iter_mut().zip(spectral_gradient(&j, grid, axis)) {
            *acc += d;
        }
    }
    Ok((0..grid.len()).fold(0.0, |m: f64, i| {
        let dd = (full.values()[i].norm_sqr() - psi.values()[i].norm_sqr()) / dt;
        m.max((dd + div[i].re).abs())
    }))
}

/// Second moments of the coherent Wigner function per ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentLimitReport {
    pub hbars: Vec<f64>,
    /// Per ħ, the measured centre `(ξ, π)`.
    pub centers: Vec<(Vec<f64>, Vec<f64>)>,
    /// Per ħ, the position variance along each axis.
    pub variance_q: Vec<Vec<f64>>,
    /// Per ħ, the momentum variance along each axis.
    pub variance_p: Vec<Vec<f64>>,
    /// Fitted order of the first-axis position variance.
    pub order: f64,
}

/// Moments of `E_(ξ,π)` on `base` read with each ħ. The limit is a point
/// measure; the moments are the evidence, not a claim about ground states.
pub fn coherent_limit(c: &CoherentParams, base: &GridSpec, hbars: &[f64]) -> Result<CoherentLimitReport> {
    check_hbars(hbars)?;
    let dim = base.dim();
    let mut report = CoherentLimitReport {
        hbars: hbars.to_vec(),
        centers: vec![],
        variance_q: vec![],
        variance_p: vec![],
        order: 0.0,
    };
    for &h in hbars {
        let grid = base.with_hbar(h)?;
        let e = coherent_wigner(c, &grid)?;
        let pbox = grid.dp() * grid.points() as f64;
        let wrap_p = |d: f64| d - pbox * (d / pbox + 0.5).floor();
        let len = grid.len();
        let w = grid.phase_weight();
        let (mut mq, mut mp, mut vq, mut vp) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
        for a in 0..len {
            let q = grid.position_vec(a);
            for b in 0..len {
                let p = grid.momentum_vec(b);
                let val = e.values()[a * len + b].re * w;
                for k in 0..dim {
                    let dq = grid.min_image(q[k] - c.xi()[k]);
                    let dp = wrap_p(p[k] - c.pi()[k]);
                    mq[k] += val * dq;
                    mp[k] += val * dp;
                    vq[k] += val * dq * dq;
                    vp[k] += val * dp * dp;
                }
            }
        }
        for k in 0..dim {
            vq[k] -= mq[k] * mq[k];
            vp[k] -= mp[k] * mp[k];
        }
        let xi = (0..dim).map(|k| c.xi()[k] + mq[k]).collect();
        let pi = (0..dim).map(|k| c.pi()[k] + mp[k]).collect();
        report.centers.push((xi, pi));
        report.variance_q.push(vq);
        report.variance_p.push(vp);
    }
    let first: Vec<f64> = report.variance_q.iter().map(|v| v[0]).collect();
    report.order = fit_order(hbars, &first);
    Ok(report)
}

/// Comparison of a circle wave packet with its line counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatorReport {
    pub n0: u32,
    pub spread: f64,
    /// `sup |ρ_circle − ρ_line| / sup ρ_circle` over `φ ∈ (−π, π]`.
    pub sup_difference: f64,
    /// `max |(ħ/i)∂_φ e^{in₀φ} − ħn₀ e^{in₀φ}|` with the derivative taken on the Fourier side.
    pub eigen_error: f64,
    /// `max_n |c_{n+1} − c_n| / max_n |c_n|`.
    pub slow_variation: f64,
}

/// Spread `Δn = √(2n₀)` of a packet with Poisson occupation statistics.
pub fn poisson_spread(n0: u32) -> f64 {
    (2.0 * n0 as f64).sqrt()
}

// ∫₀¹ e^{itx} dt and ∫₀¹ t e^{itx} dt
fn segment_moments(x: f64) -> (Complex64, Complex64) {
    let ix = Complex64::new(0.0, x);
    if x.abs() < 1e-2 {
        let (mut i0, mut i1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..8 {
            // term = (ix)^k / k!
            i0 += term / (k + 1) as f64;
            i1 += term / (k + 2) as f64;
            term *= ix / (k + 1) as f64;
        }
        (i0, i1)
    } else {
        let e = ix.exp();
        let i0 = (e - 1.0) / ix;
        (i0, e / ix - (e - 1.0) / (ix * ix))
    }
}

/// Circle packet `Σ c_n e^{inφ}` with `c_n = exp(−(n−n₀)²/2Δn²)` against the
/// line packet `∫ c(k) e^{ikx} dk`, `c` the piecewise-linear interpolant of
/// the `c_n`, at `x = φ`. Units with `ħ = 1`.
pub fn rotator_bridge(n0: u32, spread: f64) -> Result<RotatorReport> {
    if n0 == 0 || !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::Validation(format!("need n0 ≥ 1 and a positive spread, got {n0}, {spread}")));
    }
    let width = (10.0 * spread).ceil() as i64;
    let lo = n0 as i64 - width;
    let hi = n0 as i64 + width;
    let coeff = |n: i64| (-((n - n0 as i64) as f64).powi(2) / (2.0 * spread * spread)).exp();
    let samples = 2048;
    let mut circle_peak: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let phi = -PI + 2.0 * PI * (k + 1) as f64 / samples as f64;
        let circle: Complex64 = (lo..=hi).map(|n| coeff(n) * Complex64::from_polar(1.0, n as f64 * phi)).sum();
        let (i0, i1) = segment_moments(phi);
        let line: Complex64 = (lo..hi)
            .map(|n| {
                let (ca, cb) = (coeff(n), coeff(n + 1));
                Complex64::from_polar(1.0, n as f64 * phi) * (ca * i0 + (cb - ca) * i1)
            })
            .sum();
        circle_peak = circle_peak.max(circle.norm_sqr());
        worst = worst.max((circle.norm_sqr() - line.norm_sqr()).abs());
    }
    // eigenvalue of (1/i)∂_φ on e^{in₀φ}, by FFT
    let m = (4 * (n0 as usize + 1)).next_power_of_two().max(256);
    let mut data: Vec<Complex64> =
        (0..m).map(|j| Complex64::from_polar(1.0, n0 as f64 * 2.0 * PI * j as f64 / m as f64)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut data);
    for (j, v) in data.iter_mut().enumerate() {
        *v *= fft::signed(j, m) as f64 / m as f64;
    }
    planner.plan_fft_inverse(m).process(&mut data);
    let eigen_error = (0..m).fold(0.0, |e: f64, j| {
        let expected = n0 as f64 * Complex64::from_polar(1.0, n0 as f64 * 2.0 * PI * j as f64 / m as f64);
        e.max((data[j] - expected).norm())
    });
    let slow_variation = (lo..hi).fold(0.0, |s: f64, n| s.max((coeff(n + 1) - coeff(n)).abs()));
    Ok(RotatorReport { n0, spread, sup_difference: worst / circle_peak, eigen_error, slow_variation })
}
