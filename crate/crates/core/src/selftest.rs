//! A quick run of the library's invariants, used by `wwmv selftest`.
//!
//! Grids are smaller than in the full test suite so the whole run takes a few
//! seconds. Every tolerance is multiplied by `tol_scale`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convergence::fit_order;
use crate::error::Result;
use crate::extension::{extended_convolve, twisted_convolve, ExtendedFunction};
use crate::grid::{free_propagate, to_momentum, GridSpec, WaveFunction};
use crate::heisenberg::{canonical_factor, weyl_canonical, PhaseShift};
use crate::lca::{
    conservation_demo, fourier, inverse_fourier, quantize_symbol, star_g, symbol_of, FiniteAbelianGroup, GroupFunction,
    PhaseFunctionG,
};
use crate::semiclassics::{poisson_spread, rotator_bridge};
use crate::star::{semiclassical_check, star, star_bruteforce, von_neumann_evolve};
use crate::wigner::{
    coherent_state, coherent_wigner, husimi, marginal_momentum, marginal_position, trace, transition_probability,
    wigner_of_pure, CoherentParams, PhaseSpaceFunction,
};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &'static str, value: f64, tol: f64) -> Self {
        Self { name, passed: value < tol, detail: format!("{value:.3e} < {tol:.1e}") }
    }

    fn within(name: &'static str, value: f64, target: f64, tol: f64) -> Self {
        Self { name, passed: (value - target).abs() <= tol, detail: format!("{value:.3} ≈ {target} ± {tol}") }
    }
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn max_diff_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn oscillator(g: &GridSpec, level: usize) -> WaveFunction {
    let h = g.hbar();
    WaveFunction::from_fn(g, |q| {
        let x = q[0] / h.sqrt();
        let hermite = if level == 0 { 1.0 } else { 2.0 * x };
        cx(hermite * (-x * x / 2.0).exp(), 0.0)
    })
    .normalized()
}

// Three random Gaussian bumps of variance 3/2 near the origin. This width
// balances the position and momentum tails on a 32-point grid.
fn bumps(grid: &GridSpec, rng: &mut ChaCha8Rng) -> PhaseSpaceFunction {
    let mut out = PhaseSpaceFunction::constant(grid, cx(0.0, 0.0));
    for _ in 0..3 {
        let (q0, p0): (f64, f64) = (rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25));
        let c = cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let g =
            PhaseSpaceFunction::from_fn(grid, |q, p| c * (-((q[0] - q0).powi(2) + (p[0] - p0).powi(2)) / 3.0).exp());
        out = out.add(&g).expect("same grid");
    }
    out
}

fn weyl_checks(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<CheckResult>> {
    let g = GridSpec::new(1, 128, 20.0, 1.0, 1.0)?;
    let psi = coherent_state(&CoherentParams::standard(vec![0.4], vec![-0.3])?, &g)?;
    let (mut cocycle, mut commutator): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let shift = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(-20i64..=20) as f64 * g.dq();
            let p = rng.gen_range(-20i64..=20) as f64 * g.dp();
            PhaseShift::from_momentum(vec![a], vec![p], 1.0)
        };
        let (s1, s2) = (shift(rng)?, shift(rng)?);
        let lhs = weyl_canonical(&weyl_canonical(&psi, &s2)?, &s1)?;
        let f = canonical_factor(&s1, &s2, 1.0);
        let rhs = weyl_canonical(&psi, &s1.add(&s2)?)?.map(|v| v * f);
        cocycle = cocycle.max(max_diff(lhs.values(), rhs.values()));
        let mut loop_ = psi.clone();
        for s in [s2.neg(), s1.neg(), s2.clone(), s1.clone()] {
            loop_ = weyl_canonical(&loop_, &s)?;
        }
        let expected = psi.map(|v| v * f * f);
        commutator = commutator.max(max_diff(loop_.values(), expected.values()));
    }
    Ok(vec![
        CheckResult::below("weyl cocycle", cocycle, 1e-12 * tol),
        CheckResult::below("weyl group commutator", commutator, 1e-12 * tol),
    ])
}

fn star_checks(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<CheckResult>> {
    let g = GridSpec::new(1, 32, (2.0 * PI * 32.0).sqrt(), 1.0, 1.0)?;
    let (a, b, c) = (bumps(&g, rng), bumps(&g, rng), bumps(&g, rng));
    let ab = star(&a, &b)?;
    let brute = star_bruteforce(&a, &b)?;
    let assoc = star(&ab, &c)?.max_abs_diff(&star(&a, &star(&b, &c)?)?);
    let tr = (trace(&ab) - trace(&a.mul(&b)?)).norm();
    let conj = ab.conj().max_abs_diff(&star(&b.conj(), &a.conj())?);
    Ok(vec![
        CheckResult::below("star fast vs brute force", ab.max_abs_diff(&brute), 1e-8 * tol),
        CheckResult::below("star associativity", assoc, 1e-8 * tol),
        CheckResult::below("star trace identity", tr, 1e-8 * tol),
        CheckResult::below("star conjugation", conj, 1e-10 * tol),
    ])
}

fn wigner_checks(tol: f64) -> Result<Vec<CheckResult>> {
    let g = GridSpec::new(1, 64, 16.0, 1.0, 1.0)?;
    let mut marg: f64 = 0.0;
    let mut tr: f64 = 0.0;
    let mut excited_min = 0.0;
    let mut husimi_min = 0.0;
    for level in [0, 1] {
        let psi = oscillator(&g, level);
        let rho = wigner_of_pure(&psi);
        let dq: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
        let dp: Vec<f64> = to_momentum(&psi).values().iter().map(|v| v.norm_sqr()).collect();
        marg = marg.max(max_diff_real(&marginal_position(&rho), &dq));
        marg = marg.max(max_diff_real(&marginal_momentum(&rho), &dp));
        tr = tr.max((trace(&rho) - 1.0).norm());
        if level == 1 {
            excited_min = rho.min_real();
            husimi_min = husimi(&rho).min_real();
        }
    }
    Ok(vec![
        CheckResult::below("wigner marginals", marg, 1e-10 * tol),
        CheckResult::below("wigner trace", tr, 1e-10 * tol),
        CheckResult {
            name: "excited wigner is negative",
            passed: excited_min < 0.0,
            detail: format!("min {excited_min:.3e}"),
        },
        CheckResult {
            name: "husimi is non-negative",
            passed: husimi_min >= -1e-12 * tol,
            detail: format!("min {husimi_min:.3e}"),
        },
    ])
}

fn coherent_checks(tol: f64) -> Result<Vec<CheckResult>> {
    let g = GridSpec::new(1, 128, 20.0, 1.0, 1.0)?;
    let e = coherent_wigner(&CoherentParams::standard(vec![0.5], vec![-0.25])?, &g)?;
    let f = coherent_wigner(&CoherentParams::standard(vec![-0.7], vec![0.6])?, &g)?;
    let overlap = (-(1.2f64.powi(2) + 0.85f64.powi(2)) / 2.0).exp();
    Ok(vec![
        CheckResult::below("coherent idempotence", star(&e, &e)?.max_abs_diff(&e), 1e-8 * tol),
        CheckResult::below("transition probability", (transition_probability(&e, &f)? - overlap).abs(), 1e-6 * tol),
    ])
}

fn semiclassical_checks() -> Result<Vec<CheckResult>> {
    let base = GridSpec::new(1, 256, 16.0, 1.0, 1.0)?;
    let hbars = [0.5, 0.25, 0.125];
    let r = semiclassical_check(
        |q, p| cx((-((q[0] - 0.5).powi(2) + p[0] * p[0]) / 2.0).exp(), 0.0),
        |q, p| cx((-(q[0] * q[0] + (p[0] - 0.5).powi(2)) / 2.0).exp(), 0.0),
        &base,
        &hbars,
    )?;
    Ok(vec![
        CheckResult::within("star expansion leading order", r.order_r0, 1.0, 0.3),
        CheckResult::within("star expansion remainder order", r.order_r1, 2.0, 0.3),
    ])
}

fn lca_checks(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let (mut round, mut planch, mut loop_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for orders in [&[5][..], &[3, 4][..]] {
        let grp = FiniteAbelianGroup::new(orders)?;
        let n = grp.size() as f64;
        let f = GroupFunction::from_fn(&grp, |_| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let hat = fourier(&f);
        round = round.max(inverse_fourier(&hat).max_abs_diff(&f));
        planch = planch.max((hat.norm_sqr() / n - f.norm_sqr()).abs());
        for p in [0.0, 1.0] {
            let mut random =
                || PhaseFunctionG::from_fn(&grp, |_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let (a, b) = (random(), random());
            let via_ops = symbol_of(&(quantize_symbol(&a, p)? * quantize_symbol(&b, p)?), &grp, p)?;
            loop_err = loop_err.max(star_g(&a, &b, p)?.max_abs_diff(&via_ops));
        }
    }
    out.push(CheckResult::below("group fourier round trip", round, 1e-13 * tol));
    out.push(CheckResult::below("group plancherel", planch, 1e-12 * tol));
    out.push(CheckResult::below("group star vs operator product", loop_err, 1e-10 * tol));
    let demo = conservation_demo(&FiniteAbelianGroup::cyclic(16)?, 1.0, 1000)?;
    out.push(CheckResult::below("umklapp occupation drift", demo.max_occupation_drift, 1e-12 * tol));
    Ok(out)
}

fn extension_checks(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<CheckResult>> {
    let g = GridSpec::new(1, 16, (2.0 * PI * 16.0).sqrt(), 1.0, 1.0)?;
    let (a, b) = (bumps(&g, rng), bumps(&g, rng));
    let plain = twisted_convolve(&a, &b, 0, 1.0)?;
    let len = g.len();
    let (n, w) = (g.points(), g.dq() * g.dp());
    let mut direct = vec![cx(0.0, 0.0); len * len];
    for (u, d) in direct.iter_mut().enumerate() {
        let (uq, up) = (u / len, u % len);
        for v in 0..len * len {
            let (vq, vp) = (v / len, v % len);
            let rest = ((uq + n + n / 2 - vq) % n) * len + (up + n + n / 2 - vp) % n;
            *d += a.values()[v] * b.values()[rest] * w;
        }
    }
    let (a1, b1) = (bumps(&g, rng), bumps(&g, rng));
    let ea = ExtendedFunction::new(&g).with_sector(0, a.clone())?.with_sector(1, a1.clone())?;
    let eb = ExtendedFunction::new(&g).with_sector(0, b.clone())?.with_sector(1, b1.clone())?;
    let ext = extended_convolve(&ea, &eb, 1.0)?;
    let sector = ext
        .sector(1)
        .map_or(f64::INFINITY, |s| s.max_abs_diff(&twisted_convolve(&a1, &b1, 1, 1.0).expect("same grid")));
    Ok(vec![
        CheckResult::below("untwisted sector is convolution", max_diff(plain.values(), &direct), 1e-12 * tol),
        CheckResult::below("extended convolution by sector", sector, 1e-10 * tol),
    ])
}

fn dynamics_checks(tol: f64) -> Result<Vec<CheckResult>> {
    let g = GridSpec::new(1, 64, 16.0, 1.0, 1.0)?;
    let psi = coherent_state(&CoherentParams::standard(vec![-1.0], vec![1.0])?, &g)?;
    let h = PhaseSpaceFunction::from_real_fn(&g, |_, p| p[0] * p[0] / 2.0);
    let (dt, steps) = (1e-2, 50);
    let out = von_neumann_evolve(&wigner_of_pure(&psi), &h, dt, steps)?;
    let oracle = wigner_of_pure(&free_propagate(&psi, dt * steps as f64));
    Ok(vec![
        CheckResult::below("von neumann vs wave side", out.max_abs_diff(&oracle), 1e-6 * tol),
        CheckResult::below("von neumann trace drift", (trace(&out) - 1.0).norm(), 1e-8 * tol),
    ])
}

fn rotator_checks(tol: f64) -> Result<Vec<CheckResult>> {
    let a = rotator_bridge(200, 20.0)?.sup_difference;
    let b = rotator_bridge(400, poisson_spread(400))?.sup_difference;
    let order = fit_order(&[200.0, 400.0], &[a, b]);
    Ok(vec![
        CheckResult::below("rotator circle vs line", a, 1e-3 * tol),
        CheckResult::within("rotator discrepancy halves", order, -1.0, 0.1),
    ])
}

/// Runs every check. Errors inside a group are reported as failures of that group.
pub fn run_selftest(tol_scale: f64, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut push = |name: &'static str, r: Result<Vec<CheckResult>>| match r {
        Ok(v) => out.extend(v),
        Err(e) => out.push(CheckResult { name, passed: false, detail: e.to_string() }),
    };
    push("weyl", weyl_checks(&mut rng, tol_scale));
    push("star", star_checks(&mut rng, tol_scale));
    push("wigner", wigner_checks(tol_scale));
    push("coherent", coherent_checks(tol_scale));
    push("semiclassical", semiclassical_checks());
    push("finite groups", lca_checks(&mut rng, tol_scale));
    push("extension", extension_checks(&mut rng, tol_scale));
    push("dynamics", dynamics_checks(tol_scale));
    push("rotator", rotator_checks(tol_scale));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let results = run_selftest(1.0, 7);
        assert!(results.len() > 20);
        for r in &results {
            println!("{} {}: {}", r.passed, r.name, r.detail);
        }
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn tiny_tolerances_fail() {
        assert!(run_selftest(1e-30, 7).iter().any(|r| !r.passed));
    }
}
