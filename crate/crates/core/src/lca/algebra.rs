//! Group algebra of `G`, quasi-momentum folding and a lattice conservation demo.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::group::{fourier, DualElement, FiniteAbelianGroup, GroupFunction};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fold `κ₁ + κ₂` into `(−π, π]`.
pub fn umklapp_fold(k1: f64, k2: f64) -> f64 {
    let s = (k1 + k2).rem_euclid(2.0 * PI);
    if s > PI {
        s - 2.0 * PI
    } else {
        s
    }
}

/// Representation used to turn group-algebra coefficients into operators.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// `g ↦ U(g)` on `L²(G)`.
    Regular,
    /// One-dimensional `g ↦ ⟨χ|g⟩`.
    Character(DualElement),
}

fn operator_of(alpha: &GroupFunction, rep: &Representation) -> DMatrix<Complex64> {
    let g = alpha.group();
    let n = g.size();
    match rep {
        Representation::Regular => {
            let mut m = DMatrix::from_element(n, n, ZERO);
            for (x, a) in alpha.values().iter().enumerate() {
                for y in 0..n {
                    m[(y, g.sub_index(y, x))] += a;
                }
            }
            m
        }
        Representation::Character(chi) => {
            let c = g.index_of(&chi.0);
            let s: Complex64 = alpha.values().iter().enumerate().map(|(x, a)| a * g.pairing(c, x)).sum();
            DMatrix::from_element(1, 1, s)
        }
    }
}

/// Operator `Σ_g (α∗β)(g) R(g)` of the convolution of two coefficient functions.
pub fn group_algebra_product(
    alpha: &GroupFunction,
    beta: &GroupFunction,
    rep: &Representation,
) -> Result<DMatrix<Complex64>> {
    let conv = super::group::convolve(alpha, beta)?;
    Ok(operator_of(&conv, rep))
}

/// Operator `Σ_g α(g) R(g)`.
pub fn group_algebra_operator(alpha: &GroupFunction, rep: &Representation) -> DMatrix<Complex64> {
    operator_of(alpha, rep)
}

/// Outcome of [`conservation_demo`].
#[derive(Debug, Clone)]
pub struct ConservationReport {
    pub sites: usize,
    pub steps: usize,
    /// Largest change of any occupation `|ψ̂(χ)|² / |G|` of the normalized state.
    pub max_occupation_drift: f64,
    /// Largest change of `Σ|ψ|²`.
    pub norm_drift: f64,
    /// Character pairs `(χ₁, χ₂)` whose real quasi-momenta `κ₁ + κ₂` leave
    /// `(−π, π]`; the group label `χ₁ + χ₂` is exact for every pair.
    pub umklapp_pairs: usize,
}

/// Evolve a wave packet on `Z_N` under `H = −J (U(1) + U(−1))` with the
/// Crank–Nicolson map and track the occupations of the dual basis.
pub fn conservation_demo(group: &FiniteAbelianGroup, hopping: f64, steps: usize) -> Result<ConservationReport> {
    if group.orders().len() != 1 {
        return Err(Error::Validation("the demo runs on a cyclic group".into()));
    }
    if !hopping.is_finite() {
        return Err(Error::Validation("hopping must be finite".into()));
    }
    let n = group.size();
    let dt = 0.05;
    let mut h = DMatrix::from_element(n, n, ZERO);
    for y in 0..n {
        h[(y, (y + n - 1) % n)] -= hopping;
        h[(y, (y + 1) % n)] -= hopping;
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let half = Complex64::new(0.0, dt / 2.0);
    let lhs = (&id + &h * half).lu();
    let rhs = &id - &h * half;
    let k0 = 2.0 * PI * (n / 4) as f64 / n as f64;
    let centre = n as f64 / 2.0;
    let mut psi = DVector::from_fn(n, |y, _| {
        let d = y as f64 - centre;
        Complex64::from_polar((-d * d / 8.0).exp(), k0 * y as f64)
    });
    psi /= Complex64::new(psi.norm(), 0.0);
    let occupations = |v: &DVector<Complex64>| -> Vec<f64> {
        let f = GroupFunction::new(group, v.iter().cloned().collect()).expect("finite state");
        fourier(&f).values().iter().map(|c| c.norm_sqr() / n as f64).collect()
    };
    let occ0 = occupations(&psi);
    let norm0 = psi.norm_squared();
    let mut drift: f64 = 0.0;
    let mut norm_drift: f64 = 0.0;
    for _ in 0..steps {
        psi = lhs.solve(&(&rhs * &psi)).ok_or_else(|| Error::Validation("singular propagator".into()))?;
        let occ = occupations(&psi);
        drift = occ.iter().zip(&occ0).fold(drift, |m, (a, b)| m.max((a - b).abs()));
        norm_drift = norm_drift.max((psi.norm_squared() - norm0).abs());
    }
    let kappa = |c: usize| 2.0 * PI * crate::fft::signed(c, n) as f64 / n as f64;
    let mut umklapp_pairs = 0;
    for a in 0..n {
        for b in 0..n {
            let s = kappa(a) + kappa(b);
            if s <= -PI || s > PI {
                umklapp_pairs += 1;
            }
        }
    }
    Ok(ConservationReport { sites: n, steps, max_occupation_drift: drift, norm_drift, umklapp_pairs })
}
