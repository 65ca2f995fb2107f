//! Translations, boosts and projective Weyl operators on wave functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, WaveFunction};
use crate::wigner::DensityKernel;
#[cfg(test)]
use crate::wigner::MaxNorm;

/// The standard symplectic form on 2n-vectors `z = (x, y)`:
/// `Γ(z₁, z₂) = y₁·x₂ − y₂·x₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    dim: usize,
}

impl SymplecticForm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, z1: &[f64], z2: &[f64]) -> Result<f64> {
        for z in [z1, z2] {
            if z.len() != 2 * self.dim {
                return Err(Error::DimensionMismatch { expected: 2 * self.dim, got: z.len() });
            }
        }
        let n = self.dim;
        Ok((0..n).map(|a| z1[n + a] * z2[a] - z2[n + a] * z1[a]).sum())
    }

    /// `Γ(u₁,u₂,u₃) = Γ(u₂,u₃) + Γ(u₃,u₁) + Γ(u₁,u₂)`.
    pub fn triple(&self, u1: &[f64], u2: &[f64], u3: &[f64]) -> Result<f64> {
        Ok(self.eval(u2, u3)? + self.eval(u3, u1)? + self.eval(u1, u2)?)
    }

    /// Matrix `J` with `Γ(z₁,z₂) = z₁ᵀ J z₂`.
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim;
        let mut m = nalgebra::DMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            m[(a, n + a)] = -1.0;
            m[(n + a, a)] = 1.0;
        }
        m
    }
}

/// Symplectic form evaluated on a pair of 2n-vectors.
pub fn symplectic_eval(z1: &[f64], z2: &[f64]) -> Result<f64> {
    if z1.len() % 2 != 0 {
        return Err(Error::Validation("phase-space vectors have even length".into()));
    }
    SymplecticForm::new(z1.len() / 2).eval(z1, z2)
}

/// A phase-space shift: translation `alpha` and boost velocity `nu`; `pi = mass·nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShift {
    alpha: Vec<f64>,
    nu: Vec<f64>,
    pi: Vec<f64>,
    mass: f64,
}

impl PhaseShift {
    pub fn new(alpha: Vec<f64>, nu: Vec<f64>, mass: f64) -> Result<Self> {
        if alpha.len() != nu.len() {
            return Err(Error::DimensionMismatch { expected: alpha.len(), got: nu.len() });
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Validation(format!("mass must be positive, got {mass}")));
        }
        let pi = nu.iter().map(|v| mass * v).collect();
        Ok(Self { alpha, nu, pi, mass })
    }

    /// Shift given by translation and boost momentum `pi` instead of velocity.
    pub fn from_momentum(alpha: Vec<f64>, pi: Vec<f64>, mass: f64) -> Result<Self> {
        let nu = pi.iter().map(|p| p / mass).collect();
        let mut s = Self::new(alpha, nu, mass)?;
        s.pi = pi;
        Ok(s)
    }

    pub fn zero(dim: usize, mass: f64) -> Self {
        Self { alpha: vec![0.0; dim], nu: vec![0.0; dim], pi: vec![0.0; dim], mass }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// The 2n-vector `(alpha, nu)`.
    pub fn as_vector(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.nu).copied().collect()
    }

    pub fn add(&self, other: &PhaseShift) -> Result<PhaseShift> {
        self.check_compatible(other)?;
        let alpha = self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b).collect();
        let pi = self.pi.iter().zip(&other.pi).map(|(a, b)| a + b).collect();
        PhaseShift::from_momentum(alpha, pi, self.mass)
    }

    pub fn neg(&self) -> PhaseShift {
        Self {
            alpha: self.alpha.iter().map(|a| -a).collect(),
            nu: self.nu.iter().map(|a| -a).collect(),
            pi: self.pi.iter().map(|a| -a).collect(),
            mass: self.mass,
        }
    }

    fn check_compatible(&self, other: &PhaseShift) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        if self.mass != other.mass {
            return Err(Error::Validation("shifts carry different masses".into()));
        }
        Ok(())
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: self.dim() });
        }
        if self.mass != grid.mass() {
            return Err(Error::GridMismatch(format!(
                "shift mass {} differs from grid mass {}",
                self.mass,
                grid.mass()
            )));
        }
        Ok(())
    }

    /// Exponent factor `(1/ħ)·m·ν·α` shared by the projective phases.
    fn pairing(&self, other: &PhaseShift) -> f64 {
        self.pi.iter().zip(&other.alpha).map(|(p, a)| p * a).sum()
    }
}

fn lattice_steps(values: &[f64], step: f64, what: &str) -> Result<Vec<i64>> {
    values
        .iter()
        .map(|&v| {
            let t = v / step;
            let r = t.round();
            if (t - r).abs() > 1e-9 || !t.is_finite() {
                Err(Error::IncommensurateShift(format!("{what} {v} is {t} lattice steps")))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

fn shift_by_steps(psi: &WaveFunction, steps: &[i64]) -> WaveFunction {
    let grid = psi.grid();
    let n = grid.points() as i64;
    let shape = grid.shape();
    let values = psi.values();
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let idx = grid.unravel(flat);
        let mut src = 0usize;
        for (a, &j) in idx.iter().enumerate() {
            src = src * shape[a] + (j as i64 - steps[a]).rem_euclid(n) as usize;
        }
        *o = values[src];
    }
    WaveFunction::new(grid.clone(), out).expect("shifted samples stay valid")
}

/// `(U(α)ψ)(q) = ψ(q − α)`, an exact circular shift.
pub fn translate(psi: &WaveFunction, alpha: &[f64]) -> Result<WaveFunction> {
    let grid = psi.grid();
    if alpha.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: alpha.len() });
    }
    let steps = lattice_steps(alpha, grid.dq(), "translation")?;
    Ok(shift_by_steps(psi, &steps))
}

/// `(V(ν)ψ)(q) = exp((i/ħ) m ν·q) ψ(q)`.
pub fn boost(psi: &WaveFunction, nu: &[f64]) -> Result<WaveFunction> {
    let grid = psi.grid();
    if nu.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: nu.len() });
    }
    let pi: Vec<f64> = nu.iter().map(|v| v * grid.mass()).collect();
    boost_momentum(psi, &pi)
}

fn boost_momentum(psi: &WaveFunction, pi: &[f64]) -> Result<WaveFunction> {
    let grid = psi.grid();
    lattice_steps(pi, grid.dp(), "boost momentum")?;
    let hbar = grid.hbar();
    let values = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let q = grid.position_vec(i);
            let phase: f64 = q.iter().zip(pi).map(|(x, p)| x * p).sum::<f64>() / hbar;
            v * Complex64::from_polar(1.0, phase)
        })
        .collect();
    WaveFunction::new(grid.clone(), values)
}

/// `𝒲(α,ν)ψ = U(α) V(ν) ψ`.
pub fn weyl_script(psi: &WaveFunction, s: &PhaseShift) -> Result<WaveFunction> {
    s.check_grid(psi.grid())?;
    translate(&boost_momentum(psi, s.pi())?, s.alpha())
}

/// `𝕎(α,ν)ψ = exp((i/2ħ) m ν·α) 𝒲(α,ν)ψ`.
pub fn weyl_canonical(psi: &WaveFunction, s: &PhaseShift) -> Result<WaveFunction> {
    let phase = Complex64::from_polar(1.0, s.pairing(s) / (2.0 * psi.grid().hbar()));
    Ok(weyl_script(psi, s)?.map(|v| v * phase))
}

/// Projective factor of the script composition: `𝒲(s₁)𝒲(s₂) = f·𝒲(s₁+s₂)`.
pub fn script_factor(s1: &PhaseShift, s2: &PhaseShift, hbar: f64) -> Complex64 {
    Complex64::from_polar(1.0, s1.pairing(s2) / hbar)
}

/// Projective factor of the canonical composition, `exp((i/2ħ) m Γ(u₁,u₂))`.
pub fn canonical_factor(s1: &PhaseShift, s2: &PhaseShift, hbar: f64) -> Complex64 {
    Complex64::from_polar(1.0, (s1.pairing(s2) - s2.pairing(s1)) / (2.0 * hbar))
}

/// Residuals of the first-order generator expansions.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReport {
    /// `‖U(εe_k)ψ − ψ + ε(i/ħ)P_kψ‖` per axis.
    pub translation: Vec<f64>,
    /// `‖V(εe_k)ψ − ψ − ε(i/ħ)mQ_kψ‖` per axis.
    pub boost: Vec<f64>,
}

/// Compares small translations and boosts with their generators.
///
/// The translation by `ε` is applied spectrally so `ε` need not be on the lattice.
pub fn generator_check(psi: &WaveFunction, eps: f64) -> GeneratorReport {
    let grid = psi.grid();
    let hbar = grid.hbar();
    let mass = grid.mass();
    let i = Complex64::new(0.0, 1.0);
    let mut translation = Vec::with_capacity(grid.dim());
    let mut boost = Vec::with_capacity(grid.dim());
    for k in 0..grid.dim() {
        let mut phi = grid::to_momentum(psi);
        let shifted = {
            let g = phi.grid().clone();
            let vals: Vec<Complex64> = phi
                .values()
                .iter()
                .enumerate()
                .map(|(idx, v)| v * Complex64::from_polar(1.0, -g.momentum_vec(idx)[k] * eps / hbar))
                .collect();
            phi = grid::MomentumProfile::new(g, vals).expect("valid profile");
            grid::to_position(&phi)
        };
        let p = grid::momentum_operator(psi, k);
        let lin = psi.values().iter().zip(p.values()).map(|(v, pv)| v - eps * i / hbar * pv);
        let r: Vec<Complex64> = shifted.values().iter().zip(lin).map(|(a, b)| a - b).collect();
        translation.push(l2(&r, grid));

        let q = grid::position_operator(psi, k);
        let r: Vec<Complex64> = psi
            .values()
            .iter()
            .zip(q.values())
            .enumerate()
            .map(|(idx, (v, qv))| {
                let x = grid.position_vec(idx)[k];
                v * Complex64::from_polar(1.0, mass * eps * x / hbar) - v - eps * i * mass / hbar * qv
            })
            .collect();
        boost.push(l2(&r, grid));
    }
    GeneratorReport { translation, boost }
}

fn l2(v: &[Complex64], grid: &GridSpec) -> f64 {
    (v.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.position_weight()).sqrt()
}

/// `(1/iħ) ⟨ψ|[Q_a, P_b] ψ⟩`.
pub fn canonical_commutator(psi: &WaveFunction, a: usize, b: usize) -> Result<Complex64> {
    let qp = grid::position_operator(&grid::momentum_operator(psi, b), a);
    let pq = grid::momentum_operator(&grid::position_operator(psi, a), b);
    let diff = qp.values().iter().zip(pq.values()).map(|(x, y)| x - y).collect();
    let c = WaveFunction::new(psi.grid().clone(), diff)?;
    let hbar = psi.grid().hbar();
    Ok(grid::inner(psi, &c)? / Complex64::new(0.0, hbar))
}

/// `K ↦ 𝕎(s) K 𝕎(s)⁻¹`.
pub fn adjoint_action(kernel: &DensityKernel, s: &PhaseShift) -> Result<DensityKernel> {
    let apply_columns = |m: &nalgebra::DMatrix<Complex64>| -> Result<nalgebra::DMatrix<Complex64>> {
        let grid = kernel.grid();
        let mut out = m.clone();
        for c in 0..m.ncols() {
            let col = WaveFunction::new(grid.clone(), m.column(c).iter().copied().collect())?;
            let w = weyl_canonical(&col, s)?;
            out.column_mut(c).copy_from_slice(w.values());
        }
        Ok(out)
    };
    let first = apply_columns(kernel.values())?;
    let second = apply_columns(&first.adjoint())?;
    DensityKernel::new(kernel.grid().clone(), second.adjoint())
}
