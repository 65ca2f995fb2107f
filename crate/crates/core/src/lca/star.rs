//! Non-local star product on `G × Ĝ` induced by `W_p`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::group::{FiniteAbelianGroup, GroupElement};
use super::weyl::{integer_exponent, PhaseFunctionG};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Kernel of the product, `(A⋆B)(g) = Σ_{g₁,g₂} |G|⁻² K(g₁−g, g₂−g) A(g₁) B(g₂)`.
///
/// `K((a₁,α₁),(a₂,α₂))` factorizes as `|G|⁻² P(α₁,a₂) Q(a₁,α₂)`, and only the
/// two factors are stored.
#[derive(Debug)]
pub struct StarKernel {
    group: FiniteAbelianGroup,
    p: i64,
    part1: Vec<Complex64>,
    part2: Vec<Complex64>,
    unit: OnceLock<std::result::Result<PhaseFunctionG, String>>,
}

impl StarKernel {
    fn build(group: &FiniteAbelianGroup, p: i64) -> Self {
        let n = group.size();
        // s2[α₁,θ] = Σ_ξ ⟨α₁|ξ⟩ ⟨θ|ξ⟩^{−p};  s1[η,α₂] = Σ_ζ ⟨α₂|ζ⟩ ⟨η|ζ⟩^{1−p}
        let mut s1 = vec![ZERO; n * n];
        let mut s2 = vec![ZERO; n * n];
        for u in 0..n {
            for v in 0..n {
                s2[u * n + v] = (0..n).map(|xi| group.pairing(u, xi) * group.pairing_pow(v, xi, -p)).sum();
                s1[u * n + v] = (0..n).map(|zeta| group.pairing(v, zeta) * group.pairing_pow(u, zeta, 1 - p)).sum();
            }
        }
        let mut part1 = vec![ZERO; n * n];
        let mut part2 = vec![ZERO; n * n];
        for u in 0..n {
            for v in 0..n {
                // part1[α₁, a₂] = Σ_θ ⟨θ|a₂⟩ s2[α₁,θ];  part2[a₁, α₂] = Σ_η ⟨η|a₁⟩ s1[η,α₂]
                part1[u * n + v] = (0..n).map(|t| group.pairing(t, v) * s2[u * n + t]).sum();
                part2[u * n + v] = (0..n).map(|t| group.pairing(t, u) * s1[t * n + v]).sum();
            }
        }
        Self { group: group.clone(), p, part1, part2, unit: OnceLock::new() }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn exponent(&self) -> i64 {
        self.p
    }

    /// `K(h₁,h₂)` for flat indices `h = a·|G| + α`.
    pub fn value(&self, h1: usize, h2: usize) -> Complex64 {
        let n = self.group.size();
        let (a1, al1) = (h1 / n, h1 % n);
        let (a2, al2) = (h2 / n, h2 % n);
        let mu2 = 1.0 / (n * n) as f64;
        self.part1[al1 * n + a2] * self.part2[a1 * n + al2] * mu2
    }

    fn diff(&self, h: usize, g: usize) -> usize {
        let n = self.group.size();
        self.group.sub_index(h / n, g / n) * n + self.group.sub_index(h % n, g % n)
    }

    /// Unit of the product, from the least-squares solution of `U⋆δ_h = δ_h` and
    /// `δ_h⋆U = δ_h` over all `h`. Computed once per kernel.
    pub fn unit(&self) -> Result<PhaseFunctionG> {
        self.unit.get_or_init(|| self.solve_unit()).clone().map_err(Error::Validation)
    }

    fn solve_unit(&self) -> std::result::Result<PhaseFunctionG, String> {
        let n = self.group.size();
        let m = n * n;
        let mu2 = 1.0 / (m as f64);
        // Normal equations over the rows (g, h) of both unit conditions.
        let mut normal = DMatrix::from_element(m, m, ZERO);
        let mut rhs = DVector::from_element(m, ZERO);
        let mut row = vec![ZERO; m];
        for g in 0..m {
            for h in 0..m {
                let dh = self.diff(h, g);
                for side in 0..2 {
                    for (u, r) in row.iter_mut().enumerate() {
                        let du = self.diff(u, g);
                        *r = mu2 * if side == 0 { self.value(du, dh) } else { self.value(dh, du) };
                    }
                    let target = if g == h { Complex64::new(1.0, 0.0) } else { ZERO };
                    for i in 0..m {
                        let ci = row[i].conj();
                        if ci == ZERO {
                            continue;
                        }
                        rhs[i] += ci * target;
                        for j in 0..m {
                            normal[(i, j)] += ci * row[j];
                        }
                    }
                }
            }
        }
        let sol = normal.lu().solve(&rhs).ok_or_else(|| "unit equation is singular".to_string())?;
        let unit = PhaseFunctionG::new(&self.group, sol.iter().cloned().collect()).map_err(|e| e.to_string())?;
        // residual check on a few deltas
        for h in [0, m / 2, m - 1] {
            let d = PhaseFunctionG::from_fn(&self.group, |x, pi| {
                Complex64::new(if x * n + pi == h { 1.0 } else { 0.0 }, 0.0)
            });
            let r = apply(self, &unit, &d).max_abs_diff(&d);
            if r > 1e-8 {
                return Err(format!("no unit exists (residual {r:e})"));
            }
        }
        Ok(unit)
    }
}

fn cache() -> &'static Mutex<HashMap<(Vec<usize>, i64), Arc<StarKernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<(Vec<usize>, i64), Arc<StarKernel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Star kernel for `(group, p)`, built on first use and shared afterwards.
pub fn star_kernel(group: &FiniteAbelianGroup, p: f64) -> Result<Arc<StarKernel>> {
    let p = integer_exponent(p)?;
    let key = (group.orders().to_vec(), p);
    if let Some(k) = cache().lock().expect("kernel cache poisoned").get(&key) {
        return Ok(Arc::clone(k));
    }
    let k = Arc::new(StarKernel::build(group, p));
    let mut map = cache().lock().expect("kernel cache poisoned");
    Ok(Arc::clone(map.entry(key).or_insert(k)))
}

fn apply(k: &StarKernel, a: &PhaseFunctionG, b: &PhaseFunctionG) -> PhaseFunctionG {
    let g = &k.group;
    let n = g.size();
    let m = n * n;
    let mu2 = 1.0 / (m as f64);
    let av = a.values();
    let bv = b.values();
    let out = (0..m)
        .map(|z| {
            let mut acc = ZERO;
            for h1 in 0..m {
                if av[h1] == ZERO {
                    continue;
                }
                let d1 = k.diff(h1, z);
                let mut inner = ZERO;
                for h2 in 0..m {
                    inner += k.value(d1, k.diff(h2, z)) * bv[h2];
                }
                acc += av[h1] * inner;
            }
            acc * mu2
        })
        .collect();
    PhaseFunctionG::new(g, out).expect("finite product")
}

/// `A ⋆_p B` on `G × Ĝ`.
pub fn star_g(a: &PhaseFunctionG, b: &PhaseFunctionG, p: f64) -> Result<PhaseFunctionG> {
    if a.group() != b.group() {
        return Err(Error::Validation("functions live on different groups".into()));
    }
    let k = star_kernel(a.group(), p)?;
    Ok(apply(&k, a, b))
}

/// `ρ_{x₁,x₂}(x,π) = δ(x₁+x₂−2x) ⟨π|x₁−x⟩`. Identically zero when `x₁+x₂`
/// has no half in `G`.
pub fn basis_rho(group: &FiniteAbelianGroup, x1: &GroupElement, x2: &GroupElement) -> PhaseFunctionG {
    let (i1, i2) = (group.index_of(&x1.0), group.index_of(&x2.0));
    let s = group.combine(i1, i2, false);
    PhaseFunctionG::from_fn(group, |x, pi| {
        if group.combine(x, x, false) == s {
            group.pairing(pi, group.sub_index(i1, x))
        } else {
            ZERO
        }
    })
}

/// RK4 integration of `∂ϱ/∂t = −i (H⋆ϱ − ϱ⋆H)` with `ħ = 1`.
pub fn von_neumann_evolve_g(
    rho: &PhaseFunctionG,
    h: &PhaseFunctionG,
    dt: f64,
    steps: usize,
    p: f64,
) -> Result<PhaseFunctionG> {
    if rho.group() != h.group() {
        return Err(Error::Validation("functions live on different groups".into()));
    }
    if !dt.is_finite() {
        return Err(Error::Validation("time step must be finite".into()));
    }
    let k = star_kernel(rho.group(), p)?;
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |r: &PhaseFunctionG| -> PhaseFunctionG {
        apply(&k, h, r).sub(&apply(&k, r, h)).expect("same group").scale(minus_i)
    };
    let mut cur = rho.clone();
    let half = Complex64::new(dt / 2.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    for _ in 0..steps {
        let k1 = rhs(&cur);
        let k2 = rhs(&cur.add(&k1.scale(half))?);
        let k3 = rhs(&cur.add(&k2.scale(half))?);
        let k4 = rhs(&cur.add(&k3.scale(full))?);
        let incr = k1.add(&k2.scale(Complex64::new(2.0, 0.0)))?.add(&k3.scale(Complex64::new(2.0, 0.0)))?.add(&k4)?;
        cur = cur.add(&incr.scale(Complex64::new(dt / 6.0, 0.0)))?;
    }
    Ok(cur)
}
