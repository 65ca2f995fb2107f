//! Finite Abelian groups `Z_{N₁} × … × Z_{N_r}`, their duals, and Fourier analysis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;

/// Product of cyclic groups. The dual group is labelled by the same residues,
/// with `⟨χ|g⟩ = exp(2πi Σ χ_a g_a / N_a)`.
#[derive(Debug, Clone)]
pub struct FiniteAbelianGroup {
    inner: Arc<Tables>,
}

#[derive(Debug)]
struct Tables {
    orders: Vec<usize>,
    size: usize,
    lcm: usize,
    roots: Vec<Complex64>,
    // pairing[χ·|G| + g] = Σ χ_a g_a (lcm/N_a) mod lcm
    pairing: Vec<u32>,
    // difference[a·|G| + b] = a − b
    difference: Vec<u16>,
}

impl PartialEq for FiniteAbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        self.inner.orders == other.inner.orders
    }
}

impl Eq for FiniteAbelianGroup {}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// e^{2πi t/n} with exact values at the quarter points.
fn root(t: usize, n: usize) -> Complex64 {
    let t = t % n;
    if 4 * t % n == 0 {
        match 4 * t / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * t as f64 / n as f64)
    }
}

/// Element of `G`, stored as reduced residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement(pub Vec<usize>);

/// Element of the dual group `Ĝ`, stored as reduced residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DualElement(pub Vec<usize>);

impl FiniteAbelianGroup {
    pub fn new(orders: &[usize]) -> Result<Self> {
        if orders.is_empty() || orders.iter().any(|&n| n == 0) {
            return Err(Error::Validation(format!("group orders must be positive, got {orders:?}")));
        }
        let size: usize = orders.iter().product();
        if size > 1024 {
            return Err(Error::Validation(format!("group of order {size} is too large")));
        }
        let lcm = orders.iter().fold(1, |l, &n| l / gcd(l, n) * n);
        let roots = (0..lcm).map(|t| root(t, lcm)).collect();
        let residues: Vec<Vec<usize>> = (0..size).map(|i| fft::unravel(i, orders)).collect();
        let flat = |r: &[usize]| r.iter().zip(orders).fold(0, |acc, (&v, &n)| acc * n + v);
        let mut pairing = vec![0; size * size];
        let mut difference = vec![0; size * size];
        for (i, c) in residues.iter().enumerate() {
            for (j, e) in residues.iter().enumerate() {
                let mut t = 0;
                for a in 0..orders.len() {
                    t += (c[a] * e[a] % orders[a]) * (lcm / orders[a]);
                }
                pairing[i * size + j] = (t % lcm) as u32;
                let d: Vec<usize> = (0..orders.len()).map(|a| (c[a] + orders[a] - e[a]) % orders[a]).collect();
                difference[i * size + j] = flat(&d) as u16;
            }
        }
        let tables = Tables { orders: orders.to_vec(), size, lcm, roots, pairing, difference };
        Ok(Self { inner: Arc::new(tables) })
    }

    /// The cyclic group `Z_n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn orders(&self) -> &[usize] {
        &self.inner.orders
    }

    /// `|G|`
    pub fn size(&self) -> usize {
        self.inner.size
    }

    fn reduce(&self, residues: &[i64]) -> Result<Vec<usize>> {
        let orders = self.orders();
        if residues.len() != orders.len() {
            return Err(Error::DimensionMismatch { expected: orders.len(), got: residues.len() });
        }
        Ok(residues.iter().zip(orders).map(|(&r, &n)| r.rem_euclid(n as i64) as usize).collect())
    }

    pub fn element(&self, residues: &[i64]) -> Result<GroupElement> {
        Ok(GroupElement(self.reduce(residues)?))
    }

    pub fn dual_element(&self, residues: &[i64]) -> Result<DualElement> {
        Ok(DualElement(self.reduce(residues)?))
    }

    /// Flat index of residues, row-major over the orders.
    pub fn index_of(&self, residues: &[usize]) -> usize {
        residues.iter().zip(self.orders()).fold(0, |acc, (&r, &n)| acc * n + r % n)
    }

    pub fn element_at(&self, index: usize) -> GroupElement {
        GroupElement(fft::unravel(index, self.orders()))
    }

    pub fn dual_at(&self, index: usize) -> DualElement {
        DualElement(fft::unravel(index, self.orders()))
    }

    /// Flat index of `a + b` (or `a − b` when `negate`) for flat indices.
    pub(crate) fn combine(&self, a: usize, b: usize, negate: bool) -> usize {
        if negate {
            self.sub_index(a, b)
        } else {
            self.sub_index(a, self.neg_index(b))
        }
    }

    pub(crate) fn sub_index(&self, a: usize, b: usize) -> usize {
        self.inner.difference[a * self.inner.size + b] as usize
    }

    pub(crate) fn neg_index(&self, a: usize) -> usize {
        self.sub_index(0, a)
    }

    /// `⟨χ|g⟩^p` for flat indices and integer `p`.
    pub(crate) fn pairing_pow(&self, chi: usize, g: usize, p: i64) -> Complex64 {
        let t = &self.inner;
        let e = (t.pairing[chi * t.size + g] as i64 * p).rem_euclid(t.lcm as i64) as usize;
        t.roots[e]
    }

    pub(crate) fn pairing(&self, chi: usize, g: usize) -> Complex64 {
        self.pairing_pow(chi, g, 1)
    }

    /// `⟨χ|g⟩ = exp(2πi Σ χ_a g_a / N_a)`.
    pub fn character_eval(&self, chi: &DualElement, g: &GroupElement) -> Complex64 {
        self.pairing(self.index_of(&chi.0), self.index_of(&g.0))
    }

    /// Two-character `ζ((x₁,π₁),(x₂,π₂)) = ⟨π₁|x₂⟩ conj⟨π₂|x₁⟩`.
    pub fn two_character(&self, z1: (&GroupElement, &DualElement), z2: (&GroupElement, &DualElement)) -> Complex64 {
        self.character_eval(z1.1, z2.0) * self.character_eval(z2.1, z1.0).conj()
    }
}

/// Complex function on `G` (or on `Ĝ`; the shapes coincide).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFunction {
    group: FiniteAbelianGroup,
    values: Vec<Complex64>,
}

impl GroupFunction {
    pub fn new(group: &FiniteAbelianGroup, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.size() {
            return Err(Error::DimensionMismatch { expected: group.size(), got: values.len() });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Validation("non-finite sample".into()));
        }
        Ok(Self { group: group.clone(), values })
    }

    pub fn from_fn(group: &FiniteAbelianGroup, f: impl FnMut(usize) -> Complex64) -> Self {
        Self { group: group.clone(), values: (0..group.size()).map(f).collect() }
    }

    /// Kronecker delta at flat index `at`.
    pub fn delta(group: &FiniteAbelianGroup, at: usize) -> Self {
        Self::from_fn(group, |i| Complex64::new(if i == at { 1.0 } else { 0.0 }, 0.0))
    }

    /// The character `g ↦ ⟨χ|g⟩` as a function on `G`.
    pub fn character(group: &FiniteAbelianGroup, chi: &DualElement) -> Self {
        let c = group.index_of(&chi.0);
        Self::from_fn(group, |g| group.pairing(c, g))
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// `f̂(χ) = Σ_g conj⟨χ|g⟩ f(g)`.
pub fn fourier(f: &GroupFunction) -> GroupFunction {
    let mut v = f.values.clone();
    fft::transform_all(&mut v, f.group.orders(), FftDirection::Forward);
    GroupFunction { group: f.group.clone(), values: v }
}

/// `f(g) = |G|⁻¹ Σ_χ ⟨χ|g⟩ f̂(χ)`.
pub fn inverse_fourier(f: &GroupFunction) -> GroupFunction {
    let mut v = f.values.clone();
    fft::transform_all(&mut v, f.group.orders(), FftDirection::Inverse);
    let s = 1.0 / f.group.size() as f64;
    v.iter_mut().for_each(|x| *x *= s);
    GroupFunction { group: f.group.clone(), values: v }
}

/// `(F ∗ G)(g) = Σ_h F(h) G(g − h)`.
pub fn convolve(f: &GroupFunction, g: &GroupFunction) -> Result<GroupFunction> {
    if f.group != g.group {
        return Err(Error::Validation("functions live on different groups".into()));
    }
    let grp = &f.group;
    let n = grp.size();
    let values = (0..n).map(|x| (0..n).map(|h| f.values[h] * g.values[grp.combine(x, h, true)]).sum()).collect();
    Ok(GroupFunction { group: grp.clone(), values })
}

/// `(U(x)ψ)(y) = ψ(y − x)`.
pub fn translate_g(psi: &GroupFunction, x: &GroupElement) -> GroupFunction {
    let grp = &psi.group;
    let xi = grp.index_of(&x.0);
    GroupFunction::from_fn(grp, |y| psi.values[grp.combine(y, xi, true)])
}

/// `(V(π)ψ)(y) = ⟨π|y⟩ ψ(y)`.
pub fn modulate(psi: &GroupFunction, pi: &DualElement) -> GroupFunction {
    let grp = &psi.group;
    let c = grp.index_of(&pi.0);
    GroupFunction::from_fn(grp, |y| grp.pairing(c, y) * psi.values[y])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(orders: &[usize]) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(orders).unwrap()
    }

    #[test]
    fn characters() {
        let g = z(&[2]);
        let one = g.element(&[1]).unwrap();
        let chi = g.dual_element(&[1]).unwrap();
        assert_eq!(g.character_eval(&chi, &one), Complex64::new(-1.0, 0.0));
        let g = z(&[3, 4]);
        let zero = g.element(&[0, 0]).unwrap();
        for c in 0..12 {
            let chi = g.dual_at(c);
            assert_eq!(g.character_eval(&chi, &zero), Complex64::new(1.0, 0.0));
            assert_eq!(g.character_eval(&g.dual_element(&[0, 0]).unwrap(), &g.element_at(c)), Complex64::new(1.0, 0.0));
            for a in 0..12 {
                let v = g.character_eval(&chi, &g.element_at(a));
                assert!((v.norm() - 1.0).abs() < 1e-15);
                for b in 0..12 {
                    let sum = g.element_at(g.combine(a, b, false));
                    let lhs = g.character_eval(&chi, &sum);
                    let rhs = v * g.character_eval(&chi, &g.element_at(b));
                    assert!((lhs - rhs).norm() < 1e-14);
                }
            }
        }
        assert!(FiniteAbelianGroup::new(&[]).is_err());
        assert!(FiniteAbelianGroup::new(&[3, 0]).is_err());
        assert_eq!(g.element(&[-1, 9]).unwrap(), GroupElement(vec![2, 1]));
    }

    #[test]
    fn fourier_of_delta_and_character() {
        let g = z(&[3, 4]);
        let d = fourier(&GroupFunction::delta(&g, 0));
        assert!(d.values().iter().all(|v| (v - 1.0).norm() < 1e-14));
        let chi = g.dual_element(&[2, 1]).unwrap();
        let f = fourier(&GroupFunction::character(&g, &chi));
        let at = g.index_of(&chi.0);
        for (i, v) in f.values().iter().enumerate() {
            let expected = if i == at { 12.0 } else { 0.0 };
            assert!((v - expected).norm() < 1e-12);
        }
        // the FFT agrees with the defining sum
        let h = GroupFunction::from_fn(&g, |i| Complex64::new(i as f64, (i * i) as f64 * 0.1));
        let fh = fourier(&h);
        for c in 0..12 {
            let direct: Complex64 = (0..12).map(|x| g.pairing(c, x).conj() * h.values()[x]).sum();
            assert!((direct - fh.values()[c]).norm() < 1e-11);
        }
    }

    #[test]
    fn convolution_identities() {
        let g = z(&[6]);
        let f = GroupFunction::from_fn(&g, |i| Complex64::new(i as f64 - 2.0, 1.0 / (1.0 + i as f64)));
        assert!(convolve(&f, &GroupFunction::delta(&g, 0)).unwrap().max_abs_diff(&f) < 1e-14);
        for a in 0..6 {
            for b in 0..6 {
                let (ca, cb) =
                    (GroupFunction::character(&g, &g.dual_at(a)), GroupFunction::character(&g, &g.dual_at(b)));
                let c = convolve(&ca, &cb).unwrap();
                let expected =
                    GroupFunction::from_fn(
                        &g,
                        |i| {
                            if a == b {
                                ca.values()[i] * 6.0
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        },
                    );
                assert!(c.max_abs_diff(&expected) < 1e-12);
            }
        }
    }

    #[test]
    fn two_character_properties() {
        let g = z(&[3]);
        let pts: Vec<(GroupElement, DualElement)> = (0..9).map(|i| (g.element_at(i / 3), g.dual_at(i % 3))).collect();
        for z1 in &pts {
            assert!((g.two_character((&z1.0, &z1.1), (&z1.0, &z1.1)) - 1.0).norm() < 1e-15);
            for z2 in &pts {
                let a = g.two_character((&z1.0, &z1.1), (&z2.0, &z2.1));
                let b = g.two_character((&z2.0, &z2.1), (&z1.0, &z1.1));
                assert!((a * b - 1.0).norm() < 1e-14);
            }
        }
        // non-singularity on Z5
        let g = z(&[5]);
        let pts: Vec<(GroupElement, DualElement)> = (0..25).map(|i| (g.element_at(i / 5), g.dual_at(i % 5))).collect();
        let rows: Vec<Vec<Complex64>> = pts
            .iter()
            .map(|z1| pts.iter().map(|z2| g.two_character((&z1.0, &z1.1), (&z2.0, &z2.1))).collect())
            .collect();
        for i in 0..25 {
            for j in (i + 1)..25 {
                let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(d > 1e-6, "{i} {j}");
            }
        }
    }

    #[test]
    fn two_character_bilinearity() {
        for orders in [vec![2, 3], vec![6], vec![2, 2, 3], vec![6, 6], vec![4, 9]] {
            let g = z(&orders);
            let n = g.size();
            let zeta = |a: (usize, usize), b: (usize, usize)| g.pairing(a.1, b.0) * g.pairing(b.1, a.0).conj();
            let step = if n > 12 { 5 } else { 1 };
            for x1 in (0..n).step_by(step) {
                for p1 in (0..n).step_by(step) {
                    for x2 in (0..n).step_by(step) {
                        for p2 in (0..n).step_by(step) {
                            for (x3, p3) in [(1 % n, 2 % n), (n - 1, 0), (n / 2, n / 3)] {
                                let sum = (g.combine(x1, x2, false), g.combine(p1, p2, false));
                                let lhs = zeta(sum, (x3, p3));
                                let rhs = zeta((x1, p1), (x3, p3)) * zeta((x2, p2), (x3, p3));
                                assert!((lhs - rhs).norm() < 1e-13);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn translation_modulation_commutator() {
        let g = z(&[4]);
        let psi = GroupFunction::from_fn(&g, |i| Complex64::new(1.0 + i as f64, -(i as f64)));
        assert_eq!(translate_g(&psi, &g.element_at(0)), psi);
        assert_eq!(modulate(&psi, &g.dual_at(0)), psi);
        for x in 0..4 {
            for p in 0..4 {
                let (xe, pe) = (g.element_at(x), g.dual_at(p));
                let (xn, pn) = (g.element_at(g.neg_index(x)), g.dual_at(g.neg_index(p)));
                // U(x) V(π) U(x)⁻¹ V(π)⁻¹ ψ
                let out = translate_g(&modulate(&translate_g(&modulate(&psi, &pn), &xn), &pe), &xe);
                let f = g.character_eval(&pe, &xe).conj();
                let expected = GroupFunction::from_fn(&g, |i| psi.values()[i] * f);
                assert!(out.max_abs_diff(&expected) < 1e-13);
                // modulation shifts the Fourier transform
                let lhs = fourier(&modulate(&psi, &pe));
                let rhs = translate_g(&fourier(&psi), &xe_dual(&g, p));
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }
    }

    fn xe_dual(g: &FiniteAbelianGroup, p: usize) -> GroupElement {
        g.element_at(p)
    }

    proptest! {
        #[test]
        fn fourier_roundtrip_plancherel_convolution(vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 24),
                                                    other in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 24)) {
            let g = z(&[2, 3, 4]);
            let f = GroupFunction::new(&g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let h = GroupFunction::new(&g, other.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let ff = fourier(&f);
            prop_assert!(inverse_fourier(&ff).max_abs_diff(&f) < 1e-13);
            prop_assert!((f.norm_sqr() - ff.norm_sqr() / 24.0).abs() < 1e-12);
            let c1 = convolve(&f, &h).unwrap();
            prop_assert!(c1.max_abs_diff(&convolve(&h, &f).unwrap()) < 1e-12);
            let fh = fourier(&h);
            let prod = GroupFunction::from_fn(&g, |i| ff.values()[i] * fh.values()[i]);
            prop_assert!(fourier(&c1).max_abs_diff(&prod) < 1e-11);
        }
    }
}
