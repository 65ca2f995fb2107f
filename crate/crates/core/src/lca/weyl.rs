//! Weyl operators `W_p` on `L²(G)` and the symbol calculus on `G × Ĝ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::group::{DualElement, FiniteAbelianGroup, GroupElement};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex function on `G × Ĝ`, flat index `x·|G| + π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunctionG {
    group: FiniteAbelianGroup,
    values: Vec<Complex64>,
}

impl PhaseFunctionG {
    pub fn new(group: &FiniteAbelianGroup, values: Vec<Complex64>) -> Result<Self> {
        let m = group.size() * group.size();
        if values.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: values.len() });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Validation("non-finite sample".into()));
        }
        Ok(Self { group: group.clone(), values })
    }

    /// Build from `f(x_index, π_index)`.
    pub fn from_fn(group: &FiniteAbelianGroup, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let n = group.size();
        Self { group: group.clone(), values: (0..n * n).map(|i| f(i / n, i % n)).collect() }
    }

    pub fn zeros(group: &FiniteAbelianGroup) -> Self {
        Self::from_fn(group, |_, _| ZERO)
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, x: usize, pi: usize) -> Complex64 {
        self.values[x * self.group.size() + pi]
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::Validation("functions live on different groups".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { group: self.group.clone(), values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { group: self.group.clone(), values })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { group: self.group.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

pub(crate) fn integer_exponent(p: f64) -> Result<i64> {
    if !p.is_finite() || p.fract() != 0.0 || p.abs() > 1e6 {
        return Err(Error::UnsupportedExponent(p));
    }
    Ok(p as i64)
}

fn weyl_by_index(group: &FiniteAbelianGroup, x: usize, pi: usize, p: i64) -> DMatrix<Complex64> {
    let n = group.size();
    let f = group.pairing_pow(pi, x, p);
    let mut m = DMatrix::from_element(n, n, ZERO);
    for y in 0..n {
        let s = group.sub_index(y, x);
        m[(y, s)] = f * group.pairing(pi, s);
    }
    m
}

/// `W_p(x,π) = ⟨π|x⟩^p U(x) V(π)`.
pub fn weyl_wp(group: &FiniteAbelianGroup, x: &GroupElement, pi: &DualElement, p: f64) -> Result<DMatrix<Complex64>> {
    let p = integer_exponent(p)?;
    Ok(weyl_by_index(group, group.index_of(&x.0), group.index_of(&pi.0), p))
}

/// `A = Σ_{x,π} |G|⁻¹ Â(x,π) W_p(x,π)`.
pub fn quantize(hat: &PhaseFunctionG, p: f64) -> Result<DMatrix<Complex64>> {
    let p = integer_exponent(p)?;
    let g = hat.group();
    let n = g.size();
    let mu = 1.0 / n as f64;
    let mut out = DMatrix::from_element(n, n, ZERO);
    for x in 0..n {
        for pi in 0..n {
            let c = hat.at(x, pi) * mu * g.pairing_pow(pi, x, p);
            if c == ZERO {
                continue;
            }
            for y in 0..n {
                let s = g.sub_index(y, x);
                out[(y, s)] += c * g.pairing(pi, s);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`quantize`]: `Â(x,π) = Tr(W_p(x,π)⁺ A)`.
pub fn dequantize(op: &DMatrix<Complex64>, group: &FiniteAbelianGroup, p: f64) -> Result<PhaseFunctionG> {
    let p = integer_exponent(p)?;
    let n = group.size();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: op.nrows().max(op.ncols()) });
    }
    Ok(PhaseFunctionG::from_fn(group, |x, pi| {
        let f = group.pairing_pow(pi, x, p).conj();
        let t: Complex64 = (0..n)
            .map(|y| {
                let s = group.sub_index(y, x);
                (group.pairing(pi, s)).conj() * op[(y, s)]
            })
            .sum();
        f * t
    }))
}

/// Symbol from its symplectic transform:
/// `A(y,λ) = Σ_{x,π} |G|⁻¹ Â(x,π) conj(⟨π|y⟩⟨λ|x⟩)`.
pub fn symbol_from_hat(hat: &PhaseFunctionG) -> PhaseFunctionG {
    pair_transform(hat, true)
}

/// `Â(x,π) = Σ_{y,λ} |G|⁻¹ ⟨π|y⟩⟨λ|x⟩ A(y,λ)`.
pub fn hat_from_symbol(symbol: &PhaseFunctionG) -> PhaseFunctionG {
    pair_transform(symbol, false)
}

fn pair_transform(f: &PhaseFunctionG, conjugate: bool) -> PhaseFunctionG {
    let g = f.group();
    let n = g.size();
    let mu = 1.0 / n as f64;
    let ch = |a: usize, b: usize| {
        if conjugate {
            g.pairing(a, b).conj()
        } else {
            g.pairing(a, b)
        }
    };
    // t[x, y] = Σ_π ch(π, y) f(x, π)
    let mut t = vec![ZERO; n * n];
    for x in 0..n {
        for y in 0..n {
            t[x * n + y] = (0..n).map(|pi| ch(pi, y) * f.at(x, pi)).sum();
        }
    }
    PhaseFunctionG::from_fn(g, |y, lambda| mu * (0..n).map(|x| ch(lambda, x) * t[x * n + y]).sum::<Complex64>())
}

/// Operator of a symbol.
pub fn quantize_symbol(symbol: &PhaseFunctionG, p: f64) -> Result<DMatrix<Complex64>> {
    quantize(&hat_from_symbol(symbol), p)
}

/// Symbol of an operator.
pub fn symbol_of(op: &DMatrix<Complex64>, group: &FiniteAbelianGroup, p: f64) -> Result<PhaseFunctionG> {
    Ok(symbol_from_hat(&dequantize(op, group, p)?))
}

/// `Â` whose quantization is Hermitian: `Â(z) = X(z) + conj(X(−z)) ⟨π|x⟩^{1−2p}`.
pub fn hermitian_hat(x: &PhaseFunctionG, p: f64) -> Result<PhaseFunctionG> {
    let p = integer_exponent(p)?;
    let g = x.group();
    Ok(PhaseFunctionG::from_fn(g, |a, pi| {
        x.at(a, pi) + x.at(g.neg_index(a), g.neg_index(pi)).conj() * g.pairing_pow(pi, a, 1 - 2 * p)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::MaxNorm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(orders: &[usize]) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(orders).unwrap()
    }

    pub(crate) fn random_phase(g: &FiniteAbelianGroup, seed: u64) -> PhaseFunctionG {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PhaseFunctionG::from_fn(g, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn shift_op(g: &FiniteAbelianGroup, x: usize) -> DMatrix<Complex64> {
        weyl_by_index(g, x, 0, 0)
    }

    fn mod_op(g: &FiniteAbelianGroup, pi: usize) -> DMatrix<Complex64> {
        weyl_by_index(g, 0, pi, 0)
    }

    #[test]
    fn weyl_identity_unitarity_reordering() {
        let g = z(&[5]);
        let id = DMatrix::<Complex64>::identity(5, 5);
        for p in [0.0, 1.0] {
            assert_eq!(weyl_wp(&g, &g.element_at(0), &g.dual_at(0), p).unwrap(), id);
            for x in 0..5 {
                for pi in 0..5 {
                    let w = weyl_wp(&g, &g.element_at(x), &g.dual_at(pi), p).unwrap();
                    assert!((&w * w.adjoint() - &id).max_norm() < 1e-14);
                    let pk = p as i64;
                    let reordered = (mod_op(&g, pi) * shift_op(&g, x)) * g.pairing_pow(pi, x, pk - 1);
                    assert!((w - reordered).max_norm() < 1e-14);
                }
            }
        }
        assert!(matches!(weyl_wp(&g, &g.element_at(1), &g.dual_at(1), 0.5), Err(Error::UnsupportedExponent(_))));
        assert!(quantize(&PhaseFunctionG::zeros(&g), f64::NAN).is_err());
    }

    #[test]
    fn quantize_spike_and_roundtrip() {
        for orders in [vec![5], vec![4], vec![2, 3]] {
            let g = z(&orders);
            let n = g.size();
            for p in [0.0, 1.0, -1.0, 2.0] {
                let spike =
                    PhaseFunctionG::from_fn(&g, |x, pi| Complex64::new(if x == 0 && pi == 0 { 3.0 } else { 0.0 }, 0.0));
                let op = quantize(&spike, p).unwrap();
                let expected = DMatrix::<Complex64>::identity(n, n) * Complex64::new(3.0 / n as f64, 0.0);
                assert!((op - expected).max_norm() < 1e-15);
                let a = random_phase(&g, 7);
                let back = dequantize(&quantize(&a, p).unwrap(), &g, p).unwrap();
                assert!(back.max_abs_diff(&a) < 1e-12);
                let s = random_phase(&g, 8);
                assert!(symbol_from_hat(&hat_from_symbol(&s)).max_abs_diff(&s) < 1e-12);
                let m = DMatrix::from_fn(n, n, |i, j| Complex64::new((i * 3 + j) as f64, (i as f64) - (j as f64)));
                assert!((quantize(&dequantize(&m, &g, p).unwrap(), p).unwrap() - m).max_norm() < 1e-11);
            }
        }
    }

    #[test]
    fn hermitian_symbols() {
        let g = z(&[5]);
        for p in [0.0, 1.0] {
            let h = hermitian_hat(&random_phase(&g, 3), p).unwrap();
            let op = quantize(&h, p).unwrap();
            assert!((&op - op.adjoint()).max_norm() < 1e-13);
            let back = dequantize(&op.adjoint(), &g, p).unwrap();
            assert!(back.max_abs_diff(&h) < 1e-12);
        }
    }

    #[test]
    fn quantize_is_injective() {
        // the |G|² Weyl operators are linearly independent
        for orders in [vec![5], vec![3], vec![4]] {
            let g = z(&orders);
            let n = g.size();
            let cols: Vec<Complex64> = (0..n * n)
                .flat_map(|i| weyl_by_index(&g, i / n, i % n, 0).iter().cloned().collect::<Vec<_>>())
                .collect();
            let m = DMatrix::from_column_slice(n * n, n * n, &cols);
            let sv = m.svd(false, false).singular_values;
            assert!(sv.min() > 1e-8, "{orders:?}");
        }
    }

    proptest! {
        #[test]
        fn quantize_is_linear(seed in 0u64..1000, s in -2.0..2.0f64) {
            let g = z(&[3]);
            let a = random_phase(&g, seed);
            let b = random_phase(&g, seed + 1);
            let lhs = quantize(&a.add(&b.scale(Complex64::new(s, 0.5))).unwrap(), 1.0).unwrap();
            let rhs = quantize(&a, 1.0).unwrap() + quantize(&b, 1.0).unwrap() * Complex64::new(s, 0.5);
            prop_assert!((lhs - rhs).max_norm() < 1e-12);
        }
    }
}
