//! Weyl–Wigner–Moyal calculus on finite Abelian groups.

mod algebra;
mod group;
mod star;
mod weyl;

pub use algebra::{
    conservation_demo, group_algebra_operator, group_algebra_product, umklapp_fold, ConservationReport, Representation,
};
pub use group::{
    convolve, fourier, inverse_fourier, modulate, translate_g, DualElement, FiniteAbelianGroup, GroupElement,
    GroupFunction,
};
pub use star::{basis_rho, star_g, star_kernel, von_neumann_evolve_g, StarKernel};
pub use weyl::{
    dequantize, hat_from_symbol, hermitian_hat, quantize, quantize_symbol, symbol_from_hat, symbol_of, weyl_wp,
    PhaseFunctionG,
};
