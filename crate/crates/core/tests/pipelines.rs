//! Cross-module pipelines through the public API.

use num_complex::Complex64;
use phasespace::grid::{split_step_evolve, GridSpec, WaveFunction};
use phasespace::heisenberg::{adjoint_action, PhaseShift};
use phasespace::io::{format_field, parse_field, read_field, write_field, Field};
use phasespace::lca::{self, FiniteAbelianGroup, PhaseFunctionG};
use phasespace::star::{moyal_bracket, star};
use phasespace::wigner::{
    self, coherent_state, entropy, hs_inner, kernel_to_phase, phase_to_kernel, trace, wigner_of_pure, CoherentParams,
    DensityKernel, PhaseSpaceFunction,
};

fn grid() -> GridSpec {
    GridSpec::new(1, 64, 16.0, 1.0, 1.0).unwrap()
}

#[test]
fn state_file_to_purity() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid();
    let psi = coherent_state(&CoherentParams::standard(vec![0.7], vec![0.2]).unwrap(), &g).unwrap();
    let path = dir.path().join("psi.wwmv");
    write_field(&path, &Field::Wave(psi.clone())).unwrap();
    let Field::Wave(back) = read_field(&path).unwrap() else { panic!("kind changed") };
    assert_eq!(back, psi);
    let rho = wigner_of_pure(&back);
    let purity = trace(&star(&rho, &rho).unwrap());
    assert!((purity - 1.0).norm() < 1e-12);
    assert!((hs_inner(&rho, &rho).unwrap().re - 1.0).abs() < 1e-12);
}

#[test]
fn phase_shift_moves_the_wigner_function() {
    let g = grid();
    let psi = coherent_state(&CoherentParams::standard(vec![0.0], vec![0.0]).unwrap(), &g).unwrap();
    let (steps_q, steps_p) = (5, -3);
    let s = PhaseShift::from_momentum(vec![steps_q as f64 * g.dq()], vec![steps_p as f64 * g.dp()], 1.0).unwrap();
    let moved = kernel_to_phase(&adjoint_action(&DensityKernel::from_pure(&psi), &s).unwrap());
    let rho = wigner_of_pure(&psi);
    let n = g.points();
    let shifted = PhaseSpaceFunction::new(
        g.clone(),
        (0..n * n)
            .map(|i| {
                let (a, b) = (i / n, i % n);
                let src = ((a + n) as i64 - steps_q) as usize % n * n + ((b + n) as i64 - steps_p) as usize % n;
                rho.values()[src]
            })
            .collect(),
    )
    .unwrap();
    assert!(moved.max_abs_diff(&shifted) < 1e-12);
}

#[test]
fn schrodinger_and_von_neumann_agree_on_harmonic_motion() {
    let g = grid();
    let psi = coherent_state(&CoherentParams::standard(vec![1.5], vec![0.0]).unwrap(), &g).unwrap();
    let v: Vec<Complex64> = (0..64).map(|j| Complex64::new(g.position(j).powi(2) / 2.0, 0.0)).collect();
    let h = PhaseSpaceFunction::from_real_fn(&g, |q, p| (q[0] * q[0] + p[0] * p[0]) / 2.0);
    let (dt, steps) = (0.005, 200);
    let wave = split_step_evolve(&psi, &v, dt, steps).unwrap();
    let rho = phasespace::star::von_neumann_evolve(&wigner_of_pure(&psi), &h, dt, steps).unwrap();
    // second-order splitting against fourth-order RK
    assert!(rho.max_abs_diff(&wigner_of_pure(&wave)) < 1e-3);
    let x = PhaseSpaceFunction::from_real_fn(&g, |q, _| q[0]);
    let mean = wigner::expectation(&rho, &x).unwrap();
    assert!((mean - 1.5 * 1f64.cos()).abs() < 1e-6);
}

#[test]
fn mixtures_have_entropy_and_lose_purity() {
    let g = grid();
    let a = coherent_state(&CoherentParams::standard(vec![-3.0], vec![0.0]).unwrap(), &g).unwrap();
    let b = coherent_state(&CoherentParams::standard(vec![3.0], vec![0.0]).unwrap(), &g).unwrap();
    let k = DensityKernel::mixture(&[0.5, 0.5], &[a, b]).unwrap();
    let rho = kernel_to_phase(&k);
    assert!((trace(&rho) - 1.0).norm() < 1e-12);
    assert!((trace(&star(&rho, &rho).unwrap()).re - 0.5).abs() < 1e-8);
    assert!((entropy(&k).unwrap() - 2f64.ln()).abs() < 1e-8);
    assert!((phase_to_kernel(&rho).values() - k.values()).iter().all(|d| d.norm() < 1e-12));
    // a state commutes with itself
    assert!(moyal_bracket(&rho, &rho).unwrap().max_abs() < 1e-10);
}

#[test]
fn group_fields_survive_the_text_format_and_multiply() {
    let g = FiniteAbelianGroup::new(&[3, 4]).unwrap();
    let a = lca::basis_rho(&g, &g.element_at(1), &g.element_at(5));
    let text = format_field(&Field::PhaseG(a.clone()));
    let Field::PhaseG(back) = parse_field(&text).unwrap() else { panic!("kind changed") };
    assert_eq!(back, a);
    let u = lca::star_kernel(&g, 0.0).unwrap().unit().unwrap();
    assert!(lca::star_g(&u, &back, 0.0).unwrap().max_abs_diff(&a) < 1e-10);
    let zero = PhaseFunctionG::zeros(&g);
    assert_eq!(lca::star_g(&zero, &a, 1.0).unwrap().max_abs(), 0.0);
}

#[test]
fn mismatched_grids_are_errors() {
    let g = grid();
    let h = GridSpec::new(1, 64, 16.0, 0.5, 1.0).unwrap();
    let a = PhaseSpaceFunction::constant(&g, Complex64::new(1.0, 0.0));
    let b = PhaseSpaceFunction::constant(&h, Complex64::new(1.0, 0.0));
    assert!(star(&a, &b).is_err());
    assert!(WaveFunction::new(g, vec![Complex64::new(0.0, 0.0); 3]).is_err());
}
