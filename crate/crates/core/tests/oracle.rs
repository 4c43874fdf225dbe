use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use oscent::entanglement::{excitation_profile, excited_diagonal, ground_eigenvalue};
use oscent::hamiltonian::{assemble_anderson, assemble_custom};
use oscent::oracle::bruteforce::{reduced_state_bruteforce, State};
use oscent::oracle::gaussian::generalized_gaussian_integral;
use oscent::oracle::kernel::{t_sigma_eigencheck, GaussKernel};
use oscent::spectral::BipartiteSystem;
use oscent::{Lattice, Region};
use proptest::prelude::*;

fn two_site(k0: f64, k1: f64, inside: usize) -> BipartiteSystem<f64> {
    let lat = Arc::new(Lattice::build_box(1, &[2]).unwrap());
    let h = assemble_anderson(lat.clone(), &[k0, k1]).unwrap();
    BipartiteSystem::new(&h, &Region::from_indices(lat, &[inside]).unwrap()).unwrap()
}

#[test]
fn coupled_two_site_ground_weight() {
    let sys = two_site(1.0, 1.0, 0);
    let mu = sys.symplectic.mu[0];
    let bf = reduced_state_bruteforce(&sys, State::Ground, &[0]).unwrap();
    assert_relative_eq!(bf, 2.0 / (1.0 + mu), epsilon = 1e-9);
    assert_relative_eq!(bf, 0.981_376_0, epsilon = 1e-7);
}

#[test]
fn decoupled_two_site() {
    let lat = Arc::new(Lattice::build_box(1, &[2]).unwrap());
    let h = assemble_custom(lat.clone(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.5])).unwrap();
    let sys = BipartiteSystem::new(&h, &Region::from_indices(lat, &[0]).unwrap()).unwrap();
    assert_relative_eq!(reduced_state_bruteforce(&sys, State::Ground, &[0]).unwrap(), 1.0, epsilon = 1e-9);
    assert!(reduced_state_bruteforce(&sys, State::Ground, &[2]).unwrap().abs() < 1e-9);
    // the lowest mode lives on site 0
    assert!(reduced_state_bruteforce(&sys, State::Excited(0), &[0]).unwrap().abs() < 1e-9);
    assert_relative_eq!(reduced_state_bruteforce(&sys, State::Excited(0), &[1]).unwrap(), 1.0, epsilon = 1e-9);
}

#[test]
fn kernel_and_gaussian_oracles() {
    for sigma in [-0.9, -0.5, -0.1] {
        let k = GaussKernel::new(sigma).unwrap();
        let c = t_sigma_eigencheck(&k, 6, 120).unwrap();
        assert!(c.converged && c.residual < 1e-8);
    }
    let a = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
    let j = DVector::from_vec(vec![0.2, -0.4]);
    let k = DVector::from_vec(vec![0.7, 0.1]);
    for c in generalized_gaussian_integral(&a, &j, &k, 6, 48).unwrap() {
        assert!(c.relative_error < 1e-8, "l = {}: {:e}", c.l, c.relative_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn formulas_match_quadrature(k0 in 0.2f64..4.0, k1 in 0.2f64..4.0, inside in 0usize..2, n in 0usize..3) {
        let sys = two_site(k0, k1, inside);
        let sp = &sys.symplectic;
        let g = reduced_state_bruteforce(&sys, State::Ground, &[n]).unwrap();
        prop_assert!((g - ground_eigenvalue(sp, &[n]).unwrap()).abs() < 1e-8);
        for k in 0..2 {
            let p = excitation_profile(&sys.spectral, &sys.blocks, sp, k).unwrap();
            let e = reduced_state_bruteforce(&sys, State::Excited(k), &[n]).unwrap();
            prop_assert!((e - excited_diagonal(&p, sp, &[n]).unwrap()).abs() < 1e-8);
        }
    }
}
