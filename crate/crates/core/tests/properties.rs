use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use omcluster::graph::grid_graph;
use omcluster::metrics::{fidelity, nullifier_matrix, nullifier_variances, purity_check};
use omcluster::model_full::squeezed_bath_moments;
use omcluster::numerics::{real_part, symmetric_function, RMatrix};
use omcluster::synthesis::{response_d, synthesize, DetuningPolicy, SynthesisOptions};
use omcluster::target::{check_constraints, rect_target, target_covariance};

fn shapes() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(1, 3), (1, 5), (2, 3), (3, 3)])
}

/// Random mixed Gaussian state `S diag(ν, ν) Sᵀ` with `S = exp([[X, Y], [Y, -X]])`
/// symplectic for symmetric `X`, `Y`.
fn random_state(n: usize, seed: &[f64]) -> RMatrix {
    let at = |k: usize| seed[k % seed.len()];
    let sym = |off: usize| RMatrix::from_fn(n, n, |i, j| 0.4 * (at(off + i * n + j) + at(off + j * n + i)));
    let (x, y) = (sym(0), sym(n * n));
    let mut h = RMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&x);
    h.view_mut((n, n), (n, n)).copy_from(&(-&x));
    h.view_mut((0, n), (n, n)).copy_from(&y);
    h.view_mut((n, 0), (n, n)).copy_from(&y);
    let s = real_part(&symmetric_function(&h, |v| Complex64::new(v.exp(), 0.0)));
    let nu = DVector::from_fn(2 * n, |i, _| 1.0 + at(2 * n * n + i % n).abs());
    &s * RMatrix::from_diagonal(&nu) * s.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fidelity_is_symmetric(seed_a in prop::collection::vec(-1.0f64..1.0, 16), seed_b in prop::collection::vec(-1.0f64..1.0, 16)) {
        let a = random_state(2, &seed_a);
        let b = random_state(2, &seed_b);
        let fab = fidelity(&a, &b).unwrap();
        let fba = fidelity(&b, &a).unwrap();
        prop_assert!((fab - fba).abs() < 1e-12);
        prop_assert!(fab > 0.0 && fab <= 1.0 + 1e-12);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0 / a.determinant().sqrt()).abs() < 1e-9);
        prop_assert!(purity_check(&a).unwrap().physical);
    }

    #[test]
    fn nullifiers_follow_relabelling(shape in shapes(), z in 0.0f64..1.5, perm_seed in any::<u64>()) {
        let graph = grid_graph(shape.0, shape.1).unwrap();
        let n = graph.n_nodes();
        let spec = rect_target(&graph, 1e-3, 1e-3, z).unwrap();
        let e = target_covariance(&spec);

        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let moved = graph.permuted(&perm).unwrap();
        let mut theta_moved = vec![0.0; n];
        for k in 0..n {
            theta_moved[perm[k]] = spec.theta[k];
        }
        let e_moved = RMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let src = |x: usize| if x < n { perm.iter().position(|&p| p == x).unwrap() } else { n + perm.iter().position(|&p| p == x - n).unwrap() };
            e[(src(i), src(j))]
        });
        let before = nullifier_variances(&e, &nullifier_matrix(&graph, &spec.theta).unwrap()).unwrap();
        let after = nullifier_variances(&e_moved, &nullifier_matrix(&moved, &theta_moved).unwrap()).unwrap();
        for k in 0..n {
            prop_assert!((after[perm[k]] - before[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn target_is_pure_and_realizable(shape in shapes(), z in -2.0f64..2.0) {
        let spec = rect_target(&grid_graph(shape.0, shape.1).unwrap(), 1e-3, 1e-3, z).unwrap();
        let report = purity_check(&target_covariance(&spec)).unwrap();
        prop_assert!(report.is_pure(1e-8), "{report:?}");
        prop_assert!(check_constraints(&spec).realizable());
    }

    #[test]
    fn squeezing_shrinks_nullifiers(shape in shapes(), z in 0.0f64..2.0, dz in 0.05f64..1.0) {
        let graph = grid_graph(shape.0, shape.1).unwrap();
        let lo = rect_target(&graph, 1e-3, 1e-3, z).unwrap();
        let hi = rect_target(&graph, 1e-3, 1e-3, z + dz).unwrap();
        let set = nullifier_matrix(&graph, &lo.theta).unwrap();
        let v_lo = nullifier_variances(&target_covariance(&lo), &set).unwrap();
        let v_hi = nullifier_variances(&target_covariance(&hi), &set).unwrap();
        for (a, b) in v_lo.iter().zip(&v_hi) {
            prop_assert!(b < a);
        }
    }

    #[test]
    fn synthesis_round_trips(
        shape in shapes(),
        j0 in 1e-4f64..1e-2,
        j in 1e-4f64..1e-2,
        z in 0.1f64..1.5,
        positive in any::<bool>(),
    ) {
        let spec = rect_target(&grid_graph(shape.0, shape.1).unwrap(), j0, j, z).unwrap();
        let policy = if positive { DetuningPolicy::AllPositive } else { DetuningPolicy::MixedSign };
        let plan = synthesize(&spec, &SynthesisOptions::new(policy, 30.0, 0.01)).unwrap();
        prop_assert!(plan.round_trip_residual <= 1e-9);
        prop_assert_eq!(plan.gbar.ncols(), spec.n());
        if positive {
            prop_assert!(plan.detunings.iter().all(|&d| d > 0.0));
        }
    }

    #[test]
    fn response_is_odd_in_detuning(kappa in 1e-4f64..2.0, delta in 0.0f64..100.0) {
        let d = response_d(kappa, delta, 1.0);
        prop_assert!((d + response_d(kappa, -delta, 1.0)).abs() <= 1e-14 * d.abs().max(1.0));
    }

    #[test]
    fn squeezed_bath_is_minimum_uncertainty(r in 0.0f64..3.0, phi in -3.2f64..3.2) {
        let (ns, ms) = squeezed_bath_moments(r, phi);
        prop_assert!((ms.norm_sqr() - ns * (ns + 1.0)).abs() <= 1e-12 * (1.0 + ns * ns));
    }
}
