mod common;

use common::*;
use kronsample::bench::{exhaustive_dense, exhaustive_diag, SEARCH_LIMIT};
use kronsample::dense::objective_g;
use kronsample::diag::objective_q;
use kronsample::multilinear::{subselect, Matrix};
use kronsample::{
    greedy_dense, greedy_dense_path, greedy_diag, greedy_diag_path, metrics, Complement, DenseConstraints,
    DiagConstraints, Error, GreedyTrace, MultilinearModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complement_after(trace: &GreedyTrace, steps: usize) -> Complement {
    trace.selection_after(steps).complement()
}

/// Every recorded objective equals the from-scratch surrogate of the same removal set, and
/// every step picked a best feasible candidate.
fn check_trace(model: &MultilinearModel, trace: &GreedyTrace, caps: &[usize]) {
    let f = |c: &Complement| {
        if model.is_diagonal() {
            objective_q(model, c).unwrap()
        } else {
            objective_g(model, c).unwrap()
        }
    };
    let scale = f(&all_removed(model)).max(1.0);
    for (t, step) in trace.steps.iter().enumerate() {
        let before = complement_after(trace, t);
        let after = complement_after(trace, t + 1);
        let scratch = f(&after);
        assert!((scratch - step.objective).abs() <= 1e-9 * scale, "step {t}: {scratch} vs {}", step.objective);
        let removed = before.removed();
        for d in 0..model.order() {
            if removed[d].len() >= caps[d] {
                continue;
            }
            for x in 0..model.dims()[d] {
                if let Some(c) = before.with(d, x) {
                    assert!(f(&c) <= scratch + 1e-9 * scale, "step {t}: ({d},{x}) beats the greedy pick");
                }
            }
        }
    }
}

/// Every row removed, where the surrogate peaks.
fn all_removed(model: &MultilinearModel) -> Complement {
    let removed = model.dims().iter().map(|&n| (0..n).collect()).collect();
    Complement::new(&model.dims(), removed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dense_incremental_matches_scratch(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = dense_model(&[5, 6, 4], &[2, 3, 2], true, &mut rng);
        let cons = DenseConstraints::new(8);
        let trace = greedy_dense(&m, &cons).unwrap();
        check_trace(&m, &trace, &cons.caps(&m).unwrap());
    }

    #[test]
    fn diag_incremental_matches_scratch(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = diag_model(&[5, 6, 4], 3, true, &mut rng);
        let cons = DiagConstraints::new(7);
        let trace = greedy_diag(&m, &cons).unwrap();
        check_trace(&m, &trace, &cons.bounds(&m).unwrap().caps);
    }

    #[test]
    fn budgets_are_prefixes_of_the_path(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = dense_model(&[5, 6], &[2, 3], false, &mut rng);
        let path = greedy_dense_path(&m, &[]).unwrap();
        for l in 5..=11 {
            let t = greedy_dense(&m, &DenseConstraints::new(l)).unwrap();
            prop_assert_eq!(&t.selection, &path.selection_after(11 - l));
            prop_assert_eq!(&t.steps[..], &path.steps[..11 - l]);
        }
        let d = diag_model(&[4, 5, 3], 2, true, &mut rng);
        let path = greedy_diag_path(&d, None, &[]).unwrap();
        for l in 4..=12 {
            let t = greedy_diag(&d, &DiagConstraints::new(l)).unwrap();
            prop_assert_eq!(&t.selection, &path.selection_after(12 - l));
        }
    }

    #[test]
    fn greedy_is_half_optimal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = dense_model(&[4, 4], &[2, 2], true, &mut rng);
        let cons = DenseConstraints::new(5);
        let g = greedy_dense(&m, &cons).unwrap();
        let o = exhaustive_dense(&m, &cons, SEARCH_LIMIT).unwrap();
        prop_assert!(g.objective_final >= 0.5 * o.objective);
        prop_assert!(g.objective_final <= o.objective * (1.0 + 1e-12));
        let d = diag_model(&[4, 5], 2, true, &mut rng);
        let cons = DiagConstraints::new(4);
        let g = greedy_diag(&d, &cons).unwrap();
        let o = exhaustive_diag(&d, &cons, SEARCH_LIMIT).unwrap();
        prop_assert!(g.objective_final >= 0.5 * o.objective);
        prop_assert!(g.objective_final <= o.objective * (1.0 + 1e-12));
    }
}

#[test]
fn dense_example_is_half_optimal() {
    // N = (4, 4), K = (2, 2), no slack, L = 5
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = dense_model(&[4, 4], &[2, 2], false, &mut rng);
        let cons = DenseConstraints::new(5);
        let g = greedy_dense(&m, &cons).unwrap();
        let o = exhaustive_dense(&m, &cons, SEARCH_LIMIT).unwrap();
        assert_eq!(o.searched, 2 * 4 * 6);
        assert!(g.objective_final >= 0.5 * o.objective);
        assert_eq!(g.selection.sensors(), 5);
    }
}

#[test]
fn full_budget_removes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = dense_model(&[4, 5], &[2, 2], true, &mut rng);
    let t = greedy_dense(&m, &DenseConstraints::new(9)).unwrap();
    assert!(t.steps.is_empty());
    assert_eq!(t.objective_final, 0.0);
    assert_eq!(t.selection, kronsample::Selection::full(&[4, 5]));
}

#[test]
fn infeasible_budgets_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = dense_model(&[4, 5], &[2, 2], true, &mut rng);
    for l in [3, 10] {
        let e = greedy_dense(&m, &DenseConstraints::new(l)).unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)), "{e}");
        assert_eq!(e.exit_code(), 2);
    }
    let e = greedy_dense(&m, &DenseConstraints::new(6).with_slack(vec![3, 0])).unwrap_err();
    assert!(matches!(e, Error::Infeasible(_)));
    let d = diag_model(&[4, 5], 3, true, &mut rng);
    // floor is 1 + 3 = 4 with domain 1 privileged
    assert!(matches!(greedy_diag(&d, &DiagConstraints::new(3)), Err(Error::Infeasible(_))));
    assert!(greedy_diag(&d, &DiagConstraints::new(4)).is_ok());
    assert!(matches!(
        greedy_diag(&d, &DiagConstraints::new(5).with_privileged(2)),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn rank_deficient_dense_result_is_reported() {
    // three parallel rows and one strong orthogonal row: the strong row goes first, which
    // leaves only parallel rows behind
    let u = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 10.0]]).unwrap();
    let m = MultilinearModel::dense(vec![u]).unwrap();
    let e = greedy_dense(&m, &DenseConstraints::new(2)).unwrap_err();
    assert!(matches!(e, Error::Identifiability { domain: Some(0), .. }), "{e}");
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn rank_deficient_privileged_factor_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // rank-1 privileged factor without zero columns
    let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [-1.0, -2.0], [3.0, 6.0], [0.5, 1.0]]).unwrap();
    let m = MultilinearModel::diagonal(vec![random_matrix(3, 2, false, &mut rng), bad]).unwrap();
    let e = greedy_diag(&m, &DiagConstraints::new(4)).unwrap_err();
    assert!(matches!(e, Error::Identifiability { domain: Some(1), .. }), "{e}");
}

#[test]
fn minimal_diagonal_budget_is_identifiable() {
    // L = K_c + R − 1: one row in every domain but the privileged one
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kc in 1..=4 {
        let m = diag_model(&[6, 7, 8], kc, true, &mut rng);
        let t = greedy_diag_path(&m, None, &[]).unwrap();
        assert_eq!(t.selection.sensors(), kc + 2);
        assert_eq!(t.selection.counts(), vec![1, 1, kc]);
        let rc = t.rank_check.as_ref().unwrap();
        assert!(rc.full_rank);
        assert_eq!(rc.privileged, 2);
        let met = metrics(&subselect(&m, &t.selection).unwrap()).unwrap();
        assert!(!met.unidentifiable && met.mse.is_finite());
    }
}

#[test]
fn ties_break_toward_lowest_domain_then_element() {
    // identical rows everywhere: every candidate scores the same at the first step
    let m = MultilinearModel::dense(vec![Matrix::ones(3, 1), Matrix::ones(3, 1)]).unwrap();
    let t = greedy_dense(&m, &DenseConstraints::new(5)).unwrap();
    assert_eq!((t.steps[0].domain, t.steps[0].element), (0, 0));
    let d = MultilinearModel::diagonal(vec![Matrix::ones(2, 1), Matrix::ones(2, 1)]).unwrap();
    let t = greedy_diag(&d, &DiagConstraints::new(3)).unwrap();
    assert_eq!((t.steps[0].domain, t.steps[0].element), (0, 0));
}

#[test]
fn trace_serializes_iterations() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = dense_model(&[4, 5], &[2, 2], true, &mut rng);
    let t = greedy_dense(&m, &DenseConstraints::new(6)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
    assert_eq!(v["iterations"].as_array().unwrap().len(), 3);
    assert!(v["gamma"].as_f64().unwrap() >= 0.5);
    let back: GreedyTrace = serde_json::from_value(v).unwrap();
    assert_eq!(back.selection, t.selection);
}

#[test]
fn objective_values_increase() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m = diag_model(&[6, 6, 6], 3, true, &mut rng);
    let t = greedy_diag_path(&m, None, &[]).unwrap();
    let v = t.objective_values();
    assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert!(t.steps.iter().all(|s| s.gain >= -1e-9));
}
