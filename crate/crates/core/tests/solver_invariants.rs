use campaignctl::solver::{solve, Solution};
use campaignctl::{ControlProblem, RateProfile, SirParams, SisParams, SolverOptions};
use proptest::prelude::*;

fn tight_fbs() -> SolverOptions {
    SolverOptions {
        tol_control: 1e-9,
        ..SolverOptions::fbs()
    }
}

/// Returns (state reproduction, transversality, clamp) errors.
fn audit<const N: usize, const M: usize, P: ControlProblem<N, M>>(p: &P, s: &Solution<N, M>) -> (f64, f64, f64) {
    let replay = p.simulate(&s.controls).unwrap();
    let state_err = replay
        .states()
        .iter()
        .zip(s.state.states())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let target = p.terminal_costate();
    let lam_t = s.terminal_costate();
    let tr = (0..N).map(|n| (lam_t[n] - target[n]).powi(2)).sum::<f64>().sqrt();
    let hm = p.hamiltonian_controls(&s.state, &s.adjoint).unwrap();
    let clamp = hm
        .iter()
        .zip(&s.controls)
        .map(|(a, b)| a.sup_distance(b).unwrap())
        .fold(0.0, f64::max);
    (state_err, tr, clamp)
}

fn check<const N: usize, const M: usize, P: ControlProblem<N, M>>(p: &P, opts: &SolverOptions) {
    let s = solve(p, opts).unwrap();
    assert!(s.converged, "{:?} residual {}", opts.method, s.residual);
    let (state_err, tr, clamp) = audit(p, &s);
    assert!(state_err <= 1e-8, "state replay error {state_err:e}");
    assert!(tr <= opts.tol_residual, "transversality {tr:e}");
    assert!(clamp <= 1e-8, "clamp {clamp:e}");
    let bounds = p.control_bounds();
    for (u, ub) in s.controls.iter().zip(bounds) {
        assert!(u.min_value() >= 0.0 && u.max_value() <= ub);
    }
    let (j_none, _) = p.evaluate(&p.zero_controls()).unwrap();
    assert!(s.cost <= j_none + 1e-6, "J {} vs no control {}", s.cost, j_none);
}

#[test]
fn sis_baseline_invariants_both_methods() {
    let p = SisParams::default();
    check(&p, &SolverOptions::shooting());
    check(&p, &tight_fbs());
}

#[test]
fn sir_baseline_invariants_both_methods() {
    let p = SirParams::default();
    check(&p, &SolverOptions::shooting());
    check(&p, &tight_fbs());
}

#[test]
fn profile_instances_invariants() {
    for beta in [
        RateProfile::reference_sigmoid_up(),
        RateProfile::reference_sigmoid_down(),
        RateProfile::reference_cosine(),
    ] {
        check(&SisParams::default().with_beta(beta.clone()), &SolverOptions::shooting());
        check(&SirParams::default().with_beta(beta), &SolverOptions::shooting());
    }
}

#[test]
fn shooting_and_sweep_costs_agree() {
    let p = SisParams::default();
    let a = solve(&p, &SolverOptions::shooting()).unwrap();
    let b = solve(&p, &tight_fbs()).unwrap();
    assert!(((a.cost - b.cost) / a.cost).abs() <= 1e-5);
    let q = SirParams::default();
    let a = solve(&q, &SolverOptions::shooting()).unwrap();
    let b = solve(&q, &tight_fbs()).unwrap();
    assert!(((a.cost - b.cost) / a.cost).abs() <= 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sis_dominates_no_control(
        beta in 0.2f64..2.5,
        gamma in 0.05f64..0.5,
        t_final in 0.5f64..6.0,
        b in 2.0f64..50.0,
        i0 in 0.005f64..0.3,
    ) {
        let p = SisParams {
            beta: RateProfile::constant(beta),
            gamma: RateProfile::constant(gamma),
            t_final,
            b,
            i0,
            n_steps: 1000,
            ..SisParams::default()
        };
        let s = solve(&p, &SolverOptions::shooting()).unwrap();
        prop_assert!(s.converged);
        let (j_none, _) = p.evaluate(&p.zero_controls()).unwrap();
        prop_assert!(s.cost <= j_none + 1e-6);
        let (_, tr, clamp) = audit(&p, &s);
        prop_assert!(tr <= 1e-6 && clamp <= 1e-8);
    }

    #[test]
    fn sir_dominates_no_control(
        beta in 0.05f64..2.0,
        gamma in 0.05f64..0.4,
        t_final in 0.5f64..6.0,
        b in 2.0f64..50.0,
        c in 0.3f64..3.0,
    ) {
        let p = SirParams {
            beta: RateProfile::constant(beta),
            gamma: RateProfile::constant(gamma),
            t_final,
            b,
            c,
            n_steps: 1000,
            ..SirParams::default()
        };
        let s = solve(&p, &SolverOptions::shooting()).unwrap();
        prop_assert!(s.converged);
        let (j_none, _) = p.evaluate(&p.zero_controls()).unwrap();
        prop_assert!(s.cost <= j_none + 1e-6);
    }
}
