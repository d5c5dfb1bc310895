use nalgebra::{DMatrix, DVector};

use super::*;
use crate::grid::{ensure_feasible_and_unique, AugmentOptions, Device, Generator, Line, Network, Storage};
use crate::qp::{assemble, RowTag};
use crate::solver::{solve_at, SolverOptions};
use crate::synthetic::{random_instance, storage_toy, RandomSpec};

fn demand(rows: &[&[f64]]) -> DemandSchedule {
    DemandSchedule::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

struct Solved {
    net: Network,
    qp: ParametricQP,
    sol: PrimalDualSolution,
    d: DemandSchedule,
}

fn solved(net: &Network, d: &DemandSchedule) -> Solved {
    let net = ensure_feasible_and_unique(net, AugmentOptions::default());
    let qp = assemble(&net).unwrap();
    let sol = solve_at(&qp, d, &SolverOptions::default()).unwrap();
    Solved {
        net,
        qp,
        sol,
        d: d.clone(),
    }
}

fn lmes(s: &Solved) -> LmeResult {
    compute_lmes(&s.qp, &s.d, &s.sol, &LmeOptions::default()).unwrap()
}

fn fd(s: &Solved) -> Vec<Vec<f64>> {
    finite_difference_lmes(&s.net, &s.d, 1e-3, &SolverOptions::default()).unwrap()
}

fn to_dense(m: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c))
}

/// `dx*/dD` from `J_y K · dy = −J_D K`, dense LU.
fn solution_jacobian(j: &KktJacobians) -> DMatrix<f64> {
    let jx = to_dense(&j.jx);
    let jd = to_dense(&j.jd);
    let dy = jx.lu().solve(&(-jd)).expect("nonsingular Jacobian");
    dy.rows(0, j.n_x).into_owned()
}

fn two_gen_merit() -> Network {
    Network::new(1, 1)
        .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.5)))
        .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 2.0, 1.0)))
}

#[test]
fn emissions_of_linear_dispatch() {
    let net = Network::new(1, 2).with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.5)));
    let s = solved(&net, &demand(&[&[5.0], &[5.0]]));
    let e = emissions(&s.qp, &s.sol);
    assert!((e.per_period[0] - 2.5).abs() < 1e-8 && (e.per_period[1] - 2.5).abs() < 1e-8);
    assert!((e.total - 5.0).abs() < 1e-8);

    let clean = Network::new(1, 1).with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.0)));
    let s = solved(&clean, &demand(&[&[7.0]]));
    assert_eq!(emissions(&s.qp, &s.sol).total, 0.0);
}

#[test]
fn emissions_scale_with_period_length() {
    let mut net = Network::new(1, 1).with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.5)));
    net.period_hours = 0.25;
    let s = solved(&net, &demand(&[&[4.0]]));
    assert!((emissions(&s.qp, &s.sol).total - 0.5).abs() < 1e-8);
    let l = lmes(&s);
    assert!((l.lambda[0][0] - 0.125).abs() < 1e-8);
}

#[test]
fn classify_interior_and_capped_generators() {
    let s = solved(&two_gen_merit(), &demand(&[&[5.0]]));
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, None).unwrap();
    let row = |tag| s.qp.in_tags.iter().position(|t| *t == tag).unwrap();
    assert!(a.inactive.contains(&row(RowTag::Upper { device: 0, t: 0 })));
    assert!(a.inactive.contains(&row(RowTag::Lower { device: 0, t: 0 })));
    assert!(a.active.contains(&row(RowTag::Lower { device: 1, t: 0 })));
    assert!(!a.is_degenerate());

    let s = solved(&two_gen_merit(), &demand(&[&[12.0]]));
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, None).unwrap();
    assert!(a.active.contains(&row(RowTag::Upper { device: 0, t: 0 })));
    let mut all: Vec<usize> = a.active.iter().chain(&a.inactive).chain(&a.degenerate).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..s.qp.n_in()).collect::<Vec<_>>());
}

#[test]
fn cost_tie_at_capacity_is_degenerate() {
    // Gen 0 ($1, 10 MW) serves demand 10 exactly. Gen 1 also costs $1 plus the
    // regularizing quadratic term: at demand 10 the KKT point has gen 0 at its
    // cap with a multiplier equal to the tiny quadratic slope of gen 1.
    let net = Network::new(1, 1)
        .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.5)))
        .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0 + 2e-5, 1.0)));
    let mut s = solved(&net, &demand(&[&[10.0]]));
    // By hand: ν = −(1 + 2e-5 + 2·1e-6·g1) at g1 ≈ 0, so λ_upper ≈ 2e-5 − 2e-5.
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, Some(1e-4)).unwrap();
    let upper = s.qp.in_tags.iter().position(|t| *t == RowTag::Upper { device: 0, t: 0 }).unwrap();
    assert!(a.degenerate.contains(&upper), "{a:?} λ = {}", s.sol.lambda[upper]);
    s.sol.lambda[upper] = 1.0;
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, Some(1e-4)).unwrap();
    assert!(a.active.contains(&upper));
}

#[test]
fn single_variable_jacobian() {
    let net = Network::new(1, 1).with_device(Device::StaticGenerator(Generator::new(0, 100.0, 1.0, 0.0)));
    let s = solved(&net, &demand(&[&[5.0]]));
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, None).unwrap();
    let j = build_kkt_jacobians(&s.qp, &s.d, &s.sol, &a, JacobianForm::Reduced).unwrap();
    let dx = solution_jacobian(&j);
    assert!((dx[(0, 0)] - 1.0).abs() < 1e-9);
    // The curtailment unit sits at its lower bound and does not move.
    assert!(dx[(1, 0)].abs() < 1e-9);
}

#[test]
fn bound_pinned_variable_has_zero_sensitivity() {
    let net = Network::new(1, 1)
        .with_device(Device::StaticGenerator(Generator::new(0, 100.0, 1.0, 0.0).with_min(3.0)))
        .with_device(Device::StaticGenerator(Generator::new(0, 100.0, 0.5, 0.0)));
    let s = solved(&net, &demand(&[&[10.0]]));
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, None).unwrap();
    let j = build_kkt_jacobians(&s.qp, &s.d, &s.sol, &a, JacobianForm::Reduced).unwrap();
    let dx = solution_jacobian(&j);
    assert!(dx[(0, 0)].abs() < 1e-9);
    assert!((dx[(1, 0)] - 1.0).abs() < 1e-9);
}

#[test]
fn reduced_and_complementarity_forms_agree() {
    let net = Network::new(2, 2)
        .with_line(Line::new(0, 1, 10.0, 8.0))
        .with_device(Device::StaticGenerator(Generator::new(0, 30.0, 10.0, 0.9).with_quad(0.05)))
        .with_device(Device::StaticGenerator(Generator::new(1, 30.0, 20.0, 0.4).with_quad(0.1)))
        .with_device(Device::StaticGenerator(Generator::new(0, vec![30.0, 5.0], 15.0, 0.6).with_quad(0.02)))
        .with_computed_ptdf()
        .unwrap();
    let s = solved(&net, &demand(&[&[12.0, 20.0], &[18.0, 9.0]]));
    let a = classify_active_set(&s.qp, &s.d, &s.sol, None, None).unwrap();
    assert!(!a.is_degenerate());
    let reduced = solution_jacobian(&build_kkt_jacobians(&s.qp, &s.d, &s.sol, &a, JacobianForm::Reduced).unwrap());
    let full = solution_jacobian(&build_kkt_jacobians(&s.qp, &s.d, &s.sol, &a, JacobianForm::Complementarity).unwrap());
    let gap = (&reduced - &full).abs().max();
    assert!(gap <= 1e-8, "gap {gap}");
    // And the adjoint LMEs equal the forward Jacobian contracted with v.
    let v = DVector::from_vec(s.qp.emis_vec.clone());
    let forward = reduced.transpose() * v;
    let l = lmes(&s);
    for (k, f) in forward.iter().enumerate() {
        assert!((l.lambda[k / 2][k % 2] - f).abs() < 1e-9);
    }
}

#[test]
fn dependent_binding_rows_are_reported() {
    // Static restriction of the toy: in period 2 the pinned battery meets
    // demand alone, so the gas and curtailment lower bounds and the balance
    // row are linearly dependent.
    let (net, d) = storage_toy();
    let s = solved(&net, &d);
    let st = static_approximation(&s.net, &d, &s.qp, &s.sol, &SolverOptions::default(), &LmeOptions::default()).unwrap();
    let a = classify_active_set(&st.qp, &d, &st.solution, None, None).unwrap();
    let err = build_kkt_jacobians(&st.qp, &d, &st.solution, &a, JacobianForm::Reduced).unwrap_err();
    assert!(matches!(err, Error::SingularJacobian { .. }), "{err}");
    assert!(st.lme.degenerate);
}

#[test]
fn storage_toy_dynamic_and_static() {
    let (net, d) = storage_toy();
    let s = solved(&net, &d);
    let dynamic = lmes(&s);
    assert!(dynamic.lambda[0][0].abs() < 1e-6 && dynamic.lambda[1][0].abs() < 1e-6, "{dynamic:?}");
    assert!(dynamic.emissions_total.abs() < 1e-6);
    let st = static_approximation(&s.net, &d, &s.qp, &s.sol, &SolverOptions::default(), &LmeOptions::default()).unwrap();
    let l = &st.lme.lambda;
    assert!(l[0][0].abs() < 1e-6 && (l[1][0] - 500.0).abs() < 1e-6, "{l:?}");
    // The oracle sees the same dynamic values.
    let f = fd(&s);
    assert!(f[0][0].abs() < 1e-6 && f[1][0].abs() < 1e-6, "{f:?}");
}

#[test]
fn merit_order_marginal_unit() {
    for (demand_mw, expect) in [(5.0, 0.5), (12.0, 1.0)] {
        let s = solved(&two_gen_merit(), &demand(&[&[demand_mw]]));
        let l = lmes(&s);
        assert!(!l.degenerate);
        assert!((l.lambda[0][0] - expect).abs() < 1e-6, "demand {demand_mw}: {:?}", l.lambda);
        assert!((fd(&s)[0][0] - expect).abs() < 1e-6);
    }
}

#[test]
fn single_quadratic_generator_fd_matches_rate() {
    let net = Network::new(1, 1).with_device(Device::StaticGenerator(Generator::new(0, 100.0, 3.0, 0.7).with_quad(0.2)));
    let s = solved(&net, &demand(&[&[30.0]]));
    assert!((fd(&s)[0][0] - 0.7).abs() < 1e-6);
    assert!((lmes(&s).lambda[0][0] - 0.7).abs() < 1e-9);
}

#[test]
fn adjoint_residual_is_small() {
    for seed in 0..10 {
        let (net, d) = random_instance(seed, &RandomSpec::default());
        let s = solved(&net, &d);
        let l = lmes(&s);
        assert!(l.ift_residual <= IFT_TOL, "seed {seed}: {}", l.ift_residual);
        assert!(l.condition_estimate.is_finite() && l.condition_estimate >= 1.0);
        let sum: f64 = l.emissions_per_period.iter().sum();
        assert!((sum - l.emissions_total).abs() <= 1e-9 * (1.0 + sum.abs()));
    }
}

#[test]
fn uncongested_lmes_are_uniform_across_nodes() {
    for seed in 0..20 {
        let (net, d) = random_instance(seed, &RandomSpec::default());
        let s = solved(&net.uncongested(), &d);
        let l = lmes(&s);
        for row in &l.lambda {
            for v in row {
                assert!((v - row[0]).abs() <= 1e-8, "seed {seed}: {row:?}");
            }
        }
    }
}

#[test]
fn static_equals_dynamic_without_coupling() {
    let spec = RandomSpec {
        allow_storage: false,
        allow_ramp: false,
        ..Default::default()
    };
    for seed in 0..10 {
        let (net, d) = random_instance(seed, &spec);
        let s = solved(&net, &d);
        let dynamic = lmes(&s);
        let st = static_approximation(&s.net, &d, &s.qp, &s.sol, &SolverOptions::default(), &LmeOptions::default()).unwrap();
        assert_eq!(st.network, s.net);
        for (a, b) in dynamic.lambda.iter().flatten().zip(st.lme.lambda.iter().flatten()) {
            assert!((a - b).abs() <= 1e-10, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn idle_battery_does_not_change_lmes() {
    // A lossy battery with a flat price profile is never worth cycling.
    let net = Network::new(1, 3)
        .with_device(Device::StaticGenerator(Generator::new(0, 50.0, 10.0, 0.8).with_quad(0.01)))
        .with_device(Device::StaticGenerator(Generator::new(0, 50.0, 30.0, 0.3).with_quad(0.01)))
        .with_device(Device::Storage(Storage::new(0, 20.0, 5.0, 0.8)));
    let s = solved(&net, &demand(&[&[20.0], &[20.0], &[20.0]]));
    let g = s.sol.schedule(&s.qp);
    assert!(g.iter().all(|row| row[2].abs() < 1e-6));
    let dynamic = lmes(&s);
    let st = static_approximation(&s.net, &s.d, &s.qp, &s.sol, &SolverOptions::default(), &LmeOptions::default()).unwrap();
    for (a, b) in dynamic.lambda.iter().flatten().zip(st.lme.lambda.iter().flatten()) {
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}

#[test]
fn battery_transports_the_marginal_unit() {
    // One quadratic generator and a lossless battery with slack in every
    // bound: arbitrage equalizes the marginal generator across periods.
    let net = Network::new(1, 2)
        .with_device(Device::StaticGenerator(Generator::new(0, 100.0, 5.0, 0.6).with_quad(0.1)))
        .with_device(Device::Storage(Storage {
            initial_soc: 20.0,
            terminal_soc: crate::grid::TerminalSoc::EqualToInitial,
            ..Storage::new(0, 50.0, 30.0, 1.0)
        }));
    let s = solved(&net, &demand(&[&[10.0], &[30.0]]));
    let g = s.sol.schedule(&s.qp);
    assert!((g[0][0] - g[1][0]).abs() < 1e-3, "{g:?}");
    let l = lmes(&s);
    assert!((l.lambda[0][0] - l.lambda[1][0]).abs() < 1e-8, "{:?}", l.lambda);
    assert!((l.lambda[0][0] - 0.6).abs() < 1e-6);
    let f = fd(&s);
    for t in 0..2 {
        assert!((f[t][0] - l.lambda[t][0]).abs() < 1e-5, "{f:?}");
    }
}

#[test]
fn first_order_expansion_is_second_order_accurate() {
    let (net, d) = random_instance(3, &RandomSpec::default());
    let s = solved(&net, &d);
    let l = lmes(&s);
    let direction: Vec<f64> = (0..d.horizon() * d.n_nodes()).map(|k| ((k * 7 % 5) as f64 - 2.0) / 2.0).collect();
    let mut ratios = Vec::new();
    for h in [1e-2, 5e-3, 2.5e-3] {
        let mut dp = d.clone();
        for t in 0..d.horizon() {
            for i in 0..d.n_nodes() {
                dp.set(t, i, d.get(t, i) + h * direction[t * d.n_nodes() + i]);
            }
        }
        let sp = crate::solver::solve(&instantiate(&s.qp, &dp).unwrap(), &SolverOptions::default().with_tol(1e-10));
        assert!(sp.residuals.within_scaled(1e-10, norm_inf(&sp.lambda)), "{:?}", sp.residuals);
        let de = emissions(&s.qp, &sp).total - l.emissions_total;
        let lin: f64 = (0..direction.len())
            .map(|k| l.lambda[k / d.n_nodes()][k % d.n_nodes()] * h * direction[k])
            .sum();
        ratios.push((de - lin).abs() / (h * h));
    }
    // |E(D+δ) − E(D) − ⟨Λ, δ⟩| ≤ K‖δ‖² with one K for all step sizes.
    let k = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(k < 1e3, "{ratios:?}");
}

#[test]
fn jitter_is_seeded_and_bounded() {
    let d = demand(&[&[1.0, 2.0], &[3.0, 4.0]]);
    let a = jitter_demand(&d, 1e-6, 9);
    assert_eq!(a, jitter_demand(&d, 1e-6, 9));
    for t in 0..2 {
        for i in 0..2 {
            assert!((a.get(t, i) - d.get(t, i)).abs() <= 1e-6);
        }
    }
}

#[test]
fn non_optimal_solution_is_rejected() {
    let s = solved(&two_gen_merit(), &demand(&[&[5.0]]));
    let mut sol = s.sol.clone();
    sol.status = crate::solver::Status::Numerical;
    assert!(compute_lmes(&s.qp, &s.d, &sol, &LmeOptions::default()).is_err());
}
