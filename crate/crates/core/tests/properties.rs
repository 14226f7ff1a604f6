//! Invariants checked against independent oracles: erf for the Gaussian
//! integral, hand-written closed forms, and finite differences.

use hamflow_core::canonical::{
    ct_apply, ct_inverse, f_lambda, f_lambda_series, CatalogGenerator, CtType, DomainBox,
    GeneratingFunctionSpec,
};
use hamflow_core::dynamics::{
    coincidence_metric, energy_drift, integrate, poisson_bracket, rate_factor, rescaling_check,
    FlowField, FlowKind, IntegratorConfig,
};
use hamflow_core::fit::endpoint_taylor_coefficients;
use hamflow_core::hierarchy::{
    hamiltonian_j, lagrangian_j, momentum_j, multiplicative_hamiltonian, multiplicative_lagrangian,
    multiplicative_momentum, truncated_series, SeriesKind, TruncationOrder,
};
use hamflow_core::quadrature::gaussian_velocity_integral;
use hamflow_core::{
    additive_hamiltonian, kinetic_energy, KineticState, Lambda, PhaseState, Potential, SystemParams,
};
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2};

fn g_oracle(u: f64, lambda: f64) -> f64 {
    lambda * (PI / 2.0).sqrt() * libm::erf(u / (lambda * SQRT_2))
}

fn potentials() -> Vec<Potential> {
    vec![
        Potential::Free,
        Potential::harmonic(1.3),
        Potential::quartic(-1.0, 0.7),
        Potential::polynomial(vec![0.5, -1.0, 0.25, 0.1, -0.02]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gradient_matches_central_difference(x in -5.0f64..5.0) {
        for v in potentials() {
            let h = 1e-5 * x.abs().max(1.0);
            let fd = (v.eval(x + h) - v.eval(x - h)) / (2.0 * h);
            let g = v.grad(x);
            prop_assert!((g - fd).abs() / g.abs().max(1.0) < 1e-6, "{v:?} at {x}");
        }
    }

    #[test]
    fn hamiltonian_even_in_momentum(x in -5.0f64..5.0, p in -5.0f64..5.0) {
        let prm = SystemParams::additive(1.7).unwrap();
        for v in potentials() {
            prop_assert_eq!(
                additive_hamiltonian(PhaseState::new(x, p), &v, &prm),
                additive_hamiltonian(PhaseState::new(x, -p), &v, &prm)
            );
        }
    }

    #[test]
    fn kinetic_round_trip(x in -5.0f64..5.0, xdot in -5.0f64..5.0) {
        for m in [0.5, 1.0, 3.0] {
            let k = KineticState::new(x, xdot);
            let back = k.to_phase(m).to_kinetic(m);
            prop_assert_eq!(back.x, x);
            prop_assert!((back.xdot - xdot).abs() <= f64::EPSILON * xdot.abs());
        }
    }

    #[test]
    fn gaussian_integral_scaling(u in -20.0f64..20.0, lambda in 0.05f64..20.0) {
        let scaled = gaussian_velocity_integral(u, Lambda::Finite(lambda)).unwrap();
        let unit = gaussian_velocity_integral(u / lambda, Lambda::Finite(1.0)).unwrap();
        prop_assert!((scaled - lambda * unit).abs() < 1e-12 * lambda.max(1.0));
        prop_assert!((scaled - g_oracle(u, lambda)).abs() < 1e-12 * lambda.max(1.0));
    }

    #[test]
    fn first_level_is_the_additive_system(t in 0.0f64..10.0, v in -10.0f64..10.0,
                                          x in -3.0f64..3.0, p in -3.0f64..3.0) {
        prop_assert_eq!(lagrangian_j(1, t, v), t - v);
        let osc = Potential::harmonic(1.0);
        let prm = SystemParams::new(1.0, Lambda::Finite(2.0)).unwrap();
        let s = PhaseState::new(x, p);
        prop_assert_eq!(hamiltonian_j(1, s, &osc, &prm), additive_hamiltonian(s, &osc, &prm));
        prop_assert_eq!(momentum_j(1, s, &osc, &prm), p);
    }

    #[test]
    fn series_resums_to_closed_forms(x in -2.0f64..2.0, p in -2.0f64..2.0, lambda in 0.5f64..20.0) {
        let v = Potential::harmonic(1.0);
        let m = 1.0;
        let prm = SystemParams::new(m, Lambda::Finite(lambda)).unwrap();
        let s = PhaseState::new(x, p);
        let c = m * lambda * lambda;
        let h = additive_hamiltonian(s, &v, &prm);
        prop_assume!(h / c < 0.5);
        let order = TruncationOrder::new(20).unwrap();
        // hand-written closed forms with erf for G
        let xdot = p / m;
        let g = g_oracle(xdot, lambda);
        let damp = (-v.eval(x) / c).exp();
        let l = c * ((-xdot * xdot / (2.0 * lambda * lambda)).exp() + xdot / (lambda * lambda) * g) * damp;
        let hl = -c * (-h / c).exp();
        let pl = m * g * damp;
        let tol = 1e-9 * c.max(1.0);
        prop_assert!((truncated_series(order, SeriesKind::Lagrangian, s, &v, &prm).unwrap() - l).abs() < tol);
        prop_assert!((truncated_series(order, SeriesKind::Hamiltonian, s, &v, &prm).unwrap() - hl).abs() < tol);
        prop_assert!((truncated_series(order, SeriesKind::Momentum, s, &v, &prm).unwrap() - pl).abs() < 1e-9);
        // and the library closed forms agree with the oracle
        let k = KineticState::new(x, xdot);
        prop_assert!((multiplicative_lagrangian(k, &v, &prm).unwrap() - l).abs() < 1e-12 * c.max(1.0));
        prop_assert!((multiplicative_hamiltonian(s, &v, &prm).unwrap() - hl).abs() < 1e-12 * c.max(1.0));
    }

    #[test]
    fn multiplicative_hamiltonian_is_monotone(e1 in 0.0f64..5.0, de in 1e-6f64..5.0, lambda in 0.3f64..10.0) {
        let prm = SystemParams::new(1.0, Lambda::Finite(lambda)).unwrap();
        let v = Potential::Free;
        let at = |e: f64| multiplicative_hamiltonian(PhaseState::new(0.0, (2.0 * e).sqrt()), &v, &prm).unwrap();
        prop_assert!(at(e1) < at(e1 + de));
        prop_assert!(at(e1) >= -lambda * lambda && at(e1) <= 0.0);
    }

    #[test]
    fn bracket_antisymmetry_and_leibniz(x in -2.0f64..2.0, p in -2.0f64..2.0) {
        let f = |s: PhaseState| s.x * s.x * s.p - 0.5 * s.p;
        let g = |s: PhaseState| s.x * s.p * s.p + s.x * s.x * s.x;
        let h = |s: PhaseState| 2.0 * s.x - s.p * s.p * s.p;
        let s = PhaseState::new(x, p);
        prop_assert!((poisson_bracket(f, g, s) + poisson_bracket(g, f, s)).abs() < 1e-7);
        let lhs = poisson_bracket(|s| f(s) * g(s), h, s);
        let rhs = f(s) * poisson_bracket(g, h, s) + poisson_bracket(f, h, s) * g(s);
        prop_assert!((lhs - rhs).abs() < 1e-7 * lhs.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generating_function_series_resums(u in -0.5f64..0.5, lambda in 0.1f64..50.0) {
        let prm = SystemParams::new(1.0, Lambda::Finite(lambda)).unwrap();
        let c = lambda * lambda;
        let f = u * c;
        let closed = c * (1.0 + f / c).ln();
        let series = f_lambda_series(TruncationOrder::new(20).unwrap(), f, &prm).unwrap();
        // alternating ln(1+u) tail after 20 terms: c·|u|^21 / (21 (1 - |u|))
        let tail = c * u.abs().powi(21) / (21.0 * (1.0 - u.abs()));
        prop_assert!((series - closed).abs() <= tail + 1e-14 * c.max(1.0));
        if u.abs() <= 0.35 {
            prop_assert!((series - closed).abs() < 1e-9 * c.max(1.0));
        }
        let lifted = f_lambda(f, &prm).unwrap();
        prop_assert!((lifted - closed).abs() <= 1e-14 * c.max(1.0));
        // |F_λ - F| <= F²/(2mλ²) / (1 - |F|/mλ²)
        let bound = f * f / (2.0 * c) / (1.0 - u.abs());
        prop_assert!((lifted - f).abs() <= bound * (1.0 + 1e-12) + 1e-15 * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ct_round_trip(x in -0.9f64..0.9, p in -0.9f64..0.9, lambda in 2.0f64..10.0) {
        let prm = SystemParams::new(1.0, Lambda::Finite(lambda)).unwrap();
        let bx = DomainBox::new((-1.9, 1.9), (-1.9, 1.9)).unwrap();
        for (ty, g) in [(CtType::One, CatalogGenerator::Exchange), (CtType::Four, CatalogGenerator::ExchangeType4)] {
            let spec = GeneratingFunctionSpec::new(ty, g, prm, bx).unwrap();
            let s = PhaseState::new(x, p);
            let r = ct_apply(&spec, s, 0.0, 0.0).unwrap();
            prop_assert!(r.diagnostics.residual < 1e-10);
            let (back, _) = ct_inverse(&spec, r.new_state, 0.0).unwrap();
            prop_assert!(back.distance(&s) < 1e-8, "{ty:?}: {s:?} -> {back:?}");
        }
    }
}

#[test]
fn exchange_output_converges_like_inverse_lambda_squared() {
    let bx = DomainBox::new((-2.0, 2.0), (-2.0, 2.0)).unwrap();
    let s = PhaseState::new(0.75, -0.6);
    let out = |lambda: f64| {
        let prm = SystemParams::new(1.0, Lambda::Finite(lambda)).unwrap();
        let spec =
            GeneratingFunctionSpec::new(CtType::One, CatalogGenerator::Exchange, prm, bx).unwrap();
        ct_apply(&spec, s, 0.0, 0.0).unwrap().new_state
    };
    let classical = PhaseState::new(s.p, -s.x);
    // successive doublings of λ cut the distance to the limit by about 4
    let d: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&l| out(l).distance(&classical))
        .collect();
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.5, "{d:?}");
    }
}

#[test]
fn momentum_coefficients_match_the_closed_form_expansion() {
    // coefficient of ε^{j-1}/j! in p_λ, ε = -1/mλ², read off a λ sweep
    let v = Potential::quartic(1.0, 0.3);
    let m = 1.4;
    for (x, p) in [(0.5, 0.8), (-1.1, 0.4), (0.9, -1.2)] {
        let s = PhaseState::new(x, p);
        let base = SystemParams::additive(m).unwrap();
        let h = 0.2 / additive_hamiltonian(s, &v, &base).max(1.0);
        let k = s.to_kinetic(m);
        let pl = |eps: f64| {
            if eps == 0.0 {
                return p;
            }
            let lambda = (-1.0 / (eps * m)).sqrt();
            let prm = SystemParams::new(m, Lambda::Finite(lambda)).unwrap();
            multiplicative_momentum(k, &v, &prm).unwrap()
        };
        let coeffs = endpoint_taylor_coefficients(pl, h, 12, 4).unwrap();
        let mut factorial = 1.0;
        for j in 1..=4u32 {
            factorial *= j as f64;
            let fitted = coeffs[j as usize - 1] * factorial;
            let direct = momentum_j(j, s, &v, &base);
            assert!(
                (fitted - direct).abs() < 1e-6 * direct.abs().max(1.0),
                "j={j} at {s:?}: {fitted} vs {direct}"
            );
        }
    }
}

#[test]
fn hamiltonian_argmin_follows_standard_energy() {
    // harmonic plus a slow drift in energy: integrate with a coarse step so
    // RK4 error makes H_N vary, then compare argmins
    let v = Potential::quartic(1.0, 0.5);
    let prm = SystemParams::new(1.0, Lambda::Finite(1.5)).unwrap();
    let field = FlowField::new(FlowKind::Standard, v.clone(), prm).unwrap();
    let cfg = IntegratorConfig::rk4(0.3, 20.0).unwrap();
    let traj = integrate(&field, PhaseState::new(1.5, 0.0), &cfg).unwrap();
    let argmin = |f: &dyn Fn(PhaseState) -> f64| {
        traj.samples()
            .iter()
            .enumerate()
            .min_by(|a, b| f(a.1.state).total_cmp(&f(b.1.state)))
            .unwrap()
            .0
    };
    let hn = argmin(&|s| additive_hamiltonian(s, &v, &prm));
    let hl = argmin(&|s| multiplicative_hamiltonian(s, &v, &prm).unwrap());
    assert_eq!(hn, hl);
    assert!(energy_drift(&traj, &v, &prm) > 0.0);
}

fn desk() -> (Potential, PhaseState) {
    (Potential::harmonic(1.0), PhaseState::new(1.0, 0.0))
}

#[test]
fn every_flow_conserves_energy_at_fourth_order() {
    let v = Potential::quartic(1.0, 0.25);
    let prm = SystemParams::new(1.0, Lambda::Finite(1.2)).unwrap();
    for start in [
        PhaseState::new(1.0, 0.0),
        PhaseState::new(-0.4, 1.3),
        PhaseState::new(1.5, -0.7),
    ] {
        for kind in [
            FlowKind::Standard,
            FlowKind::Hierarchy(2),
            FlowKind::Hierarchy(3),
            FlowKind::Multiplicative,
        ] {
            let field = FlowField::new(kind, v.clone(), prm).unwrap();
            let drift = |dt: f64| {
                let cfg = IntegratorConfig::rk4(dt, 4.0).unwrap();
                energy_drift(&integrate(&field, start, &cfg).unwrap(), &v, &prm)
            };
            let (coarse, fine) = (drift(0.02), drift(0.01));
            assert!(
                coarse / fine >= 15.0,
                "{kind} from {start:?}: {coarse:e} / {fine:e}"
            );
        }
    }
}

#[test]
fn coincidence_vanishes_with_step() {
    let (v, start) = desk();
    for lambda in [0.5, 1.0, 2.0, 10.0] {
        let prm = SystemParams::new(1.0, Lambda::Finite(lambda)).unwrap();
        let metric = |dt: f64| {
            let cfg = IntegratorConfig::rk4(dt, 2.0 * PI).unwrap();
            let std = integrate(
                &FlowField::new(FlowKind::Standard, v.clone(), prm).unwrap(),
                start,
                &cfg,
            )
            .unwrap();
            let mul = integrate(
                &FlowField::new(FlowKind::Multiplicative, v.clone(), prm).unwrap(),
                start,
                &cfg,
            )
            .unwrap();
            coincidence_metric(&mul, &std)
        };
        let (coarse, fine) = (metric(0.02), metric(0.01));
        assert!(fine < coarse, "λ={lambda}: {coarse:e} -> {fine:e}");
        assert!(fine < 1e-4, "λ={lambda}: {fine:e}");
    }
}

#[test]
fn rescaling_distance_shrinks_at_integrator_order() {
    let v = Potential::harmonic(1.0);
    let prm = SystemParams::new(1.0, Lambda::Finite(2.0)).unwrap();
    let start = PhaseState::new(1.0, 1.0);
    for kind in [
        FlowKind::Hierarchy(2),
        FlowKind::Hierarchy(3),
        FlowKind::Multiplicative,
    ] {
        let d = |dt: f64| {
            rescaling_check(
                kind,
                &v,
                &prm,
                start,
                &IntegratorConfig::rk4(dt, 1.0).unwrap(),
            )
            .unwrap()
        };
        // steps commensurate with both run lengths for the hierarchy flows
        let (coarse, fine) = (d(0.1), d(0.05));
        assert!(coarse / fine > 8.0, "{kind}: {coarse:e} / {fine:e}");
    }
}

#[test]
fn reparameterised_flows_obey_the_standard_equation_of_motion() {
    // x(t) from the scaled flow, with τ = rate·t, must satisfy m x'' + V'(x) = 0
    let v = Potential::quartic(1.0, 0.3);
    let m = 1.0;
    let prm = SystemParams::new(m, Lambda::Finite(1.5)).unwrap();
    let start = PhaseState::new(0.8, 0.6);
    let e = additive_hamiltonian(start, &v, &prm);
    for kind in [
        FlowKind::Hierarchy(2),
        FlowKind::Hierarchy(3),
        FlowKind::Multiplicative,
    ] {
        let rate = rate_factor(kind, e, &prm).unwrap();
        let cfg = IntegratorConfig::rk4(1e-3, 3.0).unwrap();
        let traj = integrate(&FlowField::new(kind, v.clone(), prm).unwrap(), start, &cfg).unwrap();
        let tau = cfg.step() * rate;
        let xs: Vec<f64> = traj.samples().iter().map(|s| s.state.x).collect();
        let worst = xs
            .windows(3)
            .map(|w| (m * (w[0] - 2.0 * w[1] + w[2]) / (tau * tau) + v.grad(w[1])).abs())
            .fold(0.0, f64::max);
        // second-difference truncation τ²/12·|x''''| plus rounding 4ε|x|/τ²
        let estimate = tau * tau / 12.0 * 10.0 + 4.0 * f64::EPSILON / (tau * tau);
        assert!(worst < estimate, "{kind}: {worst:e} vs {estimate:e}");
    }
}

#[test]
fn standard_kinetic_energy_examples() {
    let prm = SystemParams::additive(4.0).unwrap();
    assert_eq!(kinetic_energy(PhaseState::new(0.0, 2.0), &prm), 0.5);
}
