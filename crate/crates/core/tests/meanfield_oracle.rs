use mcom::meanfield::{integrate_classical, solve_mean_field, MeanFieldError, MeanFieldMode, SteadyState};
use mcom::model::SystemParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_relative_gap(a: &SteadyState<f64>, b: &SteadyState<f64>) -> f64 {
    let pairs = [
        (a.alpha_a, b.alpha_a),
        (a.alpha_c, b.alpha_c),
        (a.beta_1, b.beta_1),
        (a.beta_2, b.beta_2),
    ];
    pairs
        .iter()
        .map(|(x, y)| (x - y).norm() / (1.0 + y.norm()))
        .fold(0.0, f64::max)
}

#[test]
fn reference_point_matches_long_time_limit() {
    let p = SystemParams::<f64>::default();
    let mf = solve_mean_field(&p, MeanFieldMode::Paper).unwrap();
    let ode = integrate_classical(&p, MeanFieldMode::Paper, 2.5e5, 0.01).unwrap();
    let gap = max_relative_gap(&ode, &mf);
    assert!(
        gap <= 1e-8,
        "ODE at t = 2.5e5: alpha_c = {}, beta_1 = {}; fixed point: alpha_c = {}, beta_1 = {}; gap {gap:.3e}",
        ode.alpha_c,
        ode.beta_1,
        mf.alpha_c,
        mf.beta_1
    );
}

#[test]
fn strong_gain_diverges() {
    let p = SystemParams::<f64> {
        lambda_opa: 0.5,
        ..Default::default()
    };
    match integrate_classical(&p, MeanFieldMode::Paper, 2e5, 0.01) {
        Err(MeanFieldError::Diverged { .. }) => {}
        other => panic!(
            "expected Diverged, got {:?}",
            other.map(|s| (s.alpha_a, s.alpha_c, s.beta_1))
        ),
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams<f64> {
    let n_total = rng.random_range(1..=150u64);
    SystemParams {
        kappa_a: rng.random_range(0.2..0.6),
        kappa_c: rng.random_range(0.2..0.6),
        delta_a: rng.random_range(-1.5..1.5),
        delta_c: rng.random_range(-1.5..1.5),
        gamma_1: rng.random_range(0.05..0.3),
        gamma_2: rng.random_range(0.05..0.3),
        drive_a: rng.random_range(0.0..20.0),
        drive_c: rng.random_range(0.0..20.0),
        j_1: rng.random_range(0.0..1.2),
        j_2: rng.random_range(0.0..1.2),
        lambda_opa: rng.random_range(0.0..0.1),
        theta: rng.random_range(0.0..std::f64::consts::TAU),
        n_total,
        m_split: rng.random_range(0..=n_total),
        ..Default::default()
    }
}

#[test]
fn fixed_point_agrees_with_flow_wherever_both_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0;
    for mode in [MeanFieldMode::Paper, MeanFieldMode::Exact] {
        for _ in 0..30 {
            let p = random_params(&mut rng);
            let Ok(mf) = solve_mean_field(&p, mode) else { continue };
            let Ok(early) = integrate_classical(&p, mode, 1500.0, 0.01) else { continue };
            let Ok(late) = integrate_classical(&p, mode, 3000.0, 0.01) else { continue };
            if max_relative_gap(&early, &late) > 1e-10 {
                continue;
            }
            compared += 1;
            let gap = max_relative_gap(&late, &mf);
            assert!(gap <= 1e-6, "{mode} {p:?}: gap {gap:.3e}");
        }
    }
    assert!(compared >= 20, "only {compared} draws settled");
}

#[test]
fn beta_real_part_nonpositive_and_label_swap() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let Ok(ss) = solve_mean_field(&p, MeanFieldMode::Paper) else { continue };
        assert!(ss.beta_1.re <= 0.0 && ss.beta_2.re <= 0.0);
        assert!(ss.g_cap_1 >= 0.0 && ss.g_cap_2 >= 0.0);
        let q = SystemParams {
            m_split: p.n_total - p.m_split,
            gamma_1: p.gamma_2,
            gamma_2: p.gamma_1,
            ..p
        };
        let sw = solve_mean_field(&q, MeanFieldMode::Paper).unwrap();
        let close = |x: nalgebra::Complex<f64>, y: nalgebra::Complex<f64>| (x - y).norm() <= 1e-9 * (1.0 + y.norm());
        assert!(close(sw.beta_1, ss.beta_2) && close(sw.beta_2, ss.beta_1));
        assert!(close(sw.alpha_a, ss.alpha_a) && close(sw.alpha_c, ss.alpha_c));
    }
}
