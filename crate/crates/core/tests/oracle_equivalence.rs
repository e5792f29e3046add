use cexp_core::bounds::{self, thresholds};
use cexp_core::clusters::enumerate_all_connected_clusters;
use cexp_core::fixtures::{self, pauli_observable, pauli_x, pauli_z, plus_y_state};
use cexp_core::loschmidt::{self, expand_logl, expand_logl_multi, per_site_rate, MultiEchoSpec};
use cexp_core::obs_dynamics::{
    continue_observable, continue_observable_with, expand_observable, CoefficientSource,
    ObservableOptions,
};
use cexp_core::oracle::{self, exact_loschmidt, exact_observable};
use cexp_core::{Complex64, InteractionGraph, Observable, ProductState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn ising_chain_observable_within_bound() {
    let h = fixtures::ising_chain(4, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let s = fixtures::random_pure_product(4, 2, &mut rng);
    let a = pauli_observable(1, pauli_z());
    let g = InteractionGraph::build(&h);
    let t = 0.5 * thresholds(g.max_degree()).t_star;
    let est = expand_observable(&h, &a, &s, t, 10).unwrap();
    let exact = exact_observable(&h, &a, &s, t).unwrap();
    assert!(est.within_radius);
    assert!((est.value - exact).norm() <= est.truncation_bound);
    assert!(est.value.im.abs() < 1e-9);
}

#[test]
fn continuation_reproduces_rotation_beyond_radius() {
    let h = fixtures::single_qubit(1.0);
    let a = pauli_observable(0, pauli_z());
    let t_star = 1.0 / (2.0 * std::f64::consts::E);
    let t = 2.0 * t_star;
    let c = continue_observable(&h, &a, &plus_y_state(), t, 1e-3).unwrap();
    assert!((c.estimate.value.re - (2.0 * t).sin()).abs() <= 1e-3, "{}", c.estimate.value);
    assert!(c.plan.order > 8000);
}

#[test]
fn continuation_heisenberg_chain() {
    let h = fixtures::heisenberg_chain(6, 1.0);
    let s = ProductState::basis(2, &[0, 1, 0, 1, 0, 1]).unwrap();
    let a = pauli_observable(2, pauli_z());
    let th = thresholds(InteractionGraph::build(&h).max_degree());
    let t = 1.5 * th.t_star;
    let c = continue_observable(&h, &a, &s, t, 1e-2).unwrap();
    assert_eq!(c.source, CoefficientSource::LightCone);
    let exact = exact_observable(&h, &a, &s, t).unwrap();
    assert!((c.estimate.value - exact).norm() <= 1e-2 * a.norm(), "{} vs {exact}", c.estimate.value);
}

#[test]
fn continuation_inside_radius_agrees_with_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = fixtures::random_two_local(4, &fixtures::chain_edges(4), &mut rng);
    let a = fixtures::random_observable(vec![1], 2, &mut rng);
    let s = fixtures::random_mixed_product(4, 2, &mut rng);
    let t = 0.3 * thresholds(2).t_star;
    let short = expand_observable(&h, &a, &s, t, 8).unwrap();
    let opts = ObservableOptions {
        source: CoefficientSource::LightCone,
        ..Default::default()
    };
    let long = continue_observable_with(&h, &a, &s, t, 1e-4, &opts).unwrap();
    assert!((short.value - long.estimate.value).norm() <= short.truncation_bound + long.estimate.truncation_bound);
}

#[test]
fn ising_log_echo_within_bound() {
    let h = fixtures::ising_chain(6, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = fixtures::random_pure_product(6, 2, &mut rng);
    let th = thresholds(InteractionGraph::build(&h).max_degree());
    let t = real(0.5 * th.t_star_l);
    let est = expand_logl(&h, &s, t, 8).unwrap();
    let exact = exact_loschmidt(&MultiEchoSpec::new(vec![h.clone()], vec![t]).unwrap(), &s).unwrap();
    let gap = (est.value - exact.ln()).norm();
    assert!(gap <= est.truncation_bound, "{gap} > {}", est.truncation_bound);
    let eps = est.truncation_bound;
    let modulus = est.value.exp().norm();
    assert!((-eps).exp() * modulus <= exact.norm() && exact.norm() <= eps.exp() * modulus);
}

#[test]
fn doubled_echo_matches_twice_the_time() {
    let h = fixtures::ising_chain(4, 0.8, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let s = fixtures::random_pure_product(4, 2, &mut rng);
    let th = thresholds(InteractionGraph::build(&h).max_degree());
    let t = real(0.1 * th.t_star_l);
    let spec = MultiEchoSpec::new(vec![h.clone(), h.clone()], vec![t, t]).unwrap();
    let multi = expand_logl_multi(&spec, &s, 6).unwrap();
    let single = expand_logl(&h, &s, t * 2.0, 6).unwrap();
    assert!((multi.value - single.value).norm() <= multi.truncation_bound + single.truncation_bound);
    let exact = exact_loschmidt(&spec, &s).unwrap().ln();
    assert!((multi.value - exact).norm() <= multi.truncation_bound);
}

#[test]
fn tilted_three_echo_matches_oracle() {
    let h1 = fixtures::ising_chain(4, 0.6, 1.0);
    let h2 = fixtures::ising_chain(4, 1.4, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = fixtures::random_pure_product(4, 2, &mut rng);
    let tl = thresholds(InteractionGraph::build(&h1).max_degree()).t_star_l;
    let t = 0.03 * tl;
    let nu = 0.02 * tl;
    let spec = MultiEchoSpec::new(
        vec![h1.clone(), h2, h1.clone()],
        vec![real(-t), Complex64::new(0.0, nu), real(t)],
    )
    .unwrap();
    let est = expand_logl_multi(&spec, &s, 6).unwrap();
    assert!(est.within_radius);
    let exact = exact_loschmidt(&spec, &s).unwrap().ln();
    assert!((est.value - exact).norm() <= est.truncation_bound, "{} vs {exact}", est.value);
}

#[test]
fn partition_formula_matches_interpolation() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let h = fixtures::random_two_local(4, &fixtures::chain_edges(4), &mut rng);
    let s = fixtures::random_mixed_product(4, 2, &mut rng);
    let g = InteractionGraph::build(&h);
    let t = real(0.4);
    for m in 1..=3 {
        for w in enumerate_all_connected_clusters(&g, m).unwrap() {
            let a = loschmidt::cluster_derivative_logl(&h, &w, &s, t).unwrap();
            let b = oracle::exact_cluster_derivative_logl(&w, &h, &s, t).unwrap();
            assert!((a - b).norm() <= 1e-6 * a.norm().max(1e-3), "{w:?}: {a} vs {b}");
        }
    }
}

#[test]
fn noninteracting_rate_is_log_cos() {
    let t = 0.5 * thresholds(0).t_star_l;
    for n in [3, 5] {
        let h = fixtures::free_spins(n, 1.0);
        let s = ProductState::basis(2, &vec![0; n]).unwrap();
        let r = per_site_rate(&h, &s, t, 8).unwrap();
        assert!((r.re - t.cos().ln()).abs() < 1e-12);
    }
}

#[test]
fn ising_rates_at_two_sizes() {
    let t = 0.5 * thresholds(2).t_star_l;
    let rate = |n: usize| {
        let h = fixtures::ising_chain(n, 1.0, 1.0);
        let s = ProductState::basis(2, &vec![0; n]).unwrap();
        per_site_rate(&h, &s, t, 8).unwrap()
    };
    let (a, b) = (rate(6), rate(8));
    let exact = |n: usize| {
        let h = fixtures::ising_chain(n, 1.0, 1.0);
        let s = ProductState::basis(2, &vec![0; n]).unwrap();
        exact_loschmidt(&MultiEchoSpec::new(vec![h], vec![real(t)]).unwrap(), &s).unwrap().ln() / n as f64
    };
    assert!((a.re - exact(6).re).abs() <= a.truncation_bound);
    assert!((b.re - exact(8).re).abs() <= b.truncation_bound);
    assert!(a.within_radius && b.within_radius);
}

#[test]
fn qsl_and_concentration_are_sound() {
    let h = fixtures::ising_chain(4, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let s = fixtures::random_pure_product(4, 2, &mut rng);
    let d = InteractionGraph::build(&h).max_degree();
    let tl = thresholds(d).t_star_l;
    let sys = oracle::DenseSystem::new(&h).unwrap();
    for k in 1..20 {
        let t = tl * k as f64 / 20.0;
        let r = bounds::qsl_report(&h, &s, t, d).unwrap();
        let f = sys.fidelity(&s, t).unwrap();
        assert!(f >= r.lower_bound && f > 0.0);
    }
    let dist = oracle::exact_measurement_distribution(&h, &s.dense()).unwrap();
    let mean: f64 = dist.iter().map(|(x, p)| x * p).sum();
    for k in 1..=10 {
        let delta = h.len() as f64 * k as f64 / 10.0;
        let rep = bounds::concentration_bound(delta, h.len(), d, bounds::ConcentrationVariant::Product, 0.0).unwrap();
        let tail = oracle::tail_probability(&dist, mean, delta);
        assert!(tail <= rep.bound);
        assert!(oracle::markov_tail_bound(&h, &s.dense(), rep.nu, delta).unwrap() >= tail);
    }
}

#[test]
fn observable_on_site_without_matching_term() {
    let h = fixtures::heisenberg_chain(4, 1.0);
    let s = ProductState::basis(2, &[0, 1, 1, 0]).unwrap();
    let a = Observable::new(2, vec![1], pauli_x()).unwrap();
    let t = 0.4 * thresholds(3).t_star;
    let est = expand_observable(&h, &a, &s, t, 6).unwrap();
    let exact = exact_observable(&h, &a, &s, t).unwrap();
    assert!((est.value - exact).norm() <= est.truncation_bound);
}
