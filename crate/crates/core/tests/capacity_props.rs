use dmc_ident::capacity::{
    capacity, capacity_value, dual_value, mutual_information, pseudo_capacity, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use dmc_ident::channel::Channel;
use dmc_ident::dist::{floored_approximation, kl_divergence};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_channel(max: usize) -> impl Strategy<Value = Channel> {
    (2..=max, 2..=max, any::<u64>()).prop_map(|(nx, ny, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Channel::random_dirichlet(nx, ny, 1.0, &mut rng).unwrap()
    })
}

fn arb_dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("zero mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weak_duality(ch in arb_channel(5), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Channel::random_dirichlet(1, ch.output_size(), 1.0, &mut rng).unwrap().row(0).to_vec();
        prop_assert!(dual_value(&ch, &q).unwrap() >= capacity_value(&ch) - 1e-9);
    }

    #[test]
    fn strong_duality_at_optimum(ch in arb_channel(6)) {
        let r = capacity(&ch, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(r.duality_gap >= 0.0);
        prop_assert!(dual_value(&ch, r.output_dist.probs()).unwrap() - r.capacity <= 1e-6);
    }

    #[test]
    fn capacity_in_range(ch in arb_channel(6)) {
        let c = capacity_value(&ch);
        let max = (ch.input_size().min(ch.output_size()) as f64).ln();
        prop_assert!(c >= 0.0 && c <= max + 1e-12);
    }

    #[test]
    fn mutual_information_below_capacity(ch in arb_channel(5), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Channel::random_dirichlet(1, ch.input_size(), 1.0, &mut rng).unwrap().row(0).to_vec();
        let i = mutual_information(&p, &ch).unwrap();
        prop_assert!(i >= 0.0 && i <= capacity_value(&ch) + 1e-9);
    }

    #[test]
    fn permutation_invariance(ch in arb_channel(4), rs in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(rs);
        let mut rp: Vec<usize> = (0..ch.input_size()).collect();
        let mut cp: Vec<usize> = (0..ch.output_size()).collect();
        rp.shuffle(&mut rng);
        cp.shuffle(&mut rng);
        let a = capacity_value(&ch);
        let b = capacity_value(&ch.permuted(&rp, &cp));
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn pseudo_capacity_sandwich(ch in arb_channel(5), eta in prop::sample::select(vec![1e-3, 1e-2])) {
        let c = capacity_value(&ch);
        let v = pseudo_capacity(&ch, eta, 1e-9).unwrap();
        prop_assert!(v.value - c >= 0.0);
        prop_assert!(v.value - c <= 2.0 * eta * ch.output_size() as f64 + 1e-6);
        prop_assert!(v.lower <= v.value);
        prop_assert!(v.output_dist.min_mass() >= eta * (1.0 - 1e-9));
    }

    #[test]
    fn floored_law_bound(p in (2usize..8).prop_flat_map(arb_dist), frac in 0.0f64..1.0) {
        let m = p.len();
        let eta = frac / (2.0 * m as f64);
        let q = floored_approximation(&p, eta).unwrap();
        prop_assert!(q.min_mass() >= eta * (1.0 - 1e-12));
        prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(kl_divergence(&p, q.probs()).unwrap() <= 2.0 * eta * m as f64);
    }
}

/// `min` over a grid on the floored simplex of `max_x D(W_x || Q)`.
fn grid_pseudo_capacity(ch: &Channel, eta: f64, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let q = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
            if q.iter().any(|&v| v < eta) {
                continue;
            }
            let v = ch.rows().iter().map(|w| kl_divergence(w, &q).unwrap()).fold(0.0, f64::max);
            best = best.min(v);
        }
    }
    best
}

#[test]
fn erasure_pseudo_capacity_exceeds_capacity() {
    let ch = Channel::binary_erasure(0.005).unwrap();
    let eta = 0.01;
    let c = capacity_value(&ch);
    let v = pseudo_capacity(&ch, eta, 1e-10).unwrap();
    // the erasure mass 0.005 sits below the floor, so the constraint binds
    let grid = grid_pseudo_capacity(&ch, eta, 2000);
    assert!(grid > c + 1e-3, "grid {grid} vs capacity {c}");
    assert!(v.value > c + 1e-3);
    assert!((v.value - grid).abs() < 1e-4, "{} vs {grid}", v.value);
    assert!(grid >= v.lower - 1e-9);
}

#[test]
fn bsc_pseudo_capacity_window() {
    let ch = Channel::bsc(0.11).unwrap();
    let c = capacity_value(&ch);
    let v = pseudo_capacity(&ch, 0.01, 1e-10).unwrap().value;
    assert!(v >= c && v <= c + 0.04);
}
