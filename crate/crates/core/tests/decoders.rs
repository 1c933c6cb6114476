mod oracle;

use std::collections::BTreeSet;

use lgsd_core::decoders::{
    babai_sic, decode_basis, esd, fincke_pohst, k_for_radius, klein_sampler_decode, ml_reference,
    regularized_radius_along_path, rsd, DecodeOptions, DecoderKind,
};
use lgsd_core::gaussian::{default_sigma, lattice_gauss_mass, SigmaPolicy};
use lgsd_core::lattice::{LatticeBasis, QrFactors};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, n: usize, noise: f64) -> (DMatrix<f64>, QrFactors, Vec<i64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = oracle::random_r(&mut rng, n);
    let (x, y) = oracle::random_target(&mut rng, &r, noise);
    let qr = QrFactors::from_upper_triangular(r.clone()).unwrap();
    (r, qr, x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn esd_set_equals_ball(seed in any::<u64>(), n in 2usize..=6, ki in 0usize..3) {
        let k = [2.0, 10.0, 100.0][ki];
        let (r, qr, _, y) = instance(seed, n, 0.4);
        let sigma = oracle::paper_sigma(&r);
        let d = sigma * (2.0 * f64::ln(k)).sqrt();
        let out = esd(&qr, &y, &DecodeOptions::esd(k)).unwrap();
        prop_assert_eq!(out.candidate_set(), oracle::ball(&r, &y, d));
        let fp = fincke_pohst(&qr, &y, d, 1_000_000).unwrap();
        prop_assert_eq!(fp.candidate_set(), out.candidate_set());
    }

    #[test]
    fn rsd_contains_klein_superlevel_set(seed in any::<u64>(), n in 2usize..=5, k in 1.0f64..50.0) {
        let (r, qr, _, y) = instance(seed, n, 0.4);
        let sigma = oracle::paper_sigma(&r);
        let out = rsd(&qr, &y, &DecodeOptions::rsd(k)).unwrap();
        let found = out.candidate_set();
        for x in oracle::klein_superlevel(&r, &y, sigma, k) {
            prop_assert!(found.contains(&x), "missing {:?}", x);
        }
    }

    #[test]
    fn node_and_list_bounds(seed in any::<u64>(), n in 1usize..=12, k in 1.0f64..300.0, protect in any::<bool>()) {
        let (_, qr, _, y) = instance(seed, n, 0.5);
        let out = esd(&qr, &y, &DecodeOptions::esd(k).with_protection(protect)).unwrap();
        prop_assert!(out.visited_nodes as f64 <= n as f64 * k);
        prop_assert!(out.candidate_count() as f64 <= k.max(1.0));
        let out = rsd(&qr, &y, &DecodeOptions::rsd(k).with_protection(protect)).unwrap();
        prop_assert!(out.visited_nodes as f64 <= n as f64 * k);
        prop_assert!(out.candidate_count() as f64 <= k.max(1.0));
    }

    #[test]
    fn protection_only_adds_candidates(seed in any::<u64>(), n in 2usize..=8, k in 1.0f64..100.0) {
        let (_, qr, _, y) = instance(seed, n, 0.5);
        let off = rsd(&qr, &y, &DecodeOptions::rsd(k).with_protection(false)).unwrap();
        let on = rsd(&qr, &y, &DecodeOptions::rsd(k)).unwrap();
        prop_assert!(on.candidate_set().is_superset(&off.candidate_set()));
        prop_assert!(!on.is_empty());
    }

    #[test]
    fn rsd_at_k1_is_babai(seed in any::<u64>(), n in 1usize..=16) {
        let (r, qr, _, y) = instance(seed, n, 0.7);
        let out = rsd(&qr, &y, &DecodeOptions::rsd(1.0)).unwrap();
        prop_assert_eq!(out.best.clone(), Some(oracle::babai(&r, &y)));
        prop_assert_eq!(out.best.clone().unwrap(), babai_sic(&qr, &y));
        prop_assert_eq!(out.visited_nodes, n as u64);
        prop_assert_eq!(out.candidate_count(), 1);
    }

    #[test]
    fn esd_is_optimal_inside_its_radius(seed in any::<u64>(), n in 2usize..=6, k in 2.0f64..200.0) {
        let (r, qr, x, y) = instance(seed, n, 0.3);
        let (x_opt, d_opt) = oracle::closest(&r, &y, &[&x, &oracle::babai(&r, &y)]);
        let sigma = oracle::paper_sigma(&r);
        let out = esd(&qr, &y, &DecodeOptions::esd(k)).unwrap();
        if d_opt <= sigma * (2.0 * k.ln()).sqrt() * (1.0 - 1e-9) {
            prop_assert_eq!(out.best, Some(x_opt));
        }
    }

    #[test]
    fn k_from_oracle_distance_finds_optimum(seed in any::<u64>(), n in 1usize..=6) {
        let (r, qr, x, y) = instance(seed, n, 0.2);
        let (x_opt, d_opt) = oracle::closest(&r, &y, &[&x]);
        let pk = k_for_radius(d_opt, oracle::paper_sigma(&r)).unwrap();
        prop_assume!(!pk.capped);
        let out = esd(&qr, &y, &DecodeOptions::esd(pk.k * (1.0 + 1e-9))).unwrap();
        prop_assert_eq!(out.best, Some(x_opt));
    }

    #[test]
    fn ml_reference_matches_oracle(seed in any::<u64>(), n in 1usize..=6) {
        let (r, qr, x, y) = instance(seed, n, 0.4);
        let (x_opt, d_opt) = oracle::closest(&r, &y, &[&x, &oracle::babai(&r, &y)]);
        let out = ml_reference(&qr, &y, 10_000_000).unwrap();
        prop_assert!((out.best_dist - d_opt).abs() <= 1e-9 * (1.0 + d_opt));
        if oracle::ball(&r, &y, d_opt * (1.0 + 1e-6)).len() == 1 {
            prop_assert_eq!(out.best, Some(x_opt));
        }
    }

    #[test]
    fn regularized_radius_covers_unprotected_candidates(seed in any::<u64>(), n in 2usize..=8, ki in 0usize..2) {
        let k = [10.0, 100.0][ki];
        let (r, qr, _, y) = instance(seed, n, 0.4);
        let sigma = oracle::paper_sigma(&r);
        let out = rsd(&qr, &y, &DecodeOptions::rsd(k)).unwrap();
        for c in out.candidates.iter().filter(|c| !c.protected) {
            let d_reg = regularized_radius_along_path(&c.x, &qr, &y, sigma, k).unwrap();
            let expected = sigma * (2.0 * (k.ln() - oracle::ln_mass_product(&r, &y, sigma, &c.x))).sqrt();
            prop_assert!((d_reg - expected).abs() <= 1e-9 * expected);
            prop_assert!(c.dist <= d_reg * (1.0 + 1e-12));
        }
    }

    #[test]
    fn decoding_is_deterministic(seed in any::<u64>(), n in 2usize..=8, k in 1.0f64..100.0) {
        let (_, qr, _, y) = instance(seed, n, 0.5);
        let opts = DecodeOptions::rsd(k).with_trace(true);
        prop_assert_eq!(rsd(&qr, &y, &opts).unwrap(), rsd(&qr, &y, &opts).unwrap());
        let opts = DecodeOptions::esd(k).with_trace(true);
        prop_assert_eq!(esd(&qr, &y, &opts).unwrap(), esd(&qr, &y, &opts).unwrap());
        let sigma = default_sigma(&qr);
        prop_assert_eq!(
            klein_sampler_decode(&qr, &y, sigma, 50, seed).unwrap(),
            klein_sampler_decode(&qr, &y, sigma, 50, seed).unwrap()
        );
    }

    #[test]
    fn lll_path_matches_plain_decoding_for_ml(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng));
        prop_assume!(b.determinant().abs() > 1e-3);
        let x: Vec<f64> = (0..n).map(|i| (i as f64) - 2.0).collect();
        let c = &b * DVector::from_vec(x.clone()) + DVector::from_element(n, 0.05);
        let basis = LatticeBasis::new(b).unwrap();
        let plain = decode_basis(&basis, &c, DecoderKind::Ml, &DecodeOptions::rsd(1.0)).unwrap();
        let reduced = decode_basis(&basis, &c, DecoderKind::Ml, &DecodeOptions::rsd(1.0).with_lll(true)).unwrap();
        prop_assert!((plain.best_dist - reduced.best_dist).abs() <= 1e-9 * (1.0 + plain.best_dist));
    }
}

#[test]
fn esd_at_k1_without_protection_is_empty() {
    for seed in 0..200 {
        let (_, qr, _, y) = instance(seed, 4, 0.5);
        let out = esd(&qr, &y, &DecodeOptions::esd(1.0)).unwrap();
        assert!(out.is_empty());
        assert!(out.best.is_none());
        assert_eq!(out.best_dist, f64::INFINITY);
    }
}

#[test]
fn gaussian_argmax_is_closest_point_at_large_sigma() {
    for seed in 0..40 {
        let n = 2 + (seed as usize) % 3;
        let (r, qr, x, y) = instance(seed, n, 0.4);
        let sigma = 100.0 * oracle::paper_sigma(&r);
        let mass = lattice_gauss_mass(&qr, &y, sigma, 3).unwrap();
        let argmax = mass.argmax().unwrap().to_vec();
        let (x_opt, _) = oracle::closest(&r, &y, &[&x, &oracle::babai(&r, &y)]);
        if oracle::ball(&r, &y, oracle::sq_dist(&r, &x_opt, &y).sqrt() + 1e-9).len() == 1 {
            assert_eq!(argmax, x_opt, "seed {seed}");
        }
    }
}

#[test]
fn klein_sample_frequencies_follow_klein_probabilities() {
    let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 0.8]);
    let qr = QrFactors::from_upper_triangular(r.clone()).unwrap();
    let y = [0.35, 0.42];
    let sigma = 0.4;
    let draws = 100_000usize;
    let out = klein_sampler_decode(&qr, &y, sigma, 64, 11).unwrap();
    assert_eq!(out.visited_nodes, 2 * 64);

    // One sample per seed gives independent draws.
    let mut counts = std::collections::BTreeMap::<Vec<i64>, u64>::new();
    for s in 0..draws as u64 {
        let one = klein_sampler_decode(&qr, &y, sigma, 1, s).unwrap();
        *counts.entry(one.best.unwrap()).or_default() += 1;
    }
    let total = draws as f64;
    let support: BTreeSet<Vec<i64>> = oracle::ball(&r, &y, 3.0);
    let mut covered = 0.0;
    for x in &support {
        let p = oracle::klein_prob(&r, &y, sigma, x);
        covered += p;
        let freq = counts.get(x).copied().unwrap_or(0) as f64 / total;
        let se = (p * (1.0 - p) / total).sqrt();
        assert!((freq - p).abs() <= 3.0 * se + 1.0 / total, "{x:?}: {freq} vs {p}");
    }
    assert!(covered > 1.0 - 1e-6);
    assert!(counts.keys().all(|x| support.contains(x)));
}

#[test]
fn fixed_sigma_policy_changes_the_radius() {
    let (r, qr, _, y) = instance(3, 4, 0.5);
    let sigma = 2.0 * oracle::paper_sigma(&r);
    let k = 10.0;
    let out = esd(&qr, &y, &DecodeOptions::esd(k).with_sigma(SigmaPolicy::Fixed(sigma))).unwrap();
    assert_eq!(out.candidate_set(), oracle::ball(&r, &y, sigma * (2.0 * f64::ln(k)).sqrt()));
}
