//! Randomized invariants over formulas, signals and configurations.

mod common;

use common::{fitting_signal, random_formula, random_until_free, test_table};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smooth_stl::{
    error_interval, error_interval_signal_free, grad_wrt_signal, parse, robustness,
    smooth_robustness, Formula, SmoothConfig, Srm,
};

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick_srm(rng: &mut ChaCha8Rng) -> Srm {
    Srm::ALL[rand::Rng::gen_range(rng, 0..4)]
}

fn pick_k(rng: &mut ChaCha8Rng) -> f64 {
    [0.5, 1.0, 3.0, 10.0][rand::Rng::gen_range(rng, 0..4)]
}

proptest! {
    #[test]
    fn nnf_rewrite_preserves_exact_robustness(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 3, true);
        let s = fitting_signal(&mut rng, &f);
        let nnf = f.to_nnf().unwrap();
        prop_assert!(nnf.is_nnf());
        prop_assert_eq!(nnf.horizon(), f.horizon());
        let a = robustness(&f, &s, 0).unwrap();
        let b = robustness(&nnf, &s, 0).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 3, true);
        let reparsed = parse(&f.to_text(), &table).unwrap();
        prop_assert_eq!(&reparsed, &f, "text: {}", f.to_text());
    }

    #[test]
    fn negation_flips_exact_robustness(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_until_free(&mut rng, &table, 3);
        let s = fitting_signal(&mut rng, &f);
        let a = robustness(&f, &s, 0).unwrap();
        let b = robustness(&Formula::not(f), &s, 0).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn always_is_dual_of_eventually(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let inner = random_until_free(&mut rng, &table, 2);
        let g = Formula::always(1, 4, inner.clone());
        let dual = Formula::not(Formula::eventually(1, 4, Formula::not(inner)));
        let s = fitting_signal(&mut rng, &g);
        let a = robustness(&g, &s, 0).unwrap();
        let b = robustness(&dual, &s, 0).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn srm2_under_srm3_over(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 3, false).to_nnf().unwrap();
        let s = fitting_signal(&mut rng, &f);
        let k = pick_k(&mut rng);
        let exact = robustness(&f, &s, 0).unwrap();
        let under = smooth_robustness(&f, &s, &SmoothConfig::new(Srm::Srm2).with_k(k, k), 0).unwrap();
        let over = smooth_robustness(&f, &s, &SmoothConfig::new(Srm::Srm3).with_k(k, k), 0).unwrap();
        prop_assert!(under <= exact + 1e-9, "under {} exact {}", under, exact);
        prop_assert!(over >= exact - 1e-9, "over {} exact {}", over, exact);
    }

    #[test]
    fn error_interval_contains_true_error(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let noise = match rand::Rng::gen_range(&mut rng, 0..3) {
            0 => None,
            _ => Some((-0.01, 0.01)),
        };
        let table = test_table(noise);
        let f = random_formula(&mut rng, &table, 3, false).to_nnf().unwrap();
        let s = fitting_signal(&mut rng, &f);
        let k = pick_k(&mut rng);
        let mut cfg = SmoothConfig::new(pick_srm(&mut rng)).with_k(k, k);
        if noise.is_some() {
            cfg = cfg.with_noise();
        }
        let exact = robustness(&f, &s, 0).unwrap();
        let smooth = smooth_robustness(&f, &s, &cfg, 0).unwrap();
        let report = error_interval(&f, &s, &cfg).unwrap();
        prop_assert!(
            report.interval.contains(exact - smooth, 1e-9),
            "error {} outside [{}, {}]",
            exact - smooth,
            report.interval.lo,
            report.interval.hi
        );
    }

    #[test]
    fn tight_interval_within_signal_free(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 3, false).to_nnf().unwrap();
        let s = fitting_signal(&mut rng, &f);
        let k = pick_k(&mut rng);
        let cfg = SmoothConfig::new(pick_srm(&mut rng)).with_k(k, k);
        let tight = error_interval(&f, &s, &cfg).unwrap();
        // signals live in [-4,4] and predicate values within about +-9, so
        // 50 generously bounds every operator's input spread
        let free = error_interval_signal_free(&f, &cfg, 50.0).unwrap();
        prop_assert!(
            free.interval.contains_interval(tight.interval, 1e-9),
            "tight {:?} outside free {:?}",
            tight.interval,
            free.interval
        );
    }

    #[test]
    fn signal_free_width_scales_inversely_with_k_for_quasi(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 3, false).to_nnf().unwrap();
        let base = error_interval_signal_free(&f, &SmoothConfig::new(Srm::Srm1).with_k(1.0, 1.0), 50.0)
            .unwrap()
            .width();
        for k in [2.0, 5.0] {
            let w = error_interval_signal_free(&f, &SmoothConfig::new(Srm::Srm1).with_k(k, k), 50.0)
                .unwrap()
                .width();
            prop_assert!((w - base / k).abs() <= 1e-12 * base.max(1.0), "k={}: {} vs {}", k, w, base / k);
        }
    }

    #[test]
    fn gradient_zero_prefix_for_suffixes(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 2, false).to_nnf().unwrap();
        let horizon = f.horizon() as usize;
        let t = rand::Rng::gen_range(&mut rng, 0..3usize);
        let s = common::random_signal(&mut rng, horizon + t + 1);
        let cfg = SmoothConfig::new(pick_srm(&mut rng)).with_k(pick_k(&mut rng), 3.0);
        let g = grad_wrt_signal(&f, &s, &cfg, t).unwrap();
        prop_assert!(g.data[..t * common::Q].iter().all(|&x| x == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let table = test_table(None);
        let f = random_formula(&mut rng, &table, 2, false).to_nnf().unwrap();
        let s = fitting_signal(&mut rng, &f);
        let cfg = SmoothConfig::new(pick_srm(&mut rng)).with_k(pick_k(&mut rng), pick_k(&mut rng));
        let g = grad_wrt_signal(&f, &s, &cfg, 0).unwrap();
        let flat: Vec<f64> = s.samples().iter().flatten().copied().collect();
        let fd = smooth_stl::finite_diff_grad(
            &|x: &[f64]| {
                let sig = smooth_stl::Signal::flat(
                    x.chunks(common::Q).map(|c| c.to_vec()).collect(),
                )
                .unwrap();
                smooth_robustness(&f, &sig, &cfg, 0)
            },
            &flat,
            1e-6,
        )
        .unwrap();
        let scale = fd.iter().map(|x| x.abs()).fold(1.0f64, f64::max);
        for (i, (a, b)) in g.data.iter().zip(&fd).enumerate() {
            prop_assert!((a - b).abs() / scale < 1e-6, "entry {}: {} vs {}", i, a, b);
        }
    }
}
