use biosec::cancelable::{CancelableSystem, TransformKey};
use biosec::commit::FuzzyCommitment;
use biosec::gf2::LinearCode;
use biosec::metrics::{roc, Method, SketchScorer};
use biosec::multisys::Deployment;
use biosec::rng;
use biosec::sketch::SketchSystem;
use biosec::BitVector;
use proptest::prelude::*;

fn code(n: usize, m: usize, seed: u64) -> LinearCode {
    LinearCode::random(n, m, &mut rng::stream(seed, "prop-code")).unwrap()
}

fn vector(n: usize, seed: u64) -> BitVector {
    BitVector::random(n, &mut rng::stream(seed, "prop-vector"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enrollment_always_authenticates(n in 2usize..12, seed in any::<u64>(), tau in 0.0f64..0.49) {
        let m = 1 + seed as usize % (n - 1);
        let sys = SketchSystem::new(code(n, m, seed), tau).unwrap();
        let a = vector(n, seed);
        let t = sys.enroll(&a, None).unwrap();
        prop_assert!(sys.accepts(&t, &a, None).unwrap());
    }

    #[test]
    fn commitment_agrees_with_sketch(n in 2usize..9, seed in any::<u64>(), tau in 0.0f64..0.49) {
        let m = 1 + seed as usize % (n - 1);
        let c = code(n, m, seed);
        let sk = SketchSystem::new(c.clone(), tau).unwrap();
        let fc = FuzzyCommitment::new(c, tau).unwrap();
        let a = vector(n, seed);
        let z = fc.sample_message(&mut rng::stream(seed, "prop-z"));
        let (st, ct) = (sk.enroll(&a, None).unwrap(), fc.commit(&a, &z, None).unwrap());
        for d in BitVector::all(n) {
            prop_assert_eq!(sk.accepts(&st, &d, None).unwrap(), fc.accepts(&ct, &d, None).unwrap());
        }
    }

    #[test]
    fn linkage_candidates_keep_a_and_leak_the_rank(seed in any::<u64>(), k in 1usize..4) {
        let n = 8;
        let mut r = rng::stream(seed, "prop-deploy");
        let systems: Vec<_> = (0..k)
            .map(|i| (i.to_string(), SketchSystem::new(LinearCode::random(n, 1 + (seed as usize + i) % 4, &mut r).unwrap(), 0.0).unwrap()))
            .collect();
        let a = BitVector::random(n, &mut r);
        let d = Deployment::enroll_identical(systems, &a).unwrap();
        let order: Vec<usize> = (0..k).collect();
        prop_assert!(d.intersect_candidates(&order).unwrap().contains(&a));
        let leak = d.cumulative_leakage(&order).unwrap();
        prop_assert!(leak.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((leak[k - 1] - d.stacked_rank(&order).unwrap() as f64).abs() < 1e-9);
    }

    #[test]
    fn permute_salt_preserves_distance(n in 1usize..64, seed in any::<u64>()) {
        let mut r = rng::stream(seed, "prop-iso");
        let key = TransformKey::random_permute_salt(n, &mut r);
        let (a, d) = (BitVector::random(n, &mut r), BitVector::random(n, &mut r));
        prop_assert_eq!(key.transform(&a).unwrap().hamming(&key.transform(&d).unwrap()).unwrap(), a.hamming(&d).unwrap());
        let sys = CancelableSystem::new(0.25).unwrap();
        let t = sys.enroll(&key, &a).unwrap();
        prop_assert_eq!(sys.authenticate(&key, &t, &d).unwrap().distance, a.hamming(&d).unwrap());
    }

    #[test]
    fn roc_is_monotone(n in 3usize..10, seed in any::<u64>(), p in 0.0f64..0.3) {
        let m = 1 + seed as usize % (n - 1);
        let scorer = SketchScorer::new(SketchSystem::new(code(n, m, seed), 0.0).unwrap(), None);
        let taus: Vec<f64> = (0..n).map(|i| i as f64 / (2 * n) as f64).collect();
        let points = roc(&scorer, p, &taus, Method::Exact).unwrap();
        for w in points.windows(2) {
            prop_assert!(w[0].far.value <= w[1].far.value);
            prop_assert!(w[0].frr.value >= w[1].frr.value - 1e-12);
        }
    }
}
