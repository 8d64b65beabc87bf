use std::collections::BTreeSet;

use avatar_core::conformance::{etc_precision, token_replay_fitness};
use avatar_core::eval::{compute_rates, score_s, split_system, SystemTruth};
use avatar_core::genmodel::{FeatureScorer, NGramGenerator, PROB_EPS};
use avatar_core::log::{read_variants, variants_to_tsv, Activity, UniqueVariantLog, Variant, VariantLog};
use avatar_core::losses::pairwise_sum;
use avatar_core::petri::{dfg_discover, flower_model, playout_enumerate, trace_model};
use avatar_core::sampling::{mh_acceptance, total_variation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

fn variant() -> impl Strategy<Value = Variant> {
    prop::collection::vec(0..LABELS.len(), 1..=5)
        .prop_map(|xs| Variant::from_labels(xs.into_iter().map(|i| LABELS[i])).unwrap())
}

fn variant_set(min: usize, max: usize) -> impl Strategy<Value = BTreeSet<Variant>> {
    prop::collection::btree_set(variant(), min..=max)
}

fn unique(vs: &BTreeSet<Variant>) -> UniqueVariantLog {
    vs.iter().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_distributions_are_normalized(
        train in variant_set(1, 8),
        order in 1usize..5,
        smoothing in prop::sample::select(vec![0.0, 0.01, 0.5]),
        seen in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let log = unique(&train);
        let g = if seen {
            NGramGenerator::fit_mle_seen(&log, order, smoothing).unwrap()
        } else {
            NGramGenerator::fit_mle(&log, order, smoothing).unwrap()
        };
        let n = g.alphabet().len() as u32;
        let mut prefixes: Vec<Vec<u32>> = vec![vec![]];
        for v in &train {
            let idx: Vec<u32> = v.labels().iter().map(|a| g.alphabet().iter().position(|b| b == a).unwrap() as u32).collect();
            prefixes.extend((1..=idx.len()).map(|k| idx[..k].to_vec()));
            prop_assert!(g.probability(v) > 0.0);
        }
        prefixes.push((0..g.max_len() as u32).map(|i| i % n).collect());
        for p in &prefixes {
            let dist = g.next_distribution(p);
            prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(dist.iter().all(|&x| x >= 0.0));
            if smoothing > 0.0 && p.len() < g.max_len() {
                prop_assert!(dist[..n as usize].iter().all(|&x| x > 0.0));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let v = g.sample_variant(1.3, &mut rng);
            prop_assert!(!v.is_empty() && v.len() <= g.max_len());
        }
    }

    #[test]
    fn checkpoints_round_trip(train in variant_set(1, 6), order in 1usize..4, seen in any::<bool>()) {
        let log = unique(&train);
        let g = if seen {
            NGramGenerator::fit_mle_seen(&log, order, 0.1).unwrap()
        } else {
            NGramGenerator::fit_mle(&log, order, 0.1).unwrap()
        };
        let back: NGramGenerator = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn rate_identities_hold(
        v_s in variant_set(2, 30),
        extra in variant_set(0, 10),
        pick in prop::collection::vec(any::<bool>(), 30),
        seed in any::<u64>(),
    ) {
        let truth = split_system(&v_s, 0.7, seed).unwrap();
        let estimate: BTreeSet<Variant> = v_s
            .iter()
            .zip(pick.iter().cycle())
            .filter(|(_, &k)| k)
            .map(|(v, _)| v.clone())
            .chain(extra)
            .collect();
        let r = compute_rates(&estimate, &truth, None).unwrap();
        let c = r.counts;
        prop_assert_eq!(c.realistic, c.hit_observed + c.hit_unobserved);
        prop_assert!((r.tp * c.sampled as f64 - r.tp_s * c.system as f64).abs() < 1e-9 || c.sampled == 0);
        prop_assert!((r.tp_s * c.system as f64 - (r.tp_o * c.observed as f64 + r.tp_u * c.unobserved as f64)).abs() < 1e-9);
        for x in [r.tp, r.fp, r.tp_s, r.tp_o, r.tp_u] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!(r.s >= 0.0 && r.s <= std::f64::consts::SQRT_2 + 1e-12);
        prop_assert_eq!(r.s, score_s(r.tp, r.tp_u));
    }

    #[test]
    fn split_partitions_the_system(v_s in variant_set(2, 40), seed in any::<u64>()) {
        let truth = split_system(&v_s, 0.7, seed).unwrap();
        let n = v_s.len();
        prop_assert_eq!(truth.lplus.len(), ((0.7 * n as f64 + 1e-9).floor() as usize).clamp(1, n - 1));
        prop_assert_eq!(truth.lplus.len() + truth.v_u.len(), n);
        prop_assert!(truth.lplus.iter().all(|v| v_s.contains(v) && !truth.v_u.contains(v)));
        let longest = v_s.iter().map(Variant::len).max().unwrap();
        prop_assert!(truth.lplus.iter().any(|v| v.len() == longest));
        prop_assert_eq!(split_system(&v_s, 0.7, seed).unwrap(), truth.clone());
        prop_assert_eq!(SystemTruth::new(v_s.clone(), truth.lplus.clone()).unwrap(), truth);
    }

    #[test]
    fn acceptance_is_a_probability(p in PROB_EPS..1.0 - PROB_EPS, q in PROB_EPS..1.0 - PROB_EPS) {
        let a = mh_acceptance(p, q).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        if q >= p {
            prop_assert_eq!(a, 1.0);
        } else {
            // odds ratio of the two scores
            prop_assert!((a - (1.0 / p - 1.0) / (1.0 / q - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn scores_are_clamped(weights in prop::collection::vec(-1e3f64..1e3, 1..4), v in variant()) {
        let vocab: Vec<Activity> = LABELS.iter().map(|l| Activity::new(l).unwrap()).collect();
        let mut d = FeatureScorer::new(vocab, 5).unwrap();
        let w: Vec<f64> = (0..d.dim()).map(|i| weights[i % weights.len()]).collect();
        d.set_params(w, weights[0]).unwrap();
        let s = d.score(&v);
        prop_assert!((PROB_EPS..=1.0 - PROB_EPS).contains(&s));
    }

    #[test]
    fn variant_tsv_round_trips(vs in prop::collection::vec(variant(), 0..10)) {
        let text = variants_to_tsv(&vs).unwrap();
        prop_assert_eq!(read_variants(text.as_bytes()).unwrap(), vs);
    }

    #[test]
    fn trace_and_flower_playouts(lplus in variant_set(1, 6)) {
        let log = unique(&lplus);
        let max_len = log.max_len();
        let trace = trace_model(&log).unwrap();
        prop_assert_eq!(playout_enumerate(&trace, max_len, 3).unwrap(), lplus.clone());
        let alphabet = log.alphabet();
        let flower = flower_model(&alphabet).unwrap();
        let expected: usize = (1..=max_len.min(3)).map(|l| alphabet.len().pow(l as u32)).sum();
        prop_assert_eq!(playout_enumerate(&flower, max_len.min(3), 3).unwrap().len(), expected);
    }

    #[test]
    fn models_replay_their_own_log(lplus in variant_set(1, 6)) {
        let log = unique(&lplus);
        let lstar = VariantLog::new(log.to_vec());
        for net in [trace_model(&log).unwrap(), dfg_discover(&lstar).unwrap()] {
            prop_assert_eq!(token_replay_fitness(&net, &lstar), 1.0);
        }
        prop_assert_eq!(etc_precision(&trace_model(&log).unwrap(), &lstar), 1.0);
    }

    #[test]
    fn pairwise_sum_is_order_stable(mut xs in prop::collection::vec(-1e6f64..1e6, 0..200), seed in any::<u64>()) {
        let a = pairwise_sum(&xs);
        use rand::seq::SliceRandom;
        xs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = pairwise_sum(&xs);
        prop_assert!((a - b).abs() <= 1e-9 * xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0));
    }

    #[test]
    fn total_variation_is_a_metric_value(a in prop::collection::vec(0u8..5, 1..50), b in prop::collection::vec(0u8..5, 1..50)) {
        let d = total_variation(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - total_variation(&b, &a)).abs() < 1e-12);
        prop_assert!(total_variation(&a, &a) < 1e-12);
    }
}
