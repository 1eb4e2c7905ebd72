mod common;

use common::{exhaustive_min, random_spn, P};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varsel::mnr::{MnrConfig, MnrModel, MnrTarget, Polarity};

fn exact() -> MnrConfig {
    MnrConfig { t_ref: 0.0, t_sign: 0.0, ..MnrConfig::default() }
}

fn stream(seed: u64, per_class: usize) -> Vec<(P, u8)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..per_class {
        for label in 0..3u8 {
            let n = 2 + (seed as usize + out.len()) % 4;
            out.push((random_spn(&mut rng, n, 2, 0.35), label));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_labelled_sample_is_explained(seed in any::<u64>()) {
        let mut model = MnrModel::<f64>::new(exact()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (s, label) in stream(seed, 5) {
            let report = model.learn_sample(&s, label, &mut rng).unwrap();
            prop_assert!(!report.unexplained);
        }
    }

    #[test]
    fn learned_samples_keep_satisfying_a_root(seed in any::<u64>()) {
        let mut model = MnrModel::<f64>::new(exact()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = stream(seed, 5);
        for (s, label) in &data {
            model.learn_sample(s, *label, &mut rng).unwrap();
        }
        for (s, label) in &data {
            let kept = model.csvs.values().any(|c| {
                c.target == MnrTarget::Class(*label)
                    && c.polarity == Polarity::Positive
                    && exhaustive_min(&c.source, s) == 0
            });
            prop_assert!(kept, "a class-{label} sample lost every satisfied root");
        }
    }

    #[test]
    fn conditioners_only_lose_elements(seed in any::<u64>()) {
        let mut model = MnrModel::<f64>::new(exact()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (s, label) in stream(seed, 4) {
            let before = model.csvs.clone();
            model.learn_sample(&s, label, &mut rng).unwrap();
            for (id, old) in &before {
                let new = &model.csvs[id];
                prop_assert!(new.source.nodes.keys().all(|n| old.source.nodes.contains_key(n)));
                prop_assert_eq!(new.target, old.target);
                prop_assert_eq!(new.polarity, old.polarity);
                prop_assert!(old.unconditional || !new.unconditional);
            }
        }
    }

    #[test]
    fn depth_is_bounded_and_targets_exist(seed in any::<u64>()) {
        let mut model = MnrModel::<f64>::new(MnrConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (s, label) in stream(seed, 4) {
            model.learn_sample(&s, label, &mut rng).unwrap();
            for c in model.csvs.values() {
                prop_assert!(c.depth < model.config.max_depth);
                match c.target {
                    MnrTarget::Class(l) => {
                        prop_assert_eq!(c.depth, 0);
                        prop_assert!(model.classes.contains_key(&l));
                    }
                    MnrTarget::Csv(t) => prop_assert_eq!(model.csvs[&t].depth + 1, c.depth),
                }
            }
        }
    }

    #[test]
    fn prediction_is_seed_deterministic(seed in any::<u64>()) {
        let mut model = MnrModel::<f64>::new(MnrConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = stream(seed, 3);
        for (s, label) in &data {
            model.learn_sample(s, *label, &mut rng).unwrap();
        }
        for (s, _) in &data {
            let a = model.predict(s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            let b = model.predict(s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
