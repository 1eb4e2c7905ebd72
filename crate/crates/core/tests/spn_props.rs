mod common;

use common::{random_assignment, random_spn, P};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varsel::spn::{is_satisfied_by, refine_by, statistical_refine, Mapping, StatePolynetwork};

fn identity(p: &P) -> Mapping {
    p.nodes.keys().map(|n| (*n, *n)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn refinement_is_sound(seed in any::<u64>(), n0 in 1usize..=12, n1 in 1usize..=12, pe in 0.05f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p0 = random_spn(&mut rng, n0, 3, pe);
        let p1 = random_spn(&mut rng, n1, 3, pe);
        let f = random_assignment(&mut rng, &p0, &p1);
        let nodes_before = p0.node_count();
        refine_by(&mut p0, &p1, &f).unwrap();
        prop_assert!(is_satisfied_by(&p0, &p1, &f).unwrap());
        prop_assert!(p0.node_count() <= nodes_before);
        p0.validate().unwrap();
    }

    #[test]
    fn sequential_refinement_keeps_every_refiner(seed in any::<u64>(), n in 2usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p0 = random_spn(&mut rng, n, 2, 0.4);
        let mut seen = Vec::new();
        for _ in 0..5 {
            let r = random_spn(&mut rng, n, 2, 0.4);
            let f = random_assignment(&mut rng, &p0, &r);
            statistical_refine(&mut p0, &r, &f, 0.0).unwrap();
            seen.push((r, f));
        }
        for (r, f) in &seen {
            prop_assert!(is_satisfied_by(&p0, r, f).unwrap());
        }
    }

    #[test]
    fn satisfaction_is_reflexive(seed in any::<u64>(), n in 0usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_spn(&mut rng, n, 3, 0.3);
        prop_assert!(is_satisfied_by(&p, &p, &identity(&p)).unwrap());
    }

    #[test]
    fn supergraph_refiners_keep_satisfaction(seed in any::<u64>(), n in 1usize..=10, extra in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0 = random_spn(&mut rng, n, 2, 0.3);
        let mut p1 = p0.clone();
        let f = identity(&p0);
        let mut added = Vec::new();
        for i in 0..extra {
            added.push(p1.add_node(&format!("t{}", i % 2), None));
        }
        let ids: Vec<_> = p1.nodes.keys().copied().collect();
        for (i, a) in added.iter().enumerate() {
            p1.add_edge("h", *a, ids[i % ids.len()]).ok();
            p1.add_edge("v", ids[(i * 7) % ids.len()], *a).ok();
        }
        prop_assert!(is_satisfied_by(&p0, &p1, &f).unwrap());
    }

    #[test]
    fn edges_only_grow_between_survivors(seed in any::<u64>(), n in 2usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p0 = random_spn(&mut rng, n, 2, 0.4);
        let p1 = random_spn(&mut rng, n, 2, 0.4);
        let f = random_assignment(&mut rng, &p0, &p1);
        let before = p0.clone();
        refine_by(&mut p0, &p1, &f).unwrap();
        for (key, net) in &p0.networks {
            let old = before.network(key).unwrap();
            for (a, b) in net.edges.keys() {
                prop_assert!(p0.nodes.contains_key(a) && p0.nodes.contains_key(b));
                if !old.has_edge(*a, *b) {
                    // rerelation edge: both ends were connected through removed elements
                    prop_assert!(before.closures()[key.as_str()].path(*a, *b));
                }
            }
        }
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 0usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_spn(&mut rng, n, 3, 0.3);
        let back: P = StatePolynetwork::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), p.to_text());
    }
}

#[test]
fn mismatched_keys_are_rejected() {
    let a = P::new(&["h"]);
    let b = P::new(&["v"]);
    assert!(is_satisfied_by(&a, &b, &Mapping::new()).is_err());
}
