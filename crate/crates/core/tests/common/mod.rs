#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varsel::fsm::{FsmEnv, Subtype, N_ACTIONS};
use varsel::{Learner, LearnerConfig, Model, StepRecord};

/// Drives a learner with uniformly random actions through the three subtypes
/// in turn, resetting on goal like the experiment runner. `visit` sees the
/// model before the step and the step record.
pub fn drive(
    seed: u64,
    steps: u64,
    random_variant: bool,
    config: LearnerConfig,
    mut visit: impl FnMut(&Model, &Learner, &StepRecord),
) -> Learner {
    let mut env = FsmEnv::new(Subtype::RS, random_variant, seed);
    let (model, bind) = env.build_model();
    let mut learner = Learner::new(model, config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(7));
    learner.process_environment_step(&env.observe(&bind)).unwrap();
    let subtypes = [Subtype::RS, Subtype::SGS, Subtype::NEG];
    for t in 0..steps {
        env.subtype = subtypes[(t * 3 / steps.max(1)) as usize % 3];
        let out = env.step(rng.gen_range(0..N_ACTIONS)).unwrap();
        let before = learner.model.clone();
        let rec = learner.process_environment_step(&env.observe(&bind)).unwrap();
        visit(&before, &learner, &rec);
        if out.goal_reached {
            env.reset();
            learner.restart();
            learner.observe_only(&env.observe(&bind)).unwrap();
        }
    }
    learner
}

use std::collections::BTreeMap;
use varsel::spn::{mismatch, Mapping, NodeId, Reach, StatePolynetwork};

pub type P = StatePolynetwork<f64>;

/// Random typed polynetwork over keys "h" and "v".
pub fn random_spn<R: Rng>(rng: &mut R, n: usize, types: usize, edge_p: f64) -> P {
    let mut p = P::new(&["h", "v"]);
    let ids: Vec<NodeId> = (0..n)
        .map(|_| {
            let kind = format!("t{}", rng.gen_range(0..types));
            p.add_node(&kind, Some([rng.gen_range(0.0..28.0), rng.gen_range(0.0..28.0)]))
        })
        .collect();
    for k in ["h", "v"] {
        for a in &ids {
            for b in &ids {
                if a != b && rng.gen_bool(edge_p) {
                    p.add_edge(k, *a, *b).unwrap();
                }
            }
        }
    }
    p
}

/// Random type-preserving injective partial assignment.
pub fn random_assignment<R: Rng>(rng: &mut R, p0: &P, p1: &P) -> Mapping {
    let mut f = Mapping::new();
    for (a, node) in &p0.nodes {
        let free: Vec<NodeId> = p1
            .nodes
            .iter()
            .filter(|(m, n)| n.kind == node.kind && !f.values().any(|v| v == *m))
            .map(|(m, _)| *m)
            .collect();
        if !free.is_empty() && rng.gen_bool(0.8) {
            f.insert(*a, free[rng.gen_range(0..free.len())]);
        }
    }
    f
}

/// Minimum mismatch over every injective type-preserving partial assignment.
pub fn exhaustive_min(p0: &P, p1: &P) -> usize {
    fn go(i: usize, src: &[NodeId], p0: &P, p1: &P, f: &mut Mapping, reach: &BTreeMap<String, Reach>, best: &mut usize) {
        if i == src.len() {
            *best = (*best).min(mismatch(p0, f, reach));
            return;
        }
        go(i + 1, src, p0, p1, f, reach, best);
        for (m, node) in &p1.nodes {
            if node.kind == p0.nodes[&src[i]].kind && !f.values().any(|v| v == m) {
                f.insert(src[i], *m);
                go(i + 1, src, p0, p1, f, reach, best);
                f.remove(&src[i]);
            }
        }
    }
    let reach = p1.closures();
    let src: Vec<NodeId> = p0.nodes.keys().copied().collect();
    let mut best = usize::MAX;
    go(0, &src, p0, p1, &mut Mapping::new(), &reach, &mut best);
    best
}
