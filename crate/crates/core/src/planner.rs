//! Group state variables and backward-chaining action networks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sv::{BsvId, CsvId, EventKind, Model, SourceId, TargetId, Unconditionality};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GsvId(pub u32);

/// A group of BSVs acting together as sources or predicted events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gsv {
    pub id: GsvId,
    pub members: BTreeSet<BsvId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlanNode {
    Bsv(BsvId),
    Gsv(GsvId),
    Csv(CsvId),
}

/// Requested state of a node: activation, deactivation, active, inactive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    A,
    D,
    On,
    Off,
}

impl Mode {
    /// What must hold before the mode can be reached.
    pub fn precondition(self) -> Mode {
        match self {
            Mode::A => Mode::Off,
            Mode::D => Mode::On,
            Mode::On => Mode::A,
            Mode::Off => Mode::D,
        }
    }

    fn of_event(kind: EventKind) -> Mode {
        match kind {
            EventKind::Activation => Mode::A,
            EventKind::Deactivation => Mode::D,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::A => "A",
            Mode::D => "D",
            Mode::On => "1",
            Mode::Off => "0",
        }
    }
}

pub type PlanKey = (PlanNode, Mode);

/// A model view with CSV connections rewired through GSVs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanGraph {
    pub gsvs: Vec<Gsv>,
    by_members: BTreeMap<BTreeSet<BsvId>, GsvId>,
    pub pos_requirements: BTreeMap<CsvId, Vec<PlanKey>>,
    pub neg_requirements: BTreeMap<CsvId, Vec<PlanKey>>,
    pub event_conditioners: BTreeMap<PlanKey, Vec<CsvId>>,
    pub csv_conditioners: BTreeMap<CsvId, Vec<CsvId>>,
    pub actions: BTreeSet<BsvId>,
    unconditionality: BTreeMap<CsvId, Unconditionality>,
}

impl PlanGraph {
    fn group(&mut self, members: BTreeSet<BsvId>) -> GsvId {
        if let Some(id) = self.by_members.get(&members) {
            return *id;
        }
        let id = GsvId(self.gsvs.len() as u32);
        self.gsvs.push(Gsv { id, members: members.clone() });
        self.by_members.insert(members, id);
        id
    }

    pub fn gsv(&self, id: GsvId) -> &Gsv {
        &self.gsvs[id.0 as usize]
    }

    pub fn gsv_by_members(&self, members: &BTreeSet<BsvId>) -> Option<GsvId> {
        self.by_members.get(members).copied()
    }

    fn members(&self, n: PlanNode) -> BTreeSet<BsvId> {
        match n {
            PlanNode::Bsv(b) => [b].into(),
            PlanNode::Gsv(g) => self.gsv(g).members.clone(),
            PlanNode::Csv(_) => BTreeSet::new(),
        }
    }

    /// GSVs whose member set strictly contains the node's.
    pub fn constituencies(&self, n: PlanNode) -> Vec<GsvId> {
        let m = self.members(n);
        if m.is_empty() {
            return vec![];
        }
        self.gsvs
            .iter()
            .filter(|g| g.members.len() > m.len() && m.is_subset(&g.members))
            .map(|g| g.id)
            .collect()
    }

    /// Whether `(node, mode)` holds in the model's current states.
    pub fn satisfied(&self, model: &Model, key: PlanKey) -> bool {
        let (node, mode) = key;
        let bsv_ok = |b: BsvId| -> bool {
            if self.actions.contains(&b) {
                return matches!(mode, Mode::On | Mode::Off);
            }
            match mode {
                Mode::On => model.bsvs[b.0 as usize].state.is_active(),
                Mode::Off => !model.bsvs[b.0 as usize].state.is_active(),
                Mode::A => model.dsvs[&crate::sv::DsvId::activation(b)].state.is_active(),
                Mode::D => model.dsvs[&crate::sv::DsvId::deactivation(b)].state.is_active(),
            }
        };
        match node {
            PlanNode::Bsv(b) => bsv_ok(b),
            PlanNode::Gsv(g) => self.gsv(g).members.iter().all(|b| bsv_ok(*b)),
            PlanNode::Csv(c) => {
                self.pos_requirements.get(&c).is_some_and(|r| r.iter().all(|k| self.satisfied(model, *k)))
                    && self.neg_requirements.get(&c).is_none_or(|r| r.iter().all(|k| self.satisfied(model, *k)))
            }
        }
    }

    pub fn is_action(&self, key: PlanKey) -> bool {
        matches!(key.0, PlanNode::Bsv(b) if self.actions.contains(&b))
    }
}

/// Builds GSVs from every CSV's multi-BSV source sets and grouped predicted events.
pub fn build_gsvs(model: &Model) -> PlanGraph {
    let mut g = PlanGraph {
        actions: model.action_bsvs().map(|b| b.id).collect(),
        ..Default::default()
    };
    for c in model.csvs.values() {
        g.unconditionality.insert(c.id, c.unconditionality);
        for (sources, on, store_pos) in [(&c.pos_sources, Mode::On, true), (&c.neg_sources, Mode::Off, false)] {
            let mut reqs = Vec::new();
            let mut plain = BTreeSet::new();
            for s in sources {
                match s {
                    SourceId::Bsv(b) if g.actions.contains(b) => reqs.push((PlanNode::Bsv(*b), on)),
                    SourceId::Bsv(b) => {
                        plain.insert(*b);
                    }
                    SourceId::Dsv(d) if store_pos => reqs.push((PlanNode::Bsv(d.bsv), Mode::of_event(d.kind))),
                    SourceId::Dsv(_) => {}
                }
            }
            if plain.len() >= 2 {
                let id = g.group(plain);
                reqs.push((PlanNode::Gsv(id), on));
            } else {
                reqs.extend(plain.into_iter().map(|b| (PlanNode::Bsv(b), on)));
            }
            if store_pos {
                g.pos_requirements.insert(c.id, reqs);
            } else {
                g.neg_requirements.insert(c.id, reqs);
            }
        }
        for kind in [EventKind::Activation, EventKind::Deactivation] {
            let group: BTreeSet<BsvId> = c
                .targets
                .iter()
                .filter_map(|t| match t {
                    TargetId::Dsv(d) if d.kind == kind => Some(d.bsv),
                    _ => None,
                })
                .collect();
            let mode = Mode::of_event(kind);
            let node = match group.len() {
                0 => continue,
                1 => PlanNode::Bsv(*group.iter().next().expect("one")),
                _ => PlanNode::Gsv(g.group(group)),
            };
            g.event_conditioners.entry((node, mode)).or_default().push(c.id);
        }
        for t in c.csv_targets() {
            g.csv_conditioners.entry(t).or_default().push(c.id);
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionNetwork {
    pub goal: Option<PlanKey>,
    pub nodes: BTreeSet<PlanKey>,
    /// Upstream to downstream.
    pub edges: BTreeSet<(PlanKey, PlanKey)>,
    pub roots: BTreeSet<PlanKey>,
    pub reachable: bool,
}

impl ActionNetwork {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

struct Expander<'a> {
    graph: &'a PlanGraph,
    model: &'a Model,
    cap: usize,
    memo: BTreeMap<PlanKey, Option<bool>>,
    an: ActionNetwork,
}

impl Expander<'_> {
    fn pathways(&self, key: PlanKey) -> (Vec<PlanKey>, usize) {
        let g = self.graph;
        let (node, mode) = key;
        let mut out = Vec::new();
        match node {
            PlanNode::Bsv(_) | PlanNode::Gsv(_) => {
                if g.is_action(key) {
                    return (out, 0);
                }
                out.push((node, mode.precondition()));
                if let PlanNode::Gsv(id) = node {
                    out.extend(g.gsv(id).members.iter().map(|b| (PlanNode::Bsv(*b), mode)));
                }
                out.extend(g.constituencies(node).into_iter().map(|c| (PlanNode::Gsv(c), mode)));
                if matches!(mode, Mode::A | Mode::D) {
                    if let Some(cs) = g.event_conditioners.get(&key) {
                        out.extend(cs.iter().map(|c| (PlanNode::Csv(*c), Mode::On)));
                    }
                }
                (out, 0)
            }
            PlanNode::Csv(c) => {
                let pos = g.pos_requirements.get(&c).cloned().unwrap_or_default();
                let required = pos.len();
                out.extend(pos);
                out.extend(g.neg_requirements.get(&c).cloned().unwrap_or_default());
                if let Some(cs) = g.csv_conditioners.get(&c) {
                    out.extend(cs.iter().map(|u| (PlanNode::Csv(*u), Mode::On)));
                }
                (out, required)
            }
        }
    }

    fn expand(&mut self, key: PlanKey, depth: usize) -> bool {
        match self.memo.get(&key) {
            Some(Some(r)) => return *r,
            Some(None) => return false,
            None => {}
        }
        if self.graph.satisfied(self.model, key) {
            self.memo.insert(key, Some(true));
            self.an.nodes.insert(key);
            self.an.roots.insert(key);
            return true;
        }
        if depth >= self.cap {
            return false;
        }
        self.memo.insert(key, None);
        let (pathways, required) = self.pathways(key);
        let mut ok_any = false;
        let mut ok_required = true;
        let mut good = Vec::new();
        for (i, up) in pathways.into_iter().enumerate() {
            let ok = self.expand(up, depth + 1);
            if ok {
                good.push(up);
                ok_any = true;
            } else if i < required {
                ok_required = false;
            }
        }
        let ok = if required > 0 { ok_required } else { ok_any };
        self.memo.insert(key, Some(ok));
        if ok {
            self.an.nodes.insert(key);
            for up in good {
                self.an.edges.insert((up, key));
            }
        }
        ok
    }
}

/// Expands upstream from `goal` until nodes satisfied by current states are reached.
pub fn generate_action_network(graph: &PlanGraph, model: &Model, goal: PlanKey, depth_cap: usize) -> Result<ActionNetwork> {
    match goal.0 {
        PlanNode::Bsv(b) => {
            model.bsv(b)?;
        }
        PlanNode::Gsv(g) if (g.0 as usize) >= graph.gsvs.len() => {
            return Err(Error::UnknownId(format!("GSV {}", g.0)))
        }
        PlanNode::Csv(c) => {
            model.csv(c)?;
        }
        _ => {}
    }
    let mut ex = Expander { graph, model, cap: depth_cap, memo: BTreeMap::new(), an: ActionNetwork::default() };
    let ok = ex.expand(goal, 0);
    let mut an = ex.an;
    an.goal = Some(goal);
    an.reachable = ok;
    if !ok {
        an.nodes.clear();
        an.edges.clear();
        an.roots.clear();
    }
    Ok(an)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceConfig {
    pub epsilon: f64,
    /// A CSV with an active negative source cannot make its action eligible.
    pub respect_negatives: bool,
    /// Conditional CSVs may make actions eligible on their own.
    pub direct_conditional: bool,
}

impl Default for ChoiceConfig {
    fn default() -> Self {
        ChoiceConfig { epsilon: 0.1, respect_negatives: false, direct_conditional: true }
    }
}

/// Actions that some AN CSV can trigger right now.
pub fn eligible_actions(graph: &PlanGraph, model: &Model, an: &ActionNetwork, cfg: &ChoiceConfig) -> BTreeSet<BsvId> {
    action_triggers(graph, model, an, cfg).into_keys().collect()
}

/// Eligible actions with the AN CSVs that make each one eligible.
pub fn action_triggers(
    graph: &PlanGraph,
    model: &Model,
    an: &ActionNetwork,
    cfg: &ChoiceConfig,
) -> BTreeMap<BsvId, Vec<CsvId>> {
    let mut out: BTreeMap<BsvId, Vec<CsvId>> = BTreeMap::new();
    for key in &an.nodes {
        let PlanNode::Csv(c) = key.0 else { continue };
        if !cfg.direct_conditional && graph.unconditionality.get(&c) == Some(&Unconditionality::Conditional) {
            // conditional CSVs act only through their conditioners
            continue;
        }
        let mut reqs: Vec<PlanKey> = Vec::new();
        let mut negs: Vec<PlanKey> = Vec::new();
        let mut chain = vec![c];
        let mut seen = BTreeSet::new();
        let mut useful = false;
        while let Some(x) = chain.pop() {
            if !seen.insert(x) {
                continue;
            }
            reqs.extend(graph.pos_requirements.get(&x).into_iter().flatten());
            negs.extend(graph.neg_requirements.get(&x).into_iter().flatten());
            if let Some(cs) = model.csvs.get(&x) {
                for t in &cs.targets {
                    match t {
                        TargetId::Csv(t) => {
                            if an.nodes.contains(&(PlanNode::Csv(*t), Mode::On)) {
                                chain.push(*t);
                            }
                        }
                        TargetId::Dsv(d) => useful |= event_pending(graph, model, an, d.bsv, Mode::of_event(d.kind)),
                    }
                }
            }
        }
        if !useful {
            continue;
        }
        let acts: BTreeSet<BsvId> = reqs
            .iter()
            .filter_map(|k| match k.0 {
                PlanNode::Bsv(b) if graph.actions.contains(&b) => Some(b),
                _ => None,
            })
            .collect();
        if acts.len() != 1 {
            continue;
        }
        let rest_ok = reqs.iter().filter(|k| !graph.is_action(**k)).all(|k| graph.satisfied(model, *k));
        let neg_ok = !cfg.respect_negatives || negs.iter().all(|k| graph.satisfied(model, *k));
        if rest_ok && neg_ok {
            for a in acts {
                out.entry(a).or_default().push(c);
            }
        }
    }
    out
}

/// The event is wanted by the AN and can still happen from the current state.
fn event_pending(graph: &PlanGraph, model: &Model, an: &ActionNetwork, b: BsvId, mode: Mode) -> bool {
    let wanted = an.nodes.contains(&(PlanNode::Bsv(b), mode))
        || graph
            .gsvs
            .iter()
            .any(|g| g.members.contains(&b) && an.nodes.contains(&(PlanNode::Gsv(g.id), mode)));
    wanted && graph.satisfied(model, (PlanNode::Bsv(b), mode.precondition()))
}

/// Epsilon-random choice, otherwise uniform among eligible actions, falling back to random.
pub fn choose_action<R: Rng>(
    graph: &PlanGraph,
    model: &Model,
    an: &ActionNetwork,
    actions: &[BsvId],
    cfg: &ChoiceConfig,
    rng: &mut R,
) -> Result<BsvId> {
    if actions.is_empty() {
        return Err(Error::Contract("no actions to choose from".into()));
    }
    if rng.gen::<f64>() < cfg.epsilon {
        return Ok(*actions.choose(rng).expect("nonempty"));
    }
    let eligible: Vec<BsvId> = eligible_actions(graph, model, an, cfg).into_iter().collect();
    Ok(*eligible.choose(rng).unwrap_or_else(|| actions.choose(rng).expect("nonempty")))
}
