//! Per-step adaptation of a model: state computation, CSV refinement,
//! negative-source formation and explanatory CSV generation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::significance::{apply_significance_policy, NceStats};
use crate::sv::{
    sources_satisfied, BsvId, Csv, CsvId, Model, SourceId, SvId, SvState, TargetId, Unconditionality,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Carry all DSV states forward on steps where no BSV changed.
    pub persist_events: bool,
    /// Inactive target with partially active positives gives Active instead of Unobserved.
    pub partial_sources_active: bool,
    /// Block CSVs whose |NCE| falls below this cutoff.
    pub nce_cutoff: Option<f64>,
    /// Per-CSV instance ring size; 0 disables logging.
    pub instance_capacity: usize,
    /// Record full SV state snapshots in each step record.
    pub record_states: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            persist_events: false,
            partial_sources_active: false,
            nce_cutoff: None,
            instance_capacity: 256,
            record_states: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepEvent {
    CsvCreated { csv: CsvId, pos: Vec<SourceId>, targets: Vec<TargetId> },
    PosRefined { csv: CsvId, removed: Vec<SourceId> },
    NegRefined { csv: CsvId, removed: Vec<SourceId> },
    NegFormed { csv: CsvId, sources: Vec<SourceId> },
    /// Heterogeneous targets: `from` is retired and replaced by `into`.
    Duplicated { from: CsvId, into: Vec<CsvId> },
    /// Unobserved targets moved to `duplicate` ahead of negative formation on `from`.
    Protected { from: CsvId, duplicate: CsvId },
    Retargeted { csv: CsvId, removed: Vec<TargetId>, added: Vec<TargetId> },
    FlagChanged { sv: TargetId, from: Unconditionality, to: Unconditionality },
    CsvRemoved { csv: CsvId },
    Merged { kept: CsvId, removed: CsvId },
}

impl StepEvent {
    /// CSVs whose source or target sets this event touches.
    pub fn touched(&self) -> Vec<CsvId> {
        match self {
            StepEvent::CsvCreated { csv, .. }
            | StepEvent::PosRefined { csv, .. }
            | StepEvent::NegRefined { csv, .. }
            | StepEvent::NegFormed { csv, .. }
            | StepEvent::Retargeted { csv, .. }
            | StepEvent::CsvRemoved { csv } => vec![*csv],
            StepEvent::Duplicated { from, into } => {
                let mut v = vec![*from];
                v.extend(into);
                v
            }
            StepEvent::Protected { from, duplicate } => vec![*from, *duplicate],
            StepEvent::Merged { kept, removed } => vec![*kept, *removed],
            StepEvent::FlagChanged { sv, .. } => match sv {
                TargetId::Csv(c) => vec![*c],
                TargetId::Dsv(_) => vec![],
            },
        }
    }

    /// Whether the event is a structural change that may alter a CSV's response.
    pub fn is_mutation(&self) -> bool {
        !matches!(self, StepEvent::FlagChanged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: u64,
    pub before: BTreeMap<SvId, SvState>,
    pub after: BTreeMap<SvId, SvState>,
    pub events: Vec<StepEvent>,
}

/// Previous-step source states and current target states seen by one CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub step: u64,
    pub source_states: BTreeMap<SourceId, SvState>,
    pub target_states: BTreeMap<TargetId, SvState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EligibilityMode {
    Positive,
    Negative,
}

#[derive(Debug, Clone)]
pub struct Learner {
    pub model: Model,
    pub config: LearnerConfig,
    step: u64,
    primed: bool,
    instances: BTreeMap<CsvId, VecDeque<Instance>>,
}

impl Learner {
    pub fn new(model: Model, config: LearnerConfig) -> Self {
        Learner { model, config, step: 0, primed: false, instances: BTreeMap::new() }
    }

    /// Forgets the previous observation so the next step only primes states.
    pub fn restart(&mut self) {
        self.primed = false;
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn instances(&self, csv: CsvId) -> impl Iterator<Item = &Instance> {
        self.instances.get(&csv).into_iter().flatten()
    }

    fn assign_observations(&mut self, obs: &BTreeMap<BsvId, SvState>) -> Result<()> {
        for (id, st) in obs {
            let b = self.model.bsv(*id)?;
            if !st.is_observed() {
                return Err(Error::Contract(format!("BSV {} observed as Unobserved", b.name)));
            }
        }
        let mut plain = BTreeMap::new();
        for b in &self.model.bsvs {
            match obs.get(&b.id) {
                Some(st) if !b.is_action => {
                    plain.insert(b.id, *st);
                }
                None if !b.is_action => {
                    return Err(Error::Contract(format!("missing observation for BSV {}", b.name)))
                }
                _ => {}
            }
        }
        // Observed action state is the action taken before this step.
        for b in self.model.bsvs.iter_mut().filter(|b| b.is_action) {
            b.prev_state = obs.get(&b.id).copied().unwrap_or(SvState::Inactive);
            b.state = SvState::Inactive;
        }
        self.model.deduce_dsv_states(&plain, self.config.persist_events)?;
        if !self.primed {
            self.primed = true;
            for b in self.model.bsvs.iter_mut().filter(|b| !b.is_action) {
                b.prev_state = b.state;
            }
            for d in self.model.dsvs.values_mut() {
                let b = &self.model.bsvs[d.id.bsv.0 as usize];
                d.prev_state = SvState::Unobserved;
                d.state = crate::sv::dsv_transition(d.id.kind, b.prev_state, b.state);
            }
        }
        Ok(())
    }

    fn snapshot_states(&self) -> BTreeMap<SvId, SvState> {
        if !self.config.record_states {
            return BTreeMap::new();
        }
        let m = &self.model;
        let mut s = BTreeMap::new();
        for b in &m.bsvs {
            s.insert(SvId::Bsv(b.id), b.state);
        }
        for d in m.dsvs.values() {
            s.insert(SvId::Dsv(d.id), d.state);
        }
        for c in m.csvs.values() {
            s.insert(SvId::Csv(c.id), c.state);
        }
        s
    }

    /// Updates states without any learning: no structural change, no statistics.
    pub fn observe_only(&mut self, obs: &BTreeMap<BsvId, SvState>) -> Result<StepRecord> {
        let before = self.snapshot_states();
        self.assign_observations(obs)?;
        let levels = self.model.levels().to_vec();
        let prev = self.model.prev_source_states();
        for id in levels.into_iter().flatten() {
            let c = &self.model.csvs[&id];
            let st = state_by_definition(c, &prev, |t| self.model.target_state(t))?;
            self.model.csvs.get_mut(&id).expect("csv").state = st;
        }
        self.step += 1;
        Ok(StepRecord { step_index: self.step - 1, before, after: self.snapshot_states(), events: vec![] })
    }

    /// One full learning step.
    pub fn process_environment_step(&mut self, obs: &BTreeMap<BsvId, SvState>) -> Result<StepRecord> {
        let before = self.snapshot_states();
        self.assign_observations(obs)?;
        let mut events = Vec::new();

        let levels = self.model.levels().to_vec();
        for id in levels.into_iter().flatten() {
            if self.model.csvs.contains_key(&id) {
                self.compute_csv(id, &mut events)?;
            }
        }

        // duplicates made this step need a level before the unexplained scan
        self.model.add_computation_levels()?;
        let unexplained = self.unexplained();
        if !unexplained.is_empty() {
            let actives: BTreeSet<SourceId> = self
                .model
                .prev_source_states()
                .into_iter()
                .filter(|(_, st)| st.is_active())
                .map(|(s, _)| s)
                .collect();
            let (pos, targets) =
                source_eligibility(&self.model, &actives, &unexplained, EligibilityMode::Positive, None);
            let targets: BTreeSet<TargetId> = if pos.is_empty() { BTreeSet::new() } else { targets };
            for t in &unexplained {
                if !targets.contains(t) {
                    self.set_flag(*t, Unconditionality::PossiblyConditional, &mut events);
                }
            }
            if !targets.is_empty() {
                self.create_csv(pos, targets, &mut events);
            }
        }

        self.refine_model(&mut events);
        self.model.add_computation_levels()?;
        if let Some(cutoff) = self.config.nce_cutoff {
            apply_significance_policy(&mut self.model, cutoff);
        }
        self.step += 1;
        Ok(StepRecord { step_index: self.step - 1, before, after: self.snapshot_states(), events })
    }

    fn set_flag(&mut self, t: TargetId, to: Unconditionality, events: &mut Vec<StepEvent>) {
        let from = self.model.unconditionality(t);
        if from != to {
            self.model.set_unconditionality(t, to);
            events.push(StepEvent::FlagChanged { sv: t, from, to });
        }
    }

    fn create_csv(&mut self, pos: BTreeSet<SourceId>, targets: BTreeSet<TargetId>, events: &mut Vec<StepEvent>) {
        let mut csv = Csv::new(CsvId(0), pos, targets, self.step);
        csv.state = SvState::Active;
        for (t, s) in csv.stats.iter_mut() {
            s.record(true, self.model.target_state(*t));
        }
        let id = self.model.insert_csv(csv);
        let c = &self.model.csvs[&id];
        events.push(StepEvent::CsvCreated {
            csv: id,
            pos: c.pos_sources.iter().copied().collect(),
            targets: c.targets.iter().copied().collect(),
        });
        self.log_instance(id);
    }

    /// Active DSVs and CSVs that are not unconditional, not blocked, and lack an active conditioner.
    fn unexplained(&self) -> Vec<TargetId> {
        let m = &self.model;
        let idx = m.conditioner_index();
        let explained = |t: TargetId| {
            idx.get(&t)
                .is_some_and(|cs| cs.iter().any(|c| m.csvs[c].state.is_active()))
        };
        let mut out = Vec::new();
        for d in m.dsvs.values() {
            let t = TargetId::Dsv(d.id);
            if d.state.is_active() && d.unconditionality != Unconditionality::Unconditional && !explained(t) {
                out.push(t);
            }
        }
        for level in m.levels() {
            for id in level {
                let Some(c) = m.csvs.get(id) else { continue };
                let t = TargetId::Csv(c.id);
                if c.state.is_active()
                    && c.unconditionality != Unconditionality::Unconditional
                    && !c.blocked
                    && !explained(t)
                {
                    out.push(t);
                }
            }
        }
        out
    }

    fn log_instance(&mut self, id: CsvId) {
        let cap = self.config.instance_capacity;
        if cap == 0 {
            return;
        }
        let c = &self.model.csvs[&id];
        let inst = Instance {
            step: self.step,
            source_states: c
                .pos_sources
                .iter()
                .chain(&c.neg_sources)
                .map(|s| (*s, self.model.source_prev_state(*s)))
                .collect(),
            target_states: c.targets.iter().map(|t| (*t, self.model.target_state(*t))).collect(),
        };
        let ring = self.instances.entry(id).or_default();
        if ring.len() == cap {
            ring.pop_front();
        }
        ring.push_back(inst);
    }

    /// Whether the sources as they stand now are satisfied by the previous states.
    fn sources_satisfied_now(&self, id: CsvId) -> bool {
        let prev = |s: &SourceId| self.model.source_prev_state(*s);
        let c = &self.model.csvs[&id];
        c.pos_sources.iter().all(|s| prev(s).is_active()) && !c.neg_sources.iter().any(|s| prev(s).is_active())
    }

    fn record_stats(&mut self, id: CsvId, ss: bool) {
        let c = &self.model.csvs[&id];
        let states: Vec<(TargetId, SvState)> = c.targets.iter().map(|t| (*t, self.model.target_state(*t))).collect();
        let c = self.model.csvs.get_mut(&id).expect("csv");
        for (t, st) in states {
            c.stats.entry(t).or_default().record(ss, st);
        }
    }

    fn compute_csv(&mut self, id: CsvId, events: &mut Vec<StepEvent>) -> Result<()> {
        let c = &self.model.csvs[&id];
        let any_pos = c.pos_sources.iter().any(|s| self.model.source_prev_state(*s).is_active());
        if !any_pos {
            self.log_instance(id);
            let ss = self.sources_satisfied_now(id);
            self.record_stats(id, ss);
            self.model.csvs.get_mut(&id).expect("csv").state = SvState::Unobserved;
            return Ok(());
        }
        let has = |st: SvState| c.targets.iter().any(|t| self.model.target_state(*t) == st);
        if has(SvState::Active) && has(SvState::Inactive) {
            let [a, b] = self.separate_targets(id, events);
            self.compute_homogeneous(a, events);
            self.compute_homogeneous(b, events);
        } else {
            self.compute_homogeneous(id, events);
        }
        Ok(())
    }

    /// Splits a CSV with both active and inactive targets into two copies.
    fn separate_targets(&mut self, id: CsvId, events: &mut Vec<StepEvent>) -> [CsvId; 2] {
        let orig = self.model.csvs.remove(&id).expect("csv");
        let split = |keep: SvState| -> BTreeSet<TargetId> {
            orig.targets
                .iter()
                .filter(|t| {
                    let st = self.model.target_state(**t);
                    st == keep || st == SvState::Unobserved
                })
                .copied()
                .collect()
        };
        let ta = split(SvState::Active);
        let tb = split(SvState::Inactive);
        let a = self.copy_with_targets(&orig, ta);
        let b = self.copy_with_targets(&orig, tb);
        events.push(StepEvent::Duplicated { from: id, into: vec![a, b] });
        self.redirect_conditioners(id, &[a, b], events);
        self.copy_instances(id, a, true);
        self.copy_instances(id, b, true);
        self.instances.remove(&id);
        [a, b]
    }

    fn copy_with_targets(&mut self, orig: &Csv, targets: BTreeSet<TargetId>) -> CsvId {
        let mut c = orig.clone();
        c.stats = orig.stats.iter().filter(|(t, _)| targets.contains(t)).map(|(t, s)| (*t, *s)).collect();
        c.targets = targets;
        self.model.insert_csv(c)
    }

    fn copy_instances(&mut self, from: CsvId, to: CsvId, restrict: bool) {
        let Some(ring) = self.instances.get(&from) else { return };
        let targets = &self.model.csvs[&to].targets;
        let ring: VecDeque<Instance> = ring
            .iter()
            .map(|i| {
                let mut i = i.clone();
                if restrict {
                    i.target_states.retain(|t, _| targets.contains(t));
                }
                i
            })
            .collect();
        self.instances.insert(to, ring);
    }

    /// Makes every conditioner of `old` target `new` instead.
    fn redirect_conditioners(&mut self, old: CsvId, new: &[CsvId], events: &mut Vec<StepEvent>) {
        let old_t = TargetId::Csv(old);
        for c in self.model.csvs.values_mut() {
            if !c.targets.remove(&old_t) {
                continue;
            }
            let st = c.stats.remove(&old_t).unwrap_or_default();
            let mut added = Vec::new();
            for n in new {
                let nt = TargetId::Csv(*n);
                if c.targets.insert(nt) {
                    c.stats.insert(nt, st);
                    added.push(nt);
                }
            }
            events.push(StepEvent::Retargeted { csv: c.id, removed: vec![old_t], added });
        }
    }

    fn compute_homogeneous(&mut self, id: CsvId, events: &mut Vec<StepEvent>) {
        self.log_instance(id);
        // counted against the sources that met this step, before any refinement
        let ss = self.sources_satisfied_now(id);
        let m = &self.model;
        let c = &m.csvs[&id];
        let prev = |s: &SourceId| m.source_prev_state(*s).is_active();
        let any_t = |st: SvState| c.targets.iter().any(|t| m.target_state(*t) == st);
        let mut form_negatives = false;
        let state;
        if any_t(SvState::Active) {
            state = SvState::Active;
            let rm_pos: Vec<SourceId> = c.pos_sources.iter().filter(|s| !prev(s)).copied().collect();
            let rm_neg: Vec<SourceId> = c.neg_sources.iter().filter(|s| prev(s)).copied().collect();
            let c = self.model.csvs.get_mut(&id).expect("csv");
            if !rm_pos.is_empty() {
                for s in &rm_pos {
                    c.pos_sources.remove(s);
                }
                events.push(StepEvent::PosRefined { csv: id, removed: rm_pos });
            }
            if !rm_neg.is_empty() {
                for s in &rm_neg {
                    c.neg_sources.remove(s);
                }
                events.push(StepEvent::NegRefined { csv: id, removed: rm_neg });
            }
        } else if any_t(SvState::Inactive) {
            if !c.pos_sources.iter().all(prev) {
                state = if self.config.partial_sources_active { SvState::Active } else { SvState::Unobserved };
            } else if c.neg_sources.iter().any(prev) {
                state = SvState::Unobserved;
                let rm_neg: Vec<SourceId> = c.neg_sources.iter().filter(|s| !prev(s)).copied().collect();
                if !rm_neg.is_empty() {
                    let c = self.model.csvs.get_mut(&id).expect("csv");
                    for s in &rm_neg {
                        c.neg_sources.remove(s);
                    }
                    events.push(StepEvent::NegRefined { csv: id, removed: rm_neg });
                }
            } else {
                state = SvState::Inactive;
                form_negatives = true;
            }
        } else {
            state = SvState::Unobserved;
        }
        self.model.csvs.get_mut(&id).expect("csv").state = state;
        if form_negatives {
            if self.model.csvs[&id].neg_connections_formed {
                self.set_flag(TargetId::Csv(id), Unconditionality::Conditional, events);
            } else {
                self.form_negative_connections(id, events);
            }
        }
        self.record_stats(id, ss);
    }

    fn form_negative_connections(&mut self, id: CsvId, events: &mut Vec<StepEvent>) {
        let unobserved: BTreeSet<TargetId> = self.model.csvs[&id]
            .targets
            .iter()
            .filter(|t| !self.model.target_state(**t).is_observed())
            .copied()
            .collect();
        if !unobserved.is_empty() {
            let orig = self.model.csvs[&id].clone();
            let mut dup = orig.clone();
            dup.state = SvState::Unobserved;
            dup.stats = orig.stats.iter().filter(|(t, _)| unobserved.contains(t)).map(|(t, s)| (*t, *s)).collect();
            dup.targets = unobserved.clone();
            let dup_id = self.model.insert_csv(dup);
            let c = self.model.csvs.get_mut(&id).expect("csv");
            for t in &unobserved {
                c.targets.remove(t);
                c.stats.remove(t);
            }
            events.push(StepEvent::Protected { from: id, duplicate: dup_id });
            // Conditioners keep the original and also gain the protected copy.
            let old_t = TargetId::Csv(id);
            let new_t = TargetId::Csv(dup_id);
            for c in self.model.csvs.values_mut() {
                if c.targets.contains(&old_t) && c.targets.insert(new_t) {
                    let st = c.stats.get(&old_t).copied().unwrap_or_default();
                    c.stats.insert(new_t, st);
                    events.push(StepEvent::Retargeted { csv: c.id, removed: vec![], added: vec![new_t] });
                }
            }
            self.copy_instances(id, dup_id, true);
        }

        let actives: BTreeSet<SourceId> = self
            .model
            .prev_source_states()
            .into_iter()
            .filter(|(_, st)| st.is_active())
            .map(|(s, _)| s)
            .collect();
        let targets: Vec<TargetId> = self.model.csvs[&id].targets.iter().copied().collect();
        let (neg, _) = source_eligibility(&self.model, &actives, &targets, EligibilityMode::Negative, Some(id));
        let c = self.model.csvs.get_mut(&id).expect("csv");
        c.neg_connections_formed = true;
        if neg.is_empty() {
            self.set_flag(TargetId::Csv(id), Unconditionality::Conditional, events);
        } else {
            c.neg_sources = neg.clone();
            events.push(StepEvent::NegFormed { csv: id, sources: neg.into_iter().collect() });
        }
        self.instances.remove(&id);
    }

    /// Removes empty CSVs and merges duplicates until nothing changes.
    fn refine_model(&mut self, events: &mut Vec<StepEvent>) {
        loop {
            let mut changed = false;
            let dead: Vec<CsvId> = self
                .model
                .csvs
                .values()
                .filter(|c| c.pos_sources.is_empty() || c.targets.is_empty())
                .map(|c| c.id)
                .collect();
            for id in dead {
                changed = true;
                self.model.csvs.remove(&id);
                self.instances.remove(&id);
                events.push(StepEvent::CsvRemoved { csv: id });
                let t = TargetId::Csv(id);
                for c in self.model.csvs.values_mut() {
                    if c.targets.remove(&t) {
                        c.stats.remove(&t);
                        events.push(StepEvent::Retargeted { csv: c.id, removed: vec![t], added: vec![] });
                    }
                }
            }
            let mut seen: BTreeMap<(Vec<SourceId>, Vec<SourceId>, Vec<TargetId>), CsvId> = BTreeMap::new();
            let mut merges = Vec::new();
            for c in self.model.csvs.values() {
                let key = (
                    c.pos_sources.iter().copied().collect(),
                    c.neg_sources.iter().copied().collect(),
                    c.targets.iter().copied().collect(),
                );
                match seen.get(&key) {
                    Some(kept) => merges.push((*kept, c.id)),
                    None => {
                        seen.insert(key, c.id);
                    }
                }
            }
            for (kept, removed) in merges {
                changed = true;
                let r = self.model.csvs.remove(&removed).expect("csv");
                let k = self.model.csvs.get_mut(&kept).expect("csv");
                for (t, s) in &r.stats {
                    k.stats.entry(*t).or_insert_with(NceStats::default).merge(s);
                }
                if r.state.is_active() {
                    k.state = SvState::Active;
                }
                self.instances.remove(&removed);
                events.push(StepEvent::Merged { kept, removed });
                self.redirect_conditioners(removed, &[kept], events);
            }
            if !changed {
                break;
            }
        }
    }
}

/// Trivial sources of a prospective target: sources across its downstream closure,
/// plus the BSV behind each reached DSV.
pub fn trivial_sources(model: &Model, target: TargetId) -> BTreeSet<SourceId> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![target];
    while let Some(t) = stack.pop() {
        if !seen.insert(t) {
            continue;
        }
        match t {
            TargetId::Dsv(d) => {
                out.insert(SourceId::Bsv(d.bsv));
            }
            TargetId::Csv(c) => {
                if let Some(c) = model.csvs.get(&c) {
                    out.extend(c.pos_sources.iter().chain(&c.neg_sources).copied());
                    stack.extend(c.targets.iter().copied());
                }
            }
        }
    }
    out
}

/// Positive sources of a CSV and of every CSV upstream of it.
pub fn upstream_positives(model: &Model, csv: CsvId) -> BTreeSet<SourceId> {
    let idx = model.conditioner_index();
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![csv];
    while let Some(c) = stack.pop() {
        if !seen.insert(c) {
            continue;
        }
        if let Some(x) = model.csvs.get(&c) {
            out.extend(x.pos_sources.iter().copied());
        }
        if let Some(up) = idx.get(&TargetId::Csv(c)) {
            stack.extend(up.iter().copied());
        }
    }
    out
}

/// Filters candidate sources (and, in positive mode, prospective targets) by informativeness.
pub fn source_eligibility(
    model: &Model,
    candidates: &BTreeSet<SourceId>,
    targets: &[TargetId],
    mode: EligibilityMode,
    for_csv: Option<CsvId>,
) -> (BTreeSet<SourceId>, BTreeSet<TargetId>) {
    match mode {
        EligibilityMode::Positive => {
            let trivial: Vec<(TargetId, BTreeSet<SourceId>)> =
                targets.iter().map(|t| (*t, trivial_sources(model, *t))).collect();
            let keep = |cands: &BTreeSet<SourceId>, ts: &[&(TargetId, BTreeSet<SourceId>)]| -> BTreeSet<SourceId> {
                cands.iter().filter(|c| ts.iter().any(|(_, tr)| !tr.contains(c))).copied().collect()
            };
            let all: Vec<_> = trivial.iter().collect();
            let first = keep(candidates, &all);
            let kept_t: Vec<_> = trivial.iter().filter(|(_, tr)| first.iter().any(|c| !tr.contains(c))).collect();
            let sources = keep(&first, &kept_t);
            (sources, kept_t.iter().map(|(t, _)| *t).collect())
        }
        EligibilityMode::Negative => {
            let mut excluded = BTreeSet::new();
            if let Some(id) = for_csv {
                if let Some(c) = model.csvs.get(&id) {
                    for t in &c.targets {
                        excluded.extend(trivial_sources(model, *t));
                    }
                }
                excluded.extend(upstream_positives(model, id));
            }
            for t in targets {
                excluded.extend(trivial_sources(model, *t));
            }
            let sources = candidates.iter().filter(|c| !excluded.contains(c)).copied().collect();
            (sources, targets.iter().copied().collect())
        }
    }
}

/// State of a CSV with the given sources and targets on fixed inputs.
pub fn state_by_definition(
    csv: &Csv,
    prev: &BTreeMap<SourceId, SvState>,
    target_state: impl Fn(TargetId) -> SvState,
) -> Result<SvState> {
    if !sources_satisfied(&csv.pos_sources, &csv.neg_sources, prev)? {
        return Ok(SvState::Unobserved);
    }
    Ok(targets_state(csv.targets.iter().map(|t| target_state(*t))))
}

fn targets_state(states: impl Iterator<Item = SvState>) -> SvState {
    let mut out = SvState::Unobserved;
    for st in states {
        match st {
            SvState::Active => return SvState::Active,
            SvState::Inactive => out = SvState::Inactive,
            SvState::Unobserved => {}
        }
    }
    out
}

/// Source and target sets that determine a CSV's response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSignature {
    pub pos: BTreeSet<SourceId>,
    pub neg: BTreeSet<SourceId>,
    pub targets: BTreeSet<TargetId>,
}

pub type ModelSnapshot = BTreeMap<CsvId, ResponseSignature>;

pub fn snapshot(model: &Model) -> ModelSnapshot {
    model
        .csvs
        .values()
        .map(|c| {
            (
                c.id,
                ResponseSignature {
                    pos: c.pos_sources.clone(),
                    neg: c.neg_sources.clone(),
                    targets: c.targets.clone(),
                },
            )
        })
        .collect()
}

/// Replays an instance: `None` if the instance lacks a needed state.
pub fn replay(sig: &ResponseSignature, inst: &Instance) -> Option<SvState> {
    let sat = sources_satisfied(&sig.pos, &sig.neg, &inst.source_states).ok()?;
    if !sat {
        return Some(SvState::Unobserved);
    }
    let states: Option<Vec<SvState>> = sig.targets.iter().map(|t| inst.target_states.get(t).copied()).collect();
    Some(targets_state(states?.into_iter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verification {
    Preserved,
    Violated { before: SvState, after: SvState },
    Skipped,
}

pub fn verify_response_preservation(
    before: &ModelSnapshot,
    after: &ModelSnapshot,
    instance: &Instance,
    csv: CsvId,
) -> Verification {
    let (Some(b), Some(a)) = (before.get(&csv), after.get(&csv)) else {
        return Verification::Skipped;
    };
    if a.targets != b.targets {
        return Verification::Skipped;
    }
    match (replay(b, instance), replay(a, instance)) {
        (Some(x), Some(y)) if x == y => Verification::Preserved,
        (Some(x), Some(y)) => Verification::Violated { before: x, after: y },
        _ => Verification::Skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sv::{DsvId, EventKind};

    fn obs(m: &Model, active: &[&str]) -> BTreeMap<BsvId, SvState> {
        m.bsvs
            .iter()
            .map(|b| (b.id, SvState::from_bool(active.contains(&b.name.as_str()))))
            .collect()
    }

    fn pattern_learner() -> Learner {
        let mut m = Model::new();
        for n in ["X0", "X1", "X2", "X3"] {
            m.add_bsv(n, true);
        }
        m.add_bsv("Y", false);
        Learner::new(m, LearnerConfig::default())
    }

    #[test]
    fn quiet_step_has_no_events() {
        let mut l = pattern_learner();
        let o = obs(&l.model, &[]);
        l.process_environment_step(&o).unwrap();
        let r = l.process_environment_step(&o).unwrap();
        assert!(r.events.is_empty());
    }

    #[test]
    fn activation_spawns_one_csv() {
        let mut l = pattern_learner();
        l.process_environment_step(&obs(&l.model, &[])).unwrap();
        let r = l.process_environment_step(&obs(&l.model, &["X0", "Y"])).unwrap();
        let created: Vec<_> = r.events.iter().filter(|e| matches!(e, StepEvent::CsvCreated { .. })).collect();
        assert_eq!(created.len(), 1);
        let y = l.model.bsv_id("Y").unwrap();
        let c = l.model.csvs.values().next().unwrap();
        assert_eq!(c.targets, [TargetId::Dsv(DsvId { bsv: y, kind: EventKind::Activation })].into());
        assert_eq!(c.pos_sources, [SourceId::Bsv(l.model.bsv_id("X0").unwrap())].into());
    }

    #[test]
    fn activation_without_sources_marks_possibly_conditional() {
        let mut m = Model::new();
        let y = m.add_bsv("Y", false);
        let mut l = Learner::new(m, LearnerConfig::default());
        l.process_environment_step(&[(y, SvState::Inactive)].into()).unwrap();
        l.process_environment_step(&[(y, SvState::Active)].into()).unwrap();
        assert!(l.model.csvs.is_empty());
        assert_eq!(
            l.model.dsv(DsvId::activation(y)).unwrap().unconditionality,
            Unconditionality::PossiblyConditional
        );
    }

    #[test]
    fn missing_observation_is_contract_error() {
        let mut l = pattern_learner();
        let err = l.process_environment_step(&BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let mut o = obs(&l.model, &[]);
        o.insert(BsvId(99), SvState::Active);
        assert!(l.process_environment_step(&o).is_err());
    }

    fn hand_csv(m: &mut Model, pos: &[SourceId], targets: &[TargetId]) -> CsvId {
        m.insert_csv(Csv::new(CsvId(0), pos.iter().copied().collect(), targets.iter().copied().collect(), 0))
    }

    #[test]
    fn separate_targets_splits_three_way() {
        let mut m = Model::new();
        let x = m.add_bsv("X", true);
        let y1 = m.add_bsv("Y1", false);
        let y2 = m.add_bsv("Y2", false);
        let y3 = m.add_bsv("Y3", false);
        let t = |b| TargetId::Dsv(DsvId::activation(b));
        let id = hand_csv(&mut m, &[SourceId::Bsv(x)], &[t(y1), t(y2), t(y3)]);
        m.add_computation_levels().unwrap();
        let mut l = Learner::new(m, LearnerConfig::default());
        l.process_environment_step(&[(x, SvState::Inactive), (y1, SvState::Inactive), (y2, SvState::Inactive), (y3, SvState::Active)].into()).unwrap();
        // Y1 activates, Y2 stays inactive, Y3 already active (A-DSV unobserved)
        let r = l
            .process_environment_step(&[(x, SvState::Active), (y1, SvState::Active), (y2, SvState::Inactive), (y3, SvState::Active)].into())
            .unwrap();
        assert!(!l.model.csvs.contains_key(&id));
        let dup = r.events.iter().find_map(|e| match e {
            StepEvent::Duplicated { from, into } if *from == id => Some(into.clone()),
            _ => None,
        });
        let into = dup.expect("duplicated");
        let tsets: Vec<_> = into.iter().map(|c| l.model.csvs[c].targets.clone()).collect();
        assert_eq!(tsets[0], [t(y1), t(y3)].into());
        // the inactive copy then protects Y3 before forming negatives
        assert_eq!(tsets[1], [t(y2)].into());
        let prot = r.events.iter().find_map(|e| match e {
            StepEvent::Protected { from, duplicate } if *from == into[1] => Some(*duplicate),
            _ => None,
        });
        assert_eq!(l.model.csvs[&prot.unwrap()].targets, [t(y3)].into());
    }

    #[test]
    fn negatives_only_on_inactive_holder() {
        // X0 drives Y1 and Y2; then X0 with X2 active, Y1 stays off, Y2 already on.
        let mut m = Model::new();
        let x0 = m.add_bsv("X0", true);
        let x2 = m.add_bsv("X2", true);
        let y1 = m.add_bsv("Y1", false);
        let y2 = m.add_bsv("Y2", false);
        let t = |b| TargetId::Dsv(DsvId::activation(b));
        let id = hand_csv(&mut m, &[SourceId::Bsv(x0)], &[t(y1), t(y2)]);
        m.add_computation_levels().unwrap();
        let mut l = Learner::new(m, LearnerConfig::default());
        l.process_environment_step(&[(x0, SvState::Inactive), (x2, SvState::Inactive), (y1, SvState::Inactive), (y2, SvState::Active)].into()).unwrap();
        let r = l
            .process_environment_step(&[(x0, SvState::Active), (x2, SvState::Active), (y1, SvState::Inactive), (y2, SvState::Active)].into())
            .unwrap();
        let dup = r.events.iter().find_map(|e| match e {
            StepEvent::Protected { from, duplicate } if *from == id => Some(*duplicate),
            _ => None,
        });
        let dup = dup.expect("protected duplicate");
        assert_eq!(l.model.csvs[&id].targets, [t(y1)].into());
        // Y2 was active before the step and is not trivial for Y1
        assert_eq!(l.model.csvs[&id].neg_sources, [SourceId::Bsv(x2), SourceId::Bsv(y2)].into());
        assert_eq!(l.model.csvs[&dup].targets, [t(y2)].into());
        assert!(l.model.csvs[&dup].neg_sources.is_empty());
        assert!(!l.model.csvs[&dup].neg_connections_formed);
    }

    #[test]
    fn eligibility_excludes_own_bsv_and_upstream_positives() {
        let mut m = Model::new();
        let z = m.add_bsv("Z", false);
        let y = m.add_bsv("Y", false);
        let x = m.add_bsv("X", false);
        let ya = TargetId::Dsv(DsvId::activation(y));
        let c0 = hand_csv(&mut m, &[SourceId::Bsv(x)], &[ya]);
        let cands: BTreeSet<_> = [SourceId::Bsv(y), SourceId::Bsv(z)].into();
        let (s, t) = source_eligibility(&m, &cands, &[ya], EligibilityMode::Positive, None);
        assert_eq!(s, [SourceId::Bsv(z)].into());
        assert_eq!(t, [ya].into());
        let cands: BTreeSet<_> = [SourceId::Bsv(x), SourceId::Bsv(z)].into();
        let (s, _) = source_eligibility(&m, &cands, &[ya], EligibilityMode::Negative, Some(c0));
        assert_eq!(s, [SourceId::Bsv(z)].into());
    }

    #[test]
    fn target_with_only_trivial_candidates_dropped() {
        let mut m = Model::new();
        let y = m.add_bsv("Y", false);
        let w = m.add_bsv("W", false);
        let ya = TargetId::Dsv(DsvId::activation(y));
        let wa = TargetId::Dsv(DsvId::activation(w));
        let cands: BTreeSet<_> = [SourceId::Bsv(y)].into();
        let (s, t) = source_eligibility(&m, &cands, &[ya, wa], EligibilityMode::Positive, None);
        assert_eq!(s, [SourceId::Bsv(y)].into());
        assert_eq!(t, [wa].into());
    }

    #[test]
    fn replay_rules() {
        let x = SourceId::Bsv(BsvId(0));
        let y = TargetId::Dsv(DsvId::activation(BsvId(1)));
        let sig = ResponseSignature { pos: [x].into(), neg: BTreeSet::new(), targets: [y].into() };
        let inst = Instance { step: 0, source_states: [(x, SvState::Active)].into(), target_states: [(y, SvState::Active)].into() };
        assert_eq!(replay(&sig, &inst), Some(SvState::Active));
        let snap: ModelSnapshot = [(CsvId(0), sig)].into();
        assert_eq!(verify_response_preservation(&snap, &snap, &inst, CsvId(0)), Verification::Preserved);
        assert_eq!(verify_response_preservation(&snap, &BTreeMap::new(), &inst, CsvId(0)), Verification::Skipped);
    }
}
