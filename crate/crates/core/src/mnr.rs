//! Classifier whose conditioners are sourced by polynetworks.
//!
//! Every class gets a class variable. Positive conditioners of a class are
//! depth 0; conditioners of conditioners sit one level further upstream and
//! either support (positive) or suppress (negative) their target.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::significance::NceStats;
use crate::spn::{
    best_assignment, is_satisfied_by, statistical_refine, AssignConfig, Assignment, Mapping, NodeId, Reach,
    StatePolynetwork,
};
use crate::sv::SvState;

pub type MnrCsvId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MnrTarget {
    Class(u8),
    Csv(MnrCsvId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct MnrCsv<T> {
    pub id: MnrCsvId,
    pub source: StatePolynetwork<T>,
    pub target: MnrTarget,
    pub polarity: Polarity,
    pub unconditional: bool,
    pub depth: u32,
    /// Counts of target incidence against source satisfaction, collected
    /// only on steps where the target itself was evaluated.
    pub stats: NceStats,
    /// Own node to target node, used to seed assignments from the target's.
    pub link: BTreeMap<NodeId, NodeId>,
    pub created_at: u64,
}

impl<T: Scalar> MnrCsv<T> {
    /// `P(I(T) | SS(C))`.
    pub fn p_incidence_given_ss(&self) -> f64 {
        ratio(self.stats.n_concurrence, self.stats.n_ss)
    }

    /// `P(SS(C) | I(T))`.
    pub fn p_ss_given_incidence(&self) -> f64 {
        ratio(self.stats.n_concurrence, self.stats.n_incidence)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassVariable {
    pub label: u8,
    pub incidence: u64,
    pub observed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MnrConfig {
    pub t_ref: f64,
    pub t_sign: f64,
    pub assign: AssignConfig,
    /// Conditioners are only created at depths below this.
    pub max_depth: u32,
}

impl Default for MnrConfig {
    fn default() -> Self {
        MnrConfig { t_ref: 0.05, t_sign: 0.05, assign: AssignConfig::default(), max_depth: 3 }
    }
}

impl MnrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.t_ref) {
            return Err(Error::Contract(format!("t_ref {} outside [0, 1)", self.t_ref)));
        }
        if !(0.0..1.0).contains(&self.t_sign) {
            return Err(Error::Contract(format!("t_sign {} outside [0, 1)", self.t_sign)));
        }
        if self.assign.population == 0 {
            return Err(Error::Contract("population must be at least 1".into()));
        }
        Ok(())
    }
}

/// What one `learn_sample` call changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LearnReport {
    pub created: Vec<MnrCsvId>,
    pub refined: Vec<MnrCsvId>,
    pub removed: Vec<MnrCsvId>,
    /// The labelled class had no satisfied conditioner after learning.
    pub unexplained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: BTreeMap<u8, f64>,
    /// `None` when every score is zero.
    pub class: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct MnrModel<T> {
    pub config: MnrConfig,
    pub classes: BTreeMap<u8, ClassVariable>,
    pub csvs: BTreeMap<MnrCsvId, MnrCsv<T>>,
    keys: Option<Vec<String>>,
    next_id: MnrCsvId,
    step: u64,
}

impl<T: Scalar> MnrModel<T> {
    pub fn new(config: MnrConfig) -> Result<Self> {
        config.validate()?;
        Ok(MnrModel { config, classes: BTreeMap::new(), csvs: BTreeMap::new(), keys: None, next_id: 0, step: 0 })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Adds a class variable without a sample, so it takes part in later steps as inactive.
    pub fn add_class(&mut self, label: u8) {
        self.classes.entry(label).or_insert(ClassVariable { label, ..Default::default() });
    }

    /// Conditioners of `target`, in id order.
    pub fn conditioners(&self, target: MnrTarget) -> Vec<MnrCsvId> {
        self.csvs.values().filter(|c| c.target == target).map(|c| c.id).collect()
    }

    fn split(&self, target: MnrTarget) -> (Vec<MnrCsvId>, Vec<MnrCsvId>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for c in self.csvs.values().filter(|c| c.target == target) {
            match c.polarity {
                Polarity::Positive => pos.push(c.id),
                Polarity::Negative => neg.push(c.id),
            }
        }
        (pos, neg)
    }

    fn check_keys(&self, spn: &StatePolynetwork<T>) -> Result<()> {
        if let Some(keys) = &self.keys {
            if !keys.iter().map(String::as_str).eq(spn.keys()) {
                return Err(Error::Contract("sample key set differs from the model's".into()));
            }
        }
        Ok(())
    }

    fn evaluate<R: Rng>(
        &self,
        id: MnrCsvId,
        sample: &StatePolynetwork<T>,
        reach: &BTreeMap<String, Reach>,
        parent: Option<&Mapping>,
        cfg: &AssignConfig,
        rng: &mut R,
    ) -> Assignment {
        let csv = &self.csvs[&id];
        let seed: Mapping = match parent {
            Some(pf) => csv.link.iter().filter_map(|(own, up)| pf.get(up).map(|s| (*own, *s))).collect(),
            None => Mapping::new(),
        };
        best_assignment(&csv.source, sample, &seed, cfg, reach, rng)
    }

    fn create(
        &mut self,
        sample: &StatePolynetwork<T>,
        target: MnrTarget,
        polarity: Polarity,
        depth: u32,
        parent: Option<&Mapping>,
    ) -> MnrCsvId {
        let id = self.next_id;
        self.next_id += 1;
        let link = parent.map(|pf| pf.iter().map(|(up, s)| (*s, *up)).collect()).unwrap_or_default();
        let mut stats = NceStats::default();
        stats.record(true, SvState::Active);
        self.csvs.insert(
            id,
            MnrCsv {
                id,
                source: sample.clone(),
                target,
                polarity,
                unconditional: true,
                depth,
                stats,
                link,
                created_at: self.step,
            },
        );
        id
    }

    /// One labelled observation.
    pub fn learn_sample<R: Rng>(&mut self, sample: &StatePolynetwork<T>, label: u8, rng: &mut R) -> Result<LearnReport> {
        self.check_keys(sample)?;
        if self.keys.is_none() {
            self.keys = Some(sample.keys().map(str::to_owned).collect());
        }
        self.step += 1;
        self.add_class(label);
        for c in self.classes.values_mut() {
            c.observed += 1;
            c.incidence += (c.label == label) as u64;
        }
        let reach = sample.closures();
        let mut report = LearnReport::default();
        let labels: Vec<u8> = self.classes.keys().copied().collect();
        for c in labels {
            let engaged = self.process(MnrTarget::Class(c), c == label, None, 0, sample, &reach, rng, &mut report)?;
            if c == label {
                report.unexplained = !engaged;
            }
        }
        report.removed = self.filter_insignificant(self.config.t_sign)?;
        Ok(report)
    }

    /// Handles one evaluated target. Returns whether any explainer of an active
    /// target ended up satisfied.
    #[allow(clippy::too_many_arguments)]
    fn process<R: Rng>(
        &mut self,
        target: MnrTarget,
        active: bool,
        parent: Option<&Mapping>,
        depth: u32,
        sample: &StatePolynetwork<T>,
        reach: &BTreeMap<String, Reach>,
        rng: &mut R,
        report: &mut LearnReport,
    ) -> Result<bool> {
        let cfg = self.config.assign;
        let (pos, neg) = self.split(target);
        let mut found: BTreeMap<MnrCsvId, Assignment> = BTreeMap::new();
        for &id in pos.iter().chain(&neg) {
            found.insert(id, self.evaluate(id, sample, reach, parent, &cfg, rng));
        }
        let (explainers, others) = if active { (&pos, &neg) } else { (&neg, &pos) };
        let target_unconditional = match target {
            MnrTarget::Class(_) => false,
            MnrTarget::Csv(t) => self.csvs[&t].unconditional,
        };
        // Inactive classes have nothing to explain.
        let needs_explaining = active || matches!(target, MnrTarget::Csv(_));
        let mut engaged: BTreeSet<MnrCsvId> =
            explainers.iter().copied().filter(|id| found[id].mismatch == 0).collect();
        let mut fresh = BTreeSet::new();
        if needs_explaining {
            for &id in &engaged {
                let f = &found[&id].mapping;
                statistical_refine(&mut self.csvs.get_mut(&id).expect("live").source, sample, f, self.config.t_ref)?;
            }
            if engaged.is_empty() && !target_unconditional && depth < self.config.max_depth {
                let unconds: Vec<MnrCsvId> =
                    explainers.iter().copied().filter(|id| self.csvs[id].unconditional).collect();
                if unconds.is_empty() {
                    let polarity = if active { Polarity::Positive } else { Polarity::Negative };
                    let id = self.create(sample, target, polarity, depth, parent);
                    report.created.push(id);
                    fresh.insert(id);
                    engaged.insert(id);
                } else {
                    for id in unconds {
                        let f = found[&id].mapping.clone();
                        let before = self.csvs[&id].source.clone();
                        let csv = self.csvs.get_mut(&id).expect("live");
                        let r = statistical_refine(&mut csv.source, sample, &f, self.config.t_ref)?;
                        report.refined.push(id);
                        if r.discarded() && depth + 1 < self.config.max_depth {
                            let sub = self.next_id;
                            self.next_id += 1;
                            let link = before.nodes.keys().map(|n| (*n, *n)).collect();
                            let mut stats = NceStats::default();
                            stats.record(true, SvState::Active);
                            self.csvs.insert(
                                sub,
                                MnrCsv {
                                    id: sub,
                                    source: before,
                                    target: MnrTarget::Csv(id),
                                    polarity: Polarity::Positive,
                                    unconditional: true,
                                    depth: depth + 1,
                                    stats,
                                    link,
                                    created_at: self.step,
                                },
                            );
                            report.created.push(sub);
                            fresh.insert(sub);
                        }
                        if is_satisfied_by(&self.csvs[&id].source, sample, &f)? {
                            found.insert(id, Assignment { mapping: f, mismatch: 0 });
                            engaged.insert(id);
                        }
                    }
                }
            }
        }
        let explained = !engaged.is_empty();
        // Statistics: positives count target activity, negatives count its suppression.
        for &id in pos.iter().chain(&neg) {
            let csv = self.csvs.get_mut(&id).expect("live");
            let ss = engaged.contains(&id) || found[&id].mismatch == 0;
            let hit = (csv.polarity == Polarity::Positive) == active;
            csv.stats.record(ss, if hit { SvState::Active } else { SvState::Inactive });
        }
        let satisfied_others: Vec<MnrCsvId> = others.iter().copied().filter(|id| found[id].mismatch == 0).collect();
        for &id in &satisfied_others {
            self.csvs.get_mut(&id).expect("live").unconditional = false;
        }
        {
            let next: Vec<(MnrCsvId, bool)> = engaged
                .iter()
                .filter(|id| !fresh.contains(id))
                .map(|id| (*id, true))
                .chain(satisfied_others.iter().map(|id| (*id, false)))
                .collect();
            for (id, on) in next {
                if !self.csvs.contains_key(&id) {
                    continue;
                }
                let f = found[&id].mapping.clone();
                self.process(MnrTarget::Csv(id), on, Some(&f), depth + 1, sample, reach, rng, report)?;
            }
        }
        Ok(explained)
    }

    /// Removes conditioners whose `P(SS(C) | I(T))` is below `t_sign`, with
    /// everything upstream of them. A class always keeps at least one positive
    /// conditioner.
    pub fn filter_insignificant(&mut self, t_sign: f64) -> Result<Vec<MnrCsvId>> {
        if !(0.0..1.0).contains(&t_sign) {
            return Err(Error::Contract(format!("t_sign {t_sign} outside [0, 1)")));
        }
        let mut doomed: Vec<MnrCsvId> = Vec::new();
        let mut per_class: BTreeMap<u8, usize> = BTreeMap::new();
        for c in self.csvs.values() {
            if let (MnrTarget::Class(l), Polarity::Positive) = (c.target, c.polarity) {
                *per_class.entry(l).or_default() += 1;
            }
        }
        for c in self.csvs.values() {
            if c.stats.n_incidence == 0 || c.p_ss_given_incidence() >= t_sign {
                continue;
            }
            if let (MnrTarget::Class(l), Polarity::Positive) = (c.target, c.polarity) {
                let left = per_class.get_mut(&l).expect("counted");
                if *left <= 1 {
                    continue;
                }
                *left -= 1;
            }
            doomed.push(c.id);
        }
        let mut removed = Vec::new();
        while let Some(id) = doomed.pop() {
            if self.csvs.remove(&id).is_some() {
                removed.push(id);
                doomed.extend(self.conditioners(MnrTarget::Csv(id)));
            }
        }
        removed.sort_unstable();
        Ok(removed)
    }

    /// Activation probability of one conditioner given its target's assignment.
    fn activation<R: Rng>(
        &self,
        id: MnrCsvId,
        sample: &StatePolynetwork<T>,
        reach: &BTreeMap<String, Reach>,
        parent: Option<&Mapping>,
        rng: &mut R,
    ) -> (f64, usize) {
        let a = self.evaluate(id, sample, reach, parent, &self.config.assign, rng);
        if a.mismatch != 0 {
            return (0.0, 0);
        }
        let csv = &self.csvs[&id];
        let own = csv.p_incidence_given_ss();
        let size = csv.source.node_count() + csv.source.edge_count();
        let (pos, neg) = self.split(MnrTarget::Csv(id));
        if pos.is_empty() && neg.is_empty() {
            return (own, size);
        }
        let mut best = (0.0, 0);
        for u in pos.iter() {
            let v = self.activation(*u, sample, reach, Some(&a.mapping), rng);
            if v > best {
                best = v;
            }
        }
        if pos.is_empty() {
            best = (own, size);
        }
        let p_neg = neg
            .iter()
            .map(|n| self.activation(*n, sample, reach, Some(&a.mapping), rng).0)
            .fold(0.0, f64::max);
        (combine(p_neg, best.0), best.1)
    }

    /// Per-class scores and the argmax. Equal scores are broken by the size of
    /// the matching source, then by the lower label.
    pub fn predict<R: Rng>(&self, sample: &StatePolynetwork<T>, rng: &mut R) -> Result<Prediction> {
        self.check_keys(sample)?;
        let reach = sample.closures();
        let mut scores = BTreeMap::new();
        let mut best: Option<(f64, usize, u8)> = None;
        for &label in self.classes.keys() {
            let (pos, _) = self.split(MnrTarget::Class(label));
            let mut top = (0.0, 0);
            for id in pos {
                let v = self.activation(id, sample, &reach, None, rng);
                if v > top {
                    top = v;
                }
            }
            scores.insert(label, top.0);
            if top.0 > 0.0 && best.is_none_or(|b| (top.0, top.1) > (b.0, b.1)) {
                best = Some((top.0, top.1, label));
            }
        }
        Ok(Prediction { scores, class: best.map(|b| b.2) })
    }
}

/// `(1 - p_neg) * p_pos`.
pub fn combine(p_neg: f64, p_pos: f64) -> f64 {
    (1.0 - p_neg) * p_pos
}
