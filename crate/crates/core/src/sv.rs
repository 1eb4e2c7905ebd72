//! State variables and the model container.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::significance::NceStats;

/// Three-valued state of any state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SvState {
    Active,
    Inactive,
    Unobserved,
}

impl SvState {
    pub fn from_bool(active: bool) -> Self {
        if active {
            SvState::Active
        } else {
            SvState::Inactive
        }
    }

    pub fn is_active(self) -> bool {
        self == SvState::Active
    }

    pub fn is_observed(self) -> bool {
        self != SvState::Unobserved
    }

    /// Integer notation used in the literature (1, -1, 0).
    pub fn notation(self) -> i8 {
        match self {
            SvState::Active => 1,
            SvState::Inactive => -1,
            SvState::Unobserved => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BsvId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CsvId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Activation,
    Deactivation,
}

impl EventKind {
    pub fn suffix(self) -> &'static str {
        match self {
            EventKind::Activation => "A",
            EventKind::Deactivation => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DsvId {
    pub bsv: BsvId,
    pub kind: EventKind,
}

impl DsvId {
    pub fn activation(bsv: BsvId) -> Self {
        DsvId { bsv, kind: EventKind::Activation }
    }

    pub fn deactivation(bsv: BsvId) -> Self {
        DsvId { bsv, kind: EventKind::Deactivation }
    }
}

/// Anything that can be a CSV source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceId {
    Bsv(BsvId),
    Dsv(DsvId),
}

/// Anything that can be a CSV target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetId {
    Dsv(DsvId),
    Csv(CsvId),
}

/// Any state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SvId {
    Bsv(BsvId),
    Dsv(DsvId),
    Csv(CsvId),
}

impl From<SourceId> for SvId {
    fn from(s: SourceId) -> Self {
        match s {
            SourceId::Bsv(b) => SvId::Bsv(b),
            SourceId::Dsv(d) => SvId::Dsv(d),
        }
    }
}

impl From<TargetId> for SvId {
    fn from(t: TargetId) -> Self {
        match t {
            TargetId::Dsv(d) => SvId::Dsv(d),
            TargetId::Csv(c) => SvId::Csv(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Unconditionality {
    Unconditional,
    Conditional,
    PossiblyConditional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bsv {
    pub id: BsvId,
    pub name: String,
    pub state: SvState,
    pub prev_state: SvState,
    pub is_action: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dsv {
    pub id: DsvId,
    pub state: SvState,
    pub prev_state: SvState,
    pub unconditionality: Unconditionality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Csv {
    pub id: CsvId,
    pub pos_sources: BTreeSet<SourceId>,
    pub neg_sources: BTreeSet<SourceId>,
    pub targets: BTreeSet<TargetId>,
    pub state: SvState,
    pub unconditionality: Unconditionality,
    pub neg_connections_formed: bool,
    /// Per-target event statistics.
    pub stats: BTreeMap<TargetId, NceStats>,
    pub blocked: bool,
    pub created_at: u64,
}

impl Csv {
    pub fn new(id: CsvId, pos: BTreeSet<SourceId>, targets: BTreeSet<TargetId>, step: u64) -> Self {
        let stats = targets.iter().map(|t| (*t, NceStats::default())).collect();
        Csv {
            id,
            pos_sources: pos,
            neg_sources: BTreeSet::new(),
            targets,
            state: SvState::Unobserved,
            unconditionality: Unconditionality::Unconditional,
            neg_connections_formed: false,
            stats,
            blocked: false,
            created_at: step,
        }
    }

    pub fn csv_targets(&self) -> impl Iterator<Item = CsvId> + '_ {
        self.targets.iter().filter_map(|t| match t {
            TargetId::Csv(c) => Some(*c),
            TargetId::Dsv(_) => None,
        })
    }
}

/// DSV state from the previous and current state of its BSV.
pub fn dsv_transition(kind: EventKind, prev: SvState, curr: SvState) -> SvState {
    let (from, to) = match kind {
        EventKind::Activation => (SvState::Inactive, SvState::Active),
        EventKind::Deactivation => (SvState::Active, SvState::Inactive),
    };
    if prev != from {
        SvState::Unobserved
    } else if curr == to {
        SvState::Active
    } else {
        SvState::Inactive
    }
}

/// True iff every positive source is Active and no negative source is Active.
pub fn sources_satisfied(
    pos: &BTreeSet<SourceId>,
    neg: &BTreeSet<SourceId>,
    prev_states: &BTreeMap<SourceId, SvState>,
) -> Result<bool> {
    let get = |s: &SourceId| {
        prev_states
            .get(s)
            .copied()
            .ok_or_else(|| Error::UnknownId(format!("{s:?}")))
    };
    let mut ok = true;
    for s in pos {
        ok &= get(s)?.is_active();
    }
    for s in neg {
        ok &= !get(s)?.is_active();
    }
    Ok(ok)
}

/// All BSVs, DSVs and CSVs of one learner.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub bsvs: Vec<Bsv>,
    pub dsvs: BTreeMap<DsvId, Dsv>,
    pub csvs: BTreeMap<CsvId, Csv>,
    levels: Vec<Vec<CsvId>>,
    next_csv: u32,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a BSV. Non-action BSVs also get their two DSVs.
    pub fn add_bsv(&mut self, name: &str, is_action: bool) -> BsvId {
        let id = BsvId(self.bsvs.len() as u32);
        self.bsvs.push(Bsv {
            id,
            name: name.to_string(),
            state: SvState::Inactive,
            prev_state: SvState::Inactive,
            is_action,
        });
        if !is_action {
            for kind in [EventKind::Activation, EventKind::Deactivation] {
                let did = DsvId { bsv: id, kind };
                self.dsvs.insert(
                    did,
                    Dsv {
                        id: did,
                        state: SvState::Unobserved,
                        prev_state: SvState::Unobserved,
                        unconditionality: Unconditionality::Conditional,
                    },
                );
            }
        }
        id
    }

    pub fn bsv_id(&self, name: &str) -> Option<BsvId> {
        self.bsvs.iter().find(|b| b.name == name).map(|b| b.id)
    }

    pub fn bsv(&self, id: BsvId) -> Result<&Bsv> {
        self.bsvs
            .get(id.0 as usize)
            .ok_or_else(|| Error::UnknownId(format!("BSV {}", id.0)))
    }

    pub fn dsv(&self, id: DsvId) -> Result<&Dsv> {
        self.dsvs.get(&id).ok_or_else(|| Error::UnknownId(format!("DSV {id:?}")))
    }

    pub fn csv(&self, id: CsvId) -> Result<&Csv> {
        self.csvs.get(&id).ok_or_else(|| Error::UnknownId(format!("CSV {}", id.0)))
    }

    pub fn action_bsvs(&self) -> impl Iterator<Item = &Bsv> {
        self.bsvs.iter().filter(|b| b.is_action)
    }

    pub fn fresh_csv_id(&mut self) -> CsvId {
        let id = CsvId(self.next_csv);
        self.next_csv += 1;
        id
    }

    pub fn name(&self, sv: SvId) -> String {
        match sv {
            SvId::Bsv(b) => self
                .bsvs
                .get(b.0 as usize)
                .map(|x| x.name.clone())
                .unwrap_or_else(|| format!("B{}", b.0)),
            SvId::Dsv(d) => format!("{}_{}", self.name(SvId::Bsv(d.bsv)), d.kind.suffix()),
            SvId::Csv(c) => format!("C{}", c.0),
        }
    }

    pub fn source_state(&self, s: SourceId) -> SvState {
        match s {
            SourceId::Bsv(b) => self.bsvs[b.0 as usize].state,
            SourceId::Dsv(d) => self.dsvs[&d].state,
        }
    }

    pub fn source_prev_state(&self, s: SourceId) -> SvState {
        match s {
            SourceId::Bsv(b) => self.bsvs[b.0 as usize].prev_state,
            SourceId::Dsv(d) => self.dsvs[&d].prev_state,
        }
    }

    pub fn target_state(&self, t: TargetId) -> SvState {
        match t {
            TargetId::Dsv(d) => self.dsvs[&d].state,
            TargetId::Csv(c) => self.csvs.get(&c).map(|x| x.state).unwrap_or(SvState::Unobserved),
        }
    }

    pub fn contains_source(&self, s: SourceId) -> bool {
        match s {
            SourceId::Bsv(b) => (b.0 as usize) < self.bsvs.len(),
            SourceId::Dsv(d) => self.dsvs.contains_key(&d),
        }
    }

    pub fn contains_target(&self, t: TargetId) -> bool {
        match t {
            TargetId::Dsv(d) => self.dsvs.contains_key(&d),
            TargetId::Csv(c) => self.csvs.contains_key(&c),
        }
    }

    /// Previous-step states of all sources.
    pub fn prev_source_states(&self) -> BTreeMap<SourceId, SvState> {
        let mut m = BTreeMap::new();
        for b in &self.bsvs {
            m.insert(SourceId::Bsv(b.id), b.prev_state);
        }
        for d in self.dsvs.values() {
            m.insert(SourceId::Dsv(d.id), d.prev_state);
        }
        m
    }

    pub fn csv_sources_satisfied(&self, id: CsvId) -> Result<bool> {
        let c = self.csv(id)?;
        sources_satisfied(&c.pos_sources, &c.neg_sources, &self.prev_source_states())
    }

    pub fn unconditionality(&self, t: TargetId) -> Unconditionality {
        match t {
            TargetId::Dsv(d) => self.dsvs[&d].unconditionality,
            TargetId::Csv(c) => self.csvs[&c].unconditionality,
        }
    }

    pub fn set_unconditionality(&mut self, t: TargetId, u: Unconditionality) {
        match t {
            TargetId::Dsv(d) => self.dsvs.get_mut(&d).expect("dsv").unconditionality = u,
            TargetId::Csv(c) => self.csvs.get_mut(&c).expect("csv").unconditionality = u,
        }
    }

    /// Map from each target to the CSVs conditioning it.
    pub fn conditioner_index(&self) -> BTreeMap<TargetId, Vec<CsvId>> {
        let mut idx: BTreeMap<TargetId, Vec<CsvId>> = BTreeMap::new();
        for c in self.csvs.values() {
            for t in &c.targets {
                idx.entry(*t).or_default().push(c.id);
            }
        }
        idx
    }

    pub fn conditioners(&self, t: TargetId) -> Vec<CsvId> {
        self.csvs.values().filter(|c| c.targets.contains(&t)).map(|c| c.id).collect()
    }

    /// Assigns new BSV states and deduces DSV states.
    ///
    /// Action BSVs are not accepted here; their states are stamped by the learner.
    /// With `persist`, a step where no BSV changed keeps all DSV states.
    pub fn deduce_dsv_states(&mut self, curr: &BTreeMap<BsvId, SvState>, persist: bool) -> Result<()> {
        for (id, st) in curr {
            let b = self.bsv(*id)?;
            if b.is_action {
                return Err(Error::Contract(format!("action BSV {} has no DSVs", b.name)));
            }
            if !st.is_observed() {
                return Err(Error::Contract(format!("BSV {} observed as Unobserved", b.name)));
            }
        }
        let mut changed = false;
        for (id, st) in curr {
            let b = &mut self.bsvs[id.0 as usize];
            b.prev_state = b.state;
            b.state = *st;
            changed |= b.prev_state != b.state;
        }
        for d in self.dsvs.values_mut() {
            d.prev_state = d.state;
            if persist && !changed {
                continue;
            }
            let b = &self.bsvs[d.id.bsv.0 as usize];
            d.state = dsv_transition(d.id.kind, b.prev_state, b.state);
        }
        Ok(())
    }

    pub fn levels(&self) -> &[Vec<CsvId>] {
        &self.levels
    }

    /// Conditioning depth of each CSV: 0 when it targets only DSVs.
    pub fn depths(&self) -> Result<BTreeMap<CsvId, usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color: BTreeMap<CsvId, u8> = BTreeMap::new();
        let mut depth: BTreeMap<CsvId, usize> = BTreeMap::new();
        for &root in self.csvs.keys() {
            if color.get(&root).copied().unwrap_or(0) == 2 {
                continue;
            }
            let mut stack: Vec<(CsvId, bool)> = vec![(root, false)];
            while let Some((id, expanded)) = stack.pop() {
                if expanded {
                    let c = &self.csvs[&id];
                    let d = c
                        .csv_targets()
                        .filter(|t| self.csvs.contains_key(t))
                        .map(|t| depth[&t] + 1)
                        .max()
                        .unwrap_or(0);
                    depth.insert(id, d);
                    color.insert(id, 2);
                    continue;
                }
                match color.get(&id).copied().unwrap_or(0) {
                    2 => continue,
                    1 => return Err(Error::Structure(format!("conditioning cycle through C{}", id.0))),
                    _ => {}
                }
                color.insert(id, 1);
                stack.push((id, true));
                for t in self.csvs[&id].csv_targets() {
                    if !self.csvs.contains_key(&t) {
                        continue;
                    }
                    match color.get(&t).copied().unwrap_or(0) {
                        0 => stack.push((t, false)),
                        1 => {
                            return Err(Error::Structure(format!("conditioning cycle through C{}", t.0)))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(depth)
    }

    /// Recomputes the layering: level k holds the CSVs of depth k.
    pub fn add_computation_levels(&mut self) -> Result<()> {
        let depth = self.depths()?;
        let max = depth.values().copied().max();
        let mut levels = vec![Vec::new(); max.map_or(0, |m| m + 1)];
        for (id, d) in depth {
            levels[d].push(id);
        }
        self.levels = levels;
        Ok(())
    }

    /// Inserts a CSV with a fresh id and returns the id.
    pub fn insert_csv(&mut self, mut csv: Csv) -> CsvId {
        let id = self.fresh_csv_id();
        csv.id = id;
        self.csvs.insert(id, csv);
        id
    }
}

impl fmt::Display for SvState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.notation())
    }
}
