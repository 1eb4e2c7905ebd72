//! Two-cell finite-state-machine environment and the continual-learning experiment runner.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{Learner, LearnerConfig};
use crate::planner::{build_gsvs, choose_action, generate_action_network, ChoiceConfig, Mode, PlanNode};
use crate::sv::{BsvId, Model, SvState};

pub const N_ACTIONS: usize = 20;
pub const EPISODE_CAP: u64 = 2000;
const STANDARD_TABLE: &str = include_str!("../data/fsm_transitions.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Empty,
    DC,
    DO,
    W,
    SG1,
    SG2,
    G,
    X,
}

impl Symbol {
    pub const ALL: [Symbol; 8] =
        [Symbol::Empty, Symbol::DC, Symbol::DO, Symbol::W, Symbol::SG1, Symbol::SG2, Symbol::G, Symbol::X];

    pub fn label(self) -> &'static str {
        match self {
            Symbol::Empty => "-",
            Symbol::DC => "DC",
            Symbol::DO => "DO",
            Symbol::W => "W",
            Symbol::SG1 => "SG1",
            Symbol::SG2 => "SG2",
            Symbol::G => "G",
            Symbol::X => "X",
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Symbol::ALL
            .iter()
            .find(|x| x.label() == s)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown cell symbol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subtype {
    RS,
    SGS,
    NEG,
    Complete,
}

impl fmt::Display for Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subtype::RS => "RS",
            Subtype::SGS => "SGS",
            Subtype::NEG => "NEG",
            Subtype::Complete => "Complete",
        };
        f.write_str(s)
    }
}

impl FromStr for Subtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RS" => Ok(Subtype::RS),
            "SGS" | "SG" => Ok(Subtype::SGS),
            "NEG" => Ok(Subtype::NEG),
            "Complete" => Ok(Subtype::Complete),
            _ => Err(Error::Format(format!("unknown subtype {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pat {
    Any,
    Is(Symbol),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Post {
    Keep,
    Set(Symbol),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    All,
    Only(Subtype),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Rule {
    scope: Scope,
    pre: [Pat; 2],
    action: Option<usize>,
    outcomes: Vec<[Post; 2]>,
}

impl Rule {
    fn matches(&self, cells: [Symbol; 2], action: usize) -> bool {
        self.action.is_none_or(|a| a == action)
            && self.pre.iter().zip(cells).all(|(p, c)| match p {
                Pat::Any => true,
                Pat::Is(s) => *s == c,
            })
    }

    fn in_scope(&self, subtype: Subtype) -> bool {
        match self.scope {
            Scope::All => true,
            Scope::Only(s) => subtype == Subtype::Complete || s == subtype,
        }
    }
}

/// Parsed transition table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionTable {
    rules: Vec<Rule>,
}

impl TransitionTable {
    pub fn standard() -> Self {
        Self::parse(STANDARD_TABLE).expect("bundled table parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Format(format!("line {}: {m}", no + 1));
            let (head, tail) = line.split_at(line.find('|').unwrap_or(line.len()));
            let toks: Vec<&str> = head.split_whitespace().collect();
            if toks.len() != 6 {
                return Err(err("expected subtype, two cells, action and an outcome"));
            }
            let scope = if toks[0] == "ALL" { Scope::All } else { Scope::Only(toks[0].parse()?) };
            let pat = |s: &str| -> Result<Pat> { if s == "*" { Ok(Pat::Any) } else { Ok(Pat::Is(s.parse()?)) } };
            let post = |s: &str| -> Result<Post> { if s == "*" { Ok(Post::Keep) } else { Ok(Post::Set(s.parse()?)) } };
            let action = match toks[3] {
                "*" => None,
                a => {
                    let a: usize = a.parse().map_err(|_| err("bad action"))?;
                    if a >= N_ACTIONS {
                        return Err(err("action out of range"));
                    }
                    Some(a)
                }
            };
            let mut outcomes = vec![[post(toks[4])?, post(toks[5])?]];
            for alt in tail.split('|').skip(1) {
                let t: Vec<&str> = alt.split_whitespace().collect();
                if t.len() != 2 {
                    return Err(err("outcome needs two cells"));
                }
                outcomes.push([post(t[0])?, post(t[1])?]);
            }
            rules.push(Rule { scope, pre: [pat(toks[1])?, pat(toks[2])?], action, outcomes });
        }
        Ok(TransitionTable { rules })
    }

    /// All possible next configurations; the current one if the action is inert.
    pub fn outcomes(&self, subtype: Subtype, cells: [Symbol; 2], action: usize) -> Vec<[Symbol; 2]> {
        let apply = |o: &[Post; 2]| -> [Symbol; 2] {
            let mut out = cells;
            for i in 0..2 {
                if let Post::Set(s) = o[i] {
                    out[i] = s;
                }
            }
            out
        };
        let global: Vec<&Rule> =
            self.rules.iter().filter(|r| r.scope == Scope::All && r.matches(cells, action)).collect();
        let chosen: Vec<&Rule> = if global.is_empty() {
            self.rules.iter().filter(|r| r.in_scope(subtype) && r.matches(cells, action)).collect()
        } else {
            global
        };
        let mut out: Vec<[Symbol; 2]> = Vec::new();
        for r in chosen {
            for o in &r.outcomes {
                let n = apply(o);
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        if out.is_empty() {
            out.push(cells);
        }
        out
    }
}

/// BSV ids for the environment's observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsmBindings {
    pub cells: [[BsvId; 8]; 2],
    pub actions: Vec<BsvId>,
    pub random: Vec<BsvId>,
}

impl FsmBindings {
    pub fn goal(&self) -> BsvId {
        self.cells[0][6]
    }
}

#[derive(Debug, Clone)]
pub struct FsmEnv {
    pub cells: [Symbol; 2],
    pub subtype: Subtype,
    pub random_variant: bool,
    /// Per-step flip probability of each random BSV.
    pub random_flip: f64,
    pub step_count: u64,
    pub episode_count: u64,
    random_bits: [bool; 2],
    prev_action: Option<usize>,
    table: TransitionTable,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvStep {
    pub goal_reached: bool,
    pub reset: bool,
}

impl FsmEnv {
    pub fn new(subtype: Subtype, random_variant: bool, seed: u64) -> Self {
        FsmEnv {
            cells: [Symbol::Empty; 2],
            subtype,
            random_variant,
            random_flip: 0.1,
            step_count: 0,
            episode_count: 0,
            random_bits: [false; 2],
            prev_action: None,
            table: TransitionTable::standard(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn with_table(mut self, table: TransitionTable) -> Self {
        self.table = table;
        self
    }

    /// A fresh model holding the environment's BSVs.
    pub fn build_model(&self) -> (Model, FsmBindings) {
        let mut m = Model::new();
        let mut cells = [[BsvId(0); 8]; 2];
        for (c, row) in cells.iter_mut().enumerate() {
            for (i, s) in Symbol::ALL.iter().enumerate() {
                row[i] = m.add_bsv(&format!("{}{}", c + 1, s.label()), false);
            }
        }
        let random = if self.random_variant {
            (0..2).map(|i| m.add_bsv(&format!("R{i}"), false)).collect()
        } else {
            vec![]
        };
        let actions = (0..N_ACTIONS).map(|a| m.add_bsv(&format!("a{a}"), true)).collect();
        (m, FsmBindings { cells, actions, random })
    }

    pub fn observe(&self, b: &FsmBindings) -> BTreeMap<BsvId, SvState> {
        let mut o = BTreeMap::new();
        for c in 0..2 {
            for (i, s) in Symbol::ALL.iter().enumerate() {
                o.insert(b.cells[c][i], SvState::from_bool(self.cells[c] == *s));
            }
        }
        for (i, id) in b.random.iter().enumerate() {
            o.insert(*id, SvState::from_bool(self.random_bits[i]));
        }
        for (a, id) in b.actions.iter().enumerate() {
            o.insert(*id, SvState::from_bool(self.prev_action == Some(a)));
        }
        o
    }

    pub fn step(&mut self, action: usize) -> Result<EnvStep> {
        if action >= N_ACTIONS {
            return Err(Error::Contract(format!("action {action} out of range")));
        }
        let reset = self.cells[0] == Symbol::G;
        let next = self.table.outcomes(self.subtype, self.cells, action);
        self.cells = *next.choose(&mut self.rng).expect("nonempty");
        if self.random_variant {
            for b in self.random_bits.iter_mut() {
                if self.rng.gen::<f64>() < self.random_flip {
                    *b = !*b;
                }
            }
        }
        self.prev_action = Some(action);
        self.step_count += 1;
        let goal_reached = !reset && self.cells[0] == Symbol::G;
        if goal_reached {
            self.episode_count += 1;
        }
        Ok(EnvStep { goal_reached, reset })
    }

    /// Starts a new episode from the empty configuration.
    pub fn reset(&mut self) {
        self.cells = [Symbol::Empty; 2];
        self.prev_action = None;
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }
}

/// Configurations reachable from the empty state.
pub fn reachable_configs(table: &TransitionTable, subtype: Subtype) -> BTreeSet<[Symbol; 2]> {
    let start = [Symbol::Empty; 2];
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for a in 0..N_ACTIONS {
            for n in table.outcomes(subtype, c, a) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen
}

/// Whether some action sequence reaches the goal from `from` (for some outcome draws).
pub fn goal_reachable(table: &TransitionTable, subtype: Subtype, from: [Symbol; 2]) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c[0] == Symbol::G {
            return true;
        }
        for a in 0..N_ACTIONS {
            for n in table.outcomes(subtype, c, a) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub subtype: Subtype,
    pub duration_steps: u64,
    pub learning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSchedule {
    pub phases: Vec<Phase>,
    pub readaptation: bool,
    pub epsilon: f64,
}

impl ExperimentSchedule {
    /// RS, SGS, NEG learned for 1000 steps each, then RS and SGS without learning.
    pub fn vanilla() -> Self {
        let p = |subtype, learning| Phase { subtype, duration_steps: 1000, learning };
        ExperimentSchedule {
            phases: vec![
                p(Subtype::RS, true),
                p(Subtype::SGS, true),
                p(Subtype::NEG, true),
                p(Subtype::RS, false),
                p(Subtype::SGS, false),
            ],
            readaptation: false,
            epsilon: 0.1,
        }
    }

    /// Same subtype order with 500-step phases, learning throughout.
    pub fn readaptation() -> Self {
        let p = |subtype| Phase { subtype, duration_steps: 500, learning: true };
        ExperimentSchedule {
            phases: vec![p(Subtype::RS), p(Subtype::SGS), p(Subtype::NEG), p(Subtype::RS), p(Subtype::SGS)],
            readaptation: true,
            epsilon: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::Contract("schedule has no phases".into()));
        }
        if self.phases.iter().any(|p| p.duration_steps == 0) {
            return Err(Error::Contract("phase durations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Contract("epsilon must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    Planner,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub learner: LearnerConfig,
    pub choice: ChoiceConfig,
    pub depth_cap: usize,
    pub random_variant: bool,
    pub random_flip: f64,
    /// Record the model's CSV count every this many steps (0 = never).
    pub csv_count_every: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            kind: AgentKind::Planner,
            learner: LearnerConfig { instance_capacity: 0, record_states: false, ..LearnerConfig::default() },
            choice: ChoiceConfig::default(),
            depth_cap: 12,
            random_variant: false,
            random_flip: 0.1,
            csv_count_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub phase: usize,
    pub subtype: Subtype,
    pub learning: bool,
    pub duration: u64,
    pub end_step: u64,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub episodes: Vec<EpisodeRecord>,
    pub csv_counts: Vec<(u64, usize)>,
    pub total_steps: u64,
    pub final_csv_count: usize,
}

impl TrialResult {
    pub fn phase_mean(&self, phase: usize) -> Option<f64> {
        let d: Vec<f64> = self.episodes.iter().filter(|e| e.phase == phase).map(|e| e.duration as f64).collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    pub fn phase_durations(&self, phase: usize) -> Vec<u64> {
        self.episodes.iter().filter(|e| e.phase == phase).map(|e| e.duration).collect()
    }
}

/// Runs one trial of the schedule. Environment and agent randomness derive from `seed`.
pub fn run_continual_experiment(schedule: &ExperimentSchedule, agent: &AgentConfig, seed: u64) -> Result<TrialResult> {
    Ok(run_trial(schedule, agent, seed, None)?.0)
}

/// Like [`run_continual_experiment`], stopping after `max_steps` and returning the learner.
pub fn run_trial(
    schedule: &ExperimentSchedule,
    agent: &AgentConfig,
    seed: u64,
    max_steps: Option<u64>,
) -> Result<(TrialResult, Learner)> {
    schedule.validate()?;
    let mut env = FsmEnv::new(schedule.phases[0].subtype, agent.random_variant, seed);
    env.random_flip = agent.random_flip;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (model, bind) = env.build_model();
    let mut learner = Learner::new(model, agent.learner.clone());
    let choice = ChoiceConfig { epsilon: schedule.epsilon, ..agent.choice };
    let goal = (PlanNode::Bsv(bind.goal()), Mode::On);

    learner.process_environment_step(&env.observe(&bind))?;
    let mut result = TrialResult { episodes: vec![], csv_counts: vec![], total_steps: 0, final_csv_count: 0 };
    let mut phase = 0usize;
    let mut phase_start = 0u64;
    let mut episode_len = 0u64;
    let mut step = 0u64;
    loop {
        if max_steps.is_some_and(|m| step >= m) {
            break;
        }
        let p = schedule.phases[phase];
        let action = match agent.kind {
            AgentKind::Random => rng.gen_range(0..N_ACTIONS),
            AgentKind::Planner => {
                let g = build_gsvs(&learner.model);
                let an = generate_action_network(&g, &learner.model, goal, agent.depth_cap)?;
                let chosen = choose_action(&g, &learner.model, &an, &bind.actions, &choice, &mut rng)?;
                bind.actions.iter().position(|a| *a == chosen).expect("action bsv")
            }
        };
        let out = env.step(action)?;
        step += 1;
        if p.learning && agent.kind == AgentKind::Planner {
            learner.process_environment_step(&env.observe(&bind))?;
        } else {
            learner.observe_only(&env.observe(&bind))?;
        }
        if agent.csv_count_every > 0 && step % agent.csv_count_every == 0 {
            result.csv_counts.push((step, learner.model.csvs.len()));
        }
        if !out.reset {
            episode_len += 1;
        }
        let capped = episode_len >= EPISODE_CAP;
        if out.goal_reached || capped {
            result.episodes.push(EpisodeRecord {
                phase,
                subtype: p.subtype,
                learning: p.learning,
                duration: episode_len,
                end_step: step,
                capped: capped && !out.goal_reached,
            });
            episode_len = 0;
            env.reset();
            learner.restart();
            learner.observe_only(&env.observe(&bind))?;
            if step - phase_start >= p.duration_steps {
                phase += 1;
                if phase == schedule.phases.len() {
                    break;
                }
                phase_start = step;
                env.subtype = schedule.phases[phase].subtype;
            }
        }
    }
    result.total_steps = step;
    result.final_csv_count = learner.model.csvs.len();
    Ok((result, learner))
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_parses_and_rejects_garbage() {
        let t = TransitionTable::standard();
        assert!(!t.rules.is_empty());
        assert!(TransitionTable::parse("RS - - 0 Q -").is_err());
        assert!(TransitionTable::parse("RS - - 25 - -").is_err());
        assert!(TransitionTable::parse("RS - - 0").is_err());
    }

    #[test]
    fn observation_is_one_hot() {
        let mut env = FsmEnv::new(Subtype::RS, false, 0);
        let (m, b) = env.build_model();
        assert_eq!(m.bsvs.len(), 16 + 20);
        env.cells = [Symbol::DC, Symbol::Empty];
        let o = env.observe(&b);
        let active: Vec<String> = o
            .iter()
            .filter(|(_, s)| s.is_active())
            .map(|(id, _)| m.bsvs[id.0 as usize].name.clone())
            .collect();
        assert_eq!(active, vec!["1DC", "2-"]);
        env.step(3).unwrap();
        let o = env.observe(&b);
        assert!(o[&b.actions[3]].is_active());
        assert_eq!(b.actions.iter().filter(|a| o[a].is_active()).count(), 1);
    }

    #[test]
    fn neg_goal_needs_x_only_in_first_cell() {
        let t = TransitionTable::standard();
        assert_eq!(t.outcomes(Subtype::NEG, [Symbol::X, Symbol::Empty], 11), vec![[Symbol::G, Symbol::Empty]]);
        assert_eq!(t.outcomes(Subtype::NEG, [Symbol::X, Symbol::X], 11), vec![[Symbol::X, Symbol::X]]);
    }

    #[test]
    fn inert_action_keeps_state() {
        let t = TransitionTable::standard();
        for s in [Subtype::RS, Subtype::SGS, Subtype::NEG] {
            assert_eq!(t.outcomes(s, [Symbol::Empty; 2], 19), vec![[Symbol::Empty; 2]]);
        }
    }

    #[test]
    fn out_of_range_action() {
        let mut env = FsmEnv::new(Subtype::RS, false, 0);
        assert!(matches!(env.step(20), Err(Error::Contract(_))));
    }

    #[test]
    fn goal_reachable_everywhere() {
        let t = TransitionTable::standard();
        for s in [Subtype::RS, Subtype::SGS, Subtype::NEG, Subtype::Complete] {
            let r = reachable_configs(&t, s);
            assert!(r.len() > 2);
            for c in r {
                assert!(goal_reachable(&t, s, c), "{s} {c:?}");
            }
        }
    }

    #[test]
    fn rs_goal_requires_open_door() {
        // without action 1 the door never opens and the goal is unreachable
        let t = TransitionTable::standard();
        let mut seen = BTreeSet::from([[Symbol::Empty; 2]]);
        let mut q = VecDeque::from([[Symbol::Empty; 2]]);
        while let Some(c) = q.pop_front() {
            assert_ne!(c[0], Symbol::G);
            for a in (0..N_ACTIONS).filter(|a| *a != 1) {
                for n in t.outcomes(Subtype::RS, c, a) {
                    if seen.insert(n) {
                        q.push_back(n);
                    }
                }
            }
        }
        assert!(!seen.iter().any(|c| c[0] == Symbol::DO));
    }

    #[test]
    fn random_agent_is_deterministic_and_finite() {
        let sched = ExperimentSchedule {
            phases: vec![Phase { subtype: Subtype::NEG, duration_steps: 300, learning: false }],
            readaptation: false,
            epsilon: 0.1,
        };
        let agent = AgentConfig { kind: AgentKind::Random, ..Default::default() };
        let a = run_continual_experiment(&sched, &agent, 5).unwrap();
        let b = run_continual_experiment(&sched, &agent, 5).unwrap();
        assert_eq!(a, b);
        assert!(!a.episodes.is_empty());
        assert!(a.episodes.iter().all(|e| e.duration < EPISODE_CAP));
    }

    #[test]
    fn invalid_schedule() {
        let s = ExperimentSchedule { phases: vec![], readaptation: false, epsilon: 0.1 };
        assert!(s.validate().is_err());
    }
}
