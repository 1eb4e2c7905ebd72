//! State networks, polynetworks, satisfaction and refinement with rerelation.
//!
//! A polynetwork owns one node table shared by all of its keyed networks; each
//! network is a set of directed edges over those nodes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type NodeId = u32;
pub type Edge = (NodeId, NodeId);

/// How often an element was seen in refiners versus missed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presence {
    pub present: u64,
    pub absent: u64,
}

impl Presence {
    pub fn fresh() -> Self {
        Presence { present: 1, absent: 0 }
    }

    pub fn absence_ratio(&self) -> f64 {
        let n = self.present + self.absent;
        if n == 0 {
            0.0
        } else {
            self.absent as f64 / n as f64
        }
    }

    fn record(&mut self, seen: bool) {
        if seen {
            self.present += 1;
        } else {
            self.absent += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct SpnNode<T> {
    pub kind: String,
    pub pos: Option<[T; 2]>,
    pub presence: Presence,
}

/// Directed edges of one keyed network.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateNetwork {
    #[serde(with = "edge_list")]
    pub edges: BTreeMap<Edge, Presence>,
}

// JSON maps need string keys, so edges travel as a list of entries.
mod edge_list {
    use super::{Edge, Presence};
    use serde::{Deserialize, Deserializer, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Edge, Presence>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Edge, Presence>, D::Error> {
        Ok(Vec::<(Edge, Presence)>::deserialize(d)?.into_iter().collect())
    }
}

impl StateNetwork {
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains_key(&(a, b))
    }

    pub fn preds(&self, n: NodeId) -> Vec<NodeId> {
        self.edges.keys().filter(|e| e.1 == n).map(|e| e.0).collect()
    }

    pub fn succs(&self, n: NodeId) -> Vec<NodeId> {
        self.edges.range((n, 0)..=(n, NodeId::MAX)).map(|(e, _)| e.1).collect()
    }

    fn incident(&self, n: NodeId) -> Vec<Edge> {
        self.edges.keys().filter(|e| e.0 == n || e.1 == n).copied().collect()
    }

    /// Removes `(n0, n1)` and links every predecessor of `n0` to every successor
    /// of `n1`. Returns the edges that were newly added.
    pub fn remove_with_rerelation(&mut self, n0: NodeId, n1: NodeId) -> Result<Vec<Edge>> {
        if !self.has_edge(n0, n1) {
            return Err(Error::Contract(format!("no edge ({n0}, {n1})")));
        }
        let mut added = Vec::new();
        for p in self.preds(n0) {
            for s in self.succs(n1) {
                if p != s && !self.edges.contains_key(&(p, s)) {
                    self.edges.insert((p, s), Presence::fresh());
                    added.push((p, s));
                }
            }
        }
        self.edges.remove(&(n0, n1));
        Ok(added)
    }

    /// Drops every edge touching `n`, bridging its predecessors to its successors.
    pub fn remove_node_bridging(&mut self, n: NodeId) -> Vec<Edge> {
        let preds: Vec<NodeId> = self.preds(n).into_iter().filter(|p| *p != n).collect();
        let succs: Vec<NodeId> = self.succs(n).into_iter().filter(|s| *s != n).collect();
        for e in self.incident(n) {
            self.edges.remove(&e);
        }
        let mut added = Vec::new();
        for p in &preds {
            for s in &succs {
                if p != s && !self.edges.contains_key(&(*p, *s)) {
                    self.edges.insert((*p, *s), Presence::fresh());
                    added.push((*p, *s));
                }
            }
        }
        added
    }

    /// Transitive closure over the given node universe.
    pub fn closure(&self, nodes: impl IntoIterator<Item = NodeId>) -> Reach {
        let index: BTreeMap<NodeId, usize> = nodes.into_iter().enumerate().map(|(i, n)| (n, i)).collect();
        let k = index.len();
        let mut adj = vec![Vec::new(); k];
        for (a, b) in self.edges.keys() {
            if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
                adj[i].push(j);
            }
        }
        let mut rows = vec![FixedBitSet::with_capacity(k); k];
        for (s, row) in rows.iter_mut().enumerate() {
            let mut queue: VecDeque<usize> = adj[s].iter().copied().collect();
            while let Some(x) = queue.pop_front() {
                if row.put(x) {
                    continue;
                }
                queue.extend(adj[x].iter().copied());
            }
        }
        Reach { index, rows }
    }
}

/// Reachability by paths of one or more edges.
#[derive(Debug, Clone)]
pub struct Reach {
    index: BTreeMap<NodeId, usize>,
    rows: Vec<FixedBitSet>,
}

impl Reach {
    pub fn path(&self, a: NodeId, b: NodeId) -> bool {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&i), Some(&j)) => self.rows[i].contains(j),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct StatePolynetwork<T> {
    pub nodes: BTreeMap<NodeId, SpnNode<T>>,
    pub networks: Vec<(String, StateNetwork)>,
    next_node: NodeId,
}

/// Element counts removed or created by one refinement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RefineReport {
    pub nodes_removed: usize,
    pub edges_removed: usize,
    pub edges_added: usize,
}

impl RefineReport {
    pub fn discarded(&self) -> bool {
        self.nodes_removed + self.edges_removed > 0
    }
}

impl<T: Scalar> StatePolynetwork<T> {
    pub fn new<S: AsRef<str>>(keys: &[S]) -> Self {
        StatePolynetwork {
            nodes: BTreeMap::new(),
            networks: keys.iter().map(|k| (k.as_ref().to_string(), StateNetwork::default())).collect(),
            next_node: 0,
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.networks.iter().map(|(k, _)| k.as_str())
    }

    pub fn same_keys(&self, other: &Self) -> bool {
        let a: BTreeSet<&str> = self.keys().collect();
        let b: BTreeSet<&str> = other.keys().collect();
        a == b
    }

    pub fn add_node(&mut self, kind: &str, pos: Option<[T; 2]>) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        self.nodes.insert(id, SpnNode { kind: kind.to_string(), pos, presence: Presence::fresh() });
        id
    }

    pub fn network(&self, key: &str) -> Option<&StateNetwork> {
        self.networks.iter().find(|(k, _)| k == key).map(|(_, n)| n)
    }

    pub fn network_mut(&mut self, key: &str) -> Option<&mut StateNetwork> {
        self.networks.iter_mut().find(|(k, _)| k == key).map(|(_, n)| n)
    }

    pub fn add_edge(&mut self, key: &str, a: NodeId, b: NodeId) -> Result<()> {
        if !self.nodes.contains_key(&a) || !self.nodes.contains_key(&b) {
            return Err(Error::Contract(format!("edge ({a}, {b}) has an unknown endpoint")));
        }
        let net = self.network_mut(key).ok_or_else(|| Error::UnknownId(format!("network {key}")))?;
        net.edges.entry((a, b)).or_insert_with(Presence::fresh);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.networks.iter().map(|(_, n)| n.edges.len()).sum()
    }

    /// Checks that every edge endpoint is a known node.
    pub fn validate(&self) -> Result<()> {
        for (k, n) in &self.networks {
            for (a, b) in n.edges.keys() {
                if !self.nodes.contains_key(a) || !self.nodes.contains_key(b) {
                    return Err(Error::Structure(format!("edge ({a}, {b}) in {k} has an unknown endpoint")));
                }
            }
        }
        Ok(())
    }

    pub fn closures(&self) -> BTreeMap<String, Reach> {
        self.networks
            .iter()
            .map(|(k, n)| (k.clone(), n.closure(self.nodes.keys().copied())))
            .collect()
    }

    fn remove_node(&mut self, n: NodeId, report: &mut RefineReport) -> Vec<(usize, Edge)> {
        let mut added = Vec::new();
        for (i, (_, net)) in self.networks.iter_mut().enumerate() {
            let before = net.edges.len();
            let new = net.remove_node_bridging(n);
            report.edges_removed += before + new.len() - net.edges.len();
            report.edges_added += new.len();
            added.extend(new.into_iter().map(|e| (i, e)));
        }
        self.nodes.remove(&n);
        report.nodes_removed += 1;
        added
    }

    /// Text form: `node` lines followed by one `net` block per key.
    pub fn to_text(&self) -> String {
        let mut s = String::from("spn\n");
        for (id, n) in &self.nodes {
            let _ = write!(s, "node {id} {}", n.kind);
            match n.pos {
                Some([x, y]) => {
                    let _ = write!(s, " {} {}", x.to_f64().unwrap_or(f64::NAN), y.to_f64().unwrap_or(f64::NAN));
                }
                None => s.push_str(" - -"),
            }
            let _ = writeln!(s, " {} {}", n.presence.present, n.presence.absent);
        }
        for (k, net) in &self.networks {
            let _ = writeln!(s, "net {k}");
            for ((a, b), p) in &net.edges {
                let _ = writeln!(s, "edge {a} {b} {} {}", p.present, p.absent);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |l: &str| Error::Format(format!("bad spn line: {l}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("spn") {
            return Err(Error::Format("missing spn header".into()));
        }
        let mut p = StatePolynetwork::<T>::new::<&str>(&[]);
        for line in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<u64> { t.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line)) };
            match t.first().copied() {
                Some("node") if t.len() == 7 => {
                    let id = num(1)? as NodeId;
                    let pos = match (t[3], t[4]) {
                        ("-", "-") => None,
                        (x, y) => {
                            let x: f64 = x.parse().map_err(|_| bad(line))?;
                            let y: f64 = y.parse().map_err(|_| bad(line))?;
                            Some([T::lit(x), T::lit(y)])
                        }
                    };
                    let presence = Presence { present: num(5)?, absent: num(6)? };
                    p.nodes.insert(id, SpnNode { kind: t[2].to_string(), pos, presence });
                    p.next_node = p.next_node.max(id + 1);
                }
                Some("net") if t.len() == 2 => p.networks.push((t[1].to_string(), StateNetwork::default())),
                Some("edge") if t.len() == 5 => {
                    let (_, net) = p.networks.last_mut().ok_or_else(|| bad(line))?;
                    let presence = Presence { present: num(3)?, absent: num(4)? };
                    net.edges.insert((num(1)? as NodeId, num(2)? as NodeId), presence);
                }
                _ => return Err(bad(line)),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

pub type Mapping = BTreeMap<NodeId, NodeId>;

fn check_keys<T: Scalar>(p0: &StatePolynetwork<T>, p1: &StatePolynetwork<T>) -> Result<()> {
    if p0.same_keys(p1) {
        Ok(())
    } else {
        Err(Error::Contract("polynetworks have different key sets".into()))
    }
}

/// Every node of `p0` has an image and every edge has a path between images.
pub fn is_satisfied_by<T: Scalar>(p0: &StatePolynetwork<T>, p1: &StatePolynetwork<T>, f: &Mapping) -> Result<bool> {
    check_keys(p0, p1)?;
    if !p0.nodes.keys().all(|n| f.get(n).is_some_and(|m| p1.nodes.contains_key(m))) {
        return Ok(false);
    }
    let reach = p1.closures();
    Ok(p0.networks.iter().all(|(k, net)| {
        let r = &reach[k];
        net.edges.keys().all(|(a, b)| r.path(f[a], f[b]))
    }))
}

/// Unmapped source nodes plus source edges with no path between images.
pub fn mismatch<T: Scalar>(p0: &StatePolynetwork<T>, f: &Mapping, reach: &BTreeMap<String, Reach>) -> usize {
    let missing = p0.nodes.keys().filter(|n| !f.contains_key(n)).count();
    let broken: usize = p0
        .networks
        .iter()
        .map(|(k, net)| {
            let r = &reach[k];
            net.edges
                .keys()
                .filter(|(a, b)| match (f.get(a), f.get(b)) {
                    (Some(x), Some(y)) => !r.path(*x, *y),
                    _ => true,
                })
                .count()
        })
        .sum();
    missing + broken
}

/// Minimal refinement of `p0` so that `p1` satisfies it under `f`.
pub fn refine_by<T: Scalar>(p0: &mut StatePolynetwork<T>, p1: &StatePolynetwork<T>, f: &Mapping) -> Result<RefineReport> {
    check_keys(p0, p1)?;
    let reach = p1.closures();
    let mut report = RefineReport::default();
    let unmapped: Vec<NodeId> = p0.nodes.keys().filter(|n| !f.contains_key(n)).copied().collect();
    for n in unmapped {
        p0.remove_node(n, &mut report);
    }
    for (k, net) in p0.networks.iter_mut() {
        let r = &reach[k.as_str()];
        let ok = |e: &Edge| r.path(f[&e.0], f[&e.1]);
        prune_edges(net, |e, _| !ok(e), &ok, &mut report);
    }
    Ok(report)
}

/// Removes edges selected by `drop` with rerelation. Added edges failing `keep_new`
/// are removed in turn; each edge is rejected at most once.
fn prune_edges(
    net: &mut StateNetwork,
    mut drop: impl FnMut(&Edge, &mut Presence) -> bool,
    keep_new: &dyn Fn(&Edge) -> bool,
    report: &mut RefineReport,
) {
    let mut queue: VecDeque<Edge> = VecDeque::new();
    let keys: Vec<Edge> = net.edges.keys().copied().collect();
    for e in keys {
        let p = net.edges.get_mut(&e).expect("edge");
        if drop(&e, p) {
            queue.push_back(e);
        }
    }
    let mut rejected = BTreeSet::new();
    while let Some(e) = queue.pop_front() {
        if !net.edges.contains_key(&e) {
            continue;
        }
        rejected.insert(e);
        let added = net.remove_with_rerelation(e.0, e.1).expect("edge present");
        report.edges_removed += 1;
        for a in added {
            if rejected.contains(&a) || !keep_new(&a) {
                if rejected.contains(&a) {
                    net.edges.remove(&a);
                } else {
                    report.edges_added += 1;
                    queue.push_back(a);
                }
            } else {
                report.edges_added += 1;
            }
        }
    }
}

/// Counts presence for every element under `f`, then removes those whose
/// absence ratio exceeds `t_ref`. Mapped node positions move to the running mean.
pub fn statistical_refine<T: Scalar>(
    p0: &mut StatePolynetwork<T>,
    p1: &StatePolynetwork<T>,
    f: &Mapping,
    t_ref: f64,
) -> Result<RefineReport> {
    check_keys(p0, p1)?;
    if !(0.0..1.0).contains(&t_ref) {
        return Err(Error::Contract(format!("t_ref {t_ref} outside [0, 1)")));
    }
    let reach = p1.closures();
    let mut report = RefineReport::default();
    let mut doomed = Vec::new();
    for (id, node) in p0.nodes.iter_mut() {
        let image = f.get(id).and_then(|m| p1.nodes.get(m));
        node.presence.record(image.is_some());
        if let (Some(img), Some(pos)) = (image, node.pos.as_mut()) {
            if let Some(q) = img.pos {
                let n = T::of_usize(node.presence.present as usize);
                for d in 0..2 {
                    pos[d] += (q[d] - pos[d]) / n;
                }
            }
        }
        if node.presence.absence_ratio() > t_ref {
            doomed.push(*id);
        }
    }
    for n in doomed {
        p0.remove_node(n, &mut report);
    }
    for (k, net) in p0.networks.iter_mut() {
        let r = &reach[k.as_str()];
        let seen = |e: &Edge| matches!((f.get(&e.0), f.get(&e.1)), (Some(x), Some(y)) if r.path(*x, *y));
        prune_edges(
            net,
            |e, p| {
                p.record(seen(e));
                p.absence_ratio() > t_ref
            },
            &seen,
            &mut report,
        );
    }
    Ok(report)
}

/// Candidate generation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignConfig {
    pub population: usize,
    pub temperature: f64,
    /// Distances are divided by this before the softmax.
    pub distance_scale: f64,
    /// Improve each sample by same-type swaps and moves until no step lowers the mismatch.
    pub polish: bool,
}

impl Default for AssignConfig {
    fn default() -> Self {
        AssignConfig { population: 10, temperature: 1.0, distance_scale: 28.0 * std::f64::consts::SQRT_2, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub mapping: Mapping,
    pub mismatch: usize,
}

fn distance<T: Scalar>(a: &SpnNode<T>, b: &SpnNode<T>) -> Option<f64> {
    let (p, q) = (a.pos?, b.pos?);
    let dx = (p[0] - q[0]).to_f64()?;
    let dy = (p[1] - q[1]).to_f64()?;
    Some((dx * dx + dy * dy).sqrt())
}

/// Samples one type-preserving injective assignment extending the valid
/// part of `seed`.
pub fn sample_assignment<T: Scalar, R: Rng>(
    p0: &StatePolynetwork<T>,
    p1: &StatePolynetwork<T>,
    seed: &Mapping,
    cfg: &AssignConfig,
    rng: &mut R,
) -> Mapping {
    let mut f = Mapping::new();
    let mut used = BTreeSet::new();
    for (a, b) in seed {
        if let (Some(x), Some(y)) = (p0.nodes.get(a), p1.nodes.get(b)) {
            if x.kind == y.kind && used.insert(*b) {
                f.insert(*a, *b);
            }
        }
    }
    let mut order: Vec<NodeId> = p0.nodes.keys().filter(|n| !f.contains_key(n)).copied().collect();
    order.shuffle(rng);
    for n in order {
        let src = &p0.nodes[&n];
        let cands: Vec<(NodeId, f64)> = p1
            .nodes
            .iter()
            .filter(|(m, node)| node.kind == src.kind && !used.contains(*m))
            .map(|(m, node)| {
                let d = distance(src, node).unwrap_or(0.0);
                (*m, -d / (cfg.distance_scale * cfg.temperature))
            })
            .collect();
        if cands.is_empty() {
            continue;
        }
        let top = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = cands.iter().map(|c| (c.1 - top).exp()).collect();
        let pick = match WeightedIndex::new(&weights) {
            Ok(w) => cands[w.sample(rng)].0,
            Err(_) => cands[0].0,
        };
        used.insert(pick);
        f.insert(n, pick);
    }
    f
}

/// Lowest-mismatch assignment among `cfg.population` samples; ties keep the first.
pub fn generate_assignments<T: Scalar, R: Rng>(
    p0: &StatePolynetwork<T>,
    p1: &StatePolynetwork<T>,
    cfg: &AssignConfig,
    rng: &mut R,
) -> Result<Assignment> {
    check_keys(p0, p1)?;
    if cfg.population == 0 {
        return Err(Error::Contract("population must be at least 1".into()));
    }
    let reach = p1.closures();
    Ok(best_assignment(p0, p1, &Mapping::new(), cfg, &reach, rng))
}

/// Population search with precomputed refiner closures, starting every
/// candidate from `seed`.
pub fn best_assignment<T: Scalar, R: Rng>(
    p0: &StatePolynetwork<T>,
    p1: &StatePolynetwork<T>,
    seed: &Mapping,
    cfg: &AssignConfig,
    reach: &BTreeMap<String, Reach>,
    rng: &mut R,
) -> Assignment {
    let mut best: Option<Assignment> = None;
    for _ in 0..cfg.population.max(1) {
        let mut mapping = sample_assignment(p0, p1, seed, cfg, rng);
        if cfg.polish {
            polish(p0, p1, &mut mapping, reach);
        }
        let mismatch = mismatch(p0, &mapping, reach);
        if best.as_ref().is_none_or(|b| mismatch < b.mismatch) {
            best = Some(Assignment { mapping, mismatch });
        }
        if mismatch == 0 {
            break;
        }
    }
    best.expect("population >= 1")
}

/// Greedy descent on the mismatch over moves that keep types and injectivity.
pub fn polish<T: Scalar>(p0: &StatePolynetwork<T>, p1: &StatePolynetwork<T>, f: &mut Mapping, reach: &BTreeMap<String, Reach>) {
    let mut incident: BTreeMap<NodeId, Vec<(usize, Edge)>> = BTreeMap::new();
    for (i, (_, net)) in p0.networks.iter().enumerate() {
        for e in net.edges.keys() {
            incident.entry(e.0).or_default().push((i, *e));
            incident.entry(e.1).or_default().push((i, *e));
        }
    }
    let reaches: Vec<&Reach> = p0.networks.iter().map(|(k, _)| &reach[k]).collect();
    let local = |f: &Mapping, nodes: &[NodeId]| -> usize {
        let mut edges = BTreeSet::new();
        let mut cost = 0;
        for n in nodes {
            cost += usize::from(!f.contains_key(n));
            edges.extend(incident.get(n).into_iter().flatten().copied());
        }
        cost + edges
            .iter()
            .filter(|(i, (a, b))| match (f.get(a), f.get(b)) {
                (Some(x), Some(y)) => !reaches[*i].path(*x, *y),
                _ => true,
            })
            .count()
    };
    let mut by_kind: BTreeMap<&str, (Vec<NodeId>, Vec<NodeId>)> = BTreeMap::new();
    for (id, n) in &p0.nodes {
        by_kind.entry(n.kind.as_str()).or_default().0.push(*id);
    }
    for (id, n) in &p1.nodes {
        if let Some(e) = by_kind.get_mut(n.kind.as_str()) {
            e.1.push(*id);
        }
    }
    loop {
        let mut improved = false;
        for (srcs, dsts) in by_kind.values() {
            for (i, &a) in srcs.iter().enumerate() {
                let used: BTreeSet<NodeId> = srcs.iter().filter_map(|s| f.get(s).copied()).collect();
                for &m in dsts.iter().filter(|m| !used.contains(m)) {
                    let before = local(f, &[a]);
                    let old = f.insert(a, m);
                    if local(f, &[a]) < before {
                        improved = true;
                        break;
                    }
                    match old {
                        Some(o) => f.insert(a, o),
                        None => f.remove(&a),
                    };
                }
                for &b in &srcs[i + 1..] {
                    let (fa, fb) = (f.get(&a).copied(), f.get(&b).copied());
                    if fa == fb {
                        continue;
                    }
                    let before = local(f, &[a, b]);
                    let set = |f: &mut Mapping, n: NodeId, v: Option<NodeId>| match v {
                        Some(v) => f.insert(n, v),
                        None => f.remove(&n),
                    };
                    set(f, a, fb);
                    set(f, b, fa);
                    if local(f, &[a, b]) < before {
                        improved = true;
                    } else {
                        set(f, a, fa);
                        set(f, b, fb);
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}
