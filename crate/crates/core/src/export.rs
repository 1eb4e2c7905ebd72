//! Graphviz DOT rendering of learned structures.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mnr::{MnrModel, MnrTarget, Polarity};
use crate::planner::{ActionNetwork, PlanGraph, PlanKey, PlanNode};
use crate::scalar::Scalar;
use crate::spn::StatePolynetwork;
use crate::sv::{Csv, EventKind, Model, SvId, TargetId, Unconditionality};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Keep only unconditional CSVs.
    pub reliable_only: bool,
    /// Keep only the predictive pathway of this state variable.
    pub pathway: Option<SvId>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn sv_key(sv: SvId) -> String {
    match sv {
        SvId::Bsv(b) => format!("b{}", b.0),
        SvId::Dsv(d) => format!("d{}{}", d.bsv.0, d.kind.suffix()),
        SvId::Csv(c) => format!("c{}", c.0),
    }
}

/// CSVs that predict `sv`, directly or by conditioning such a CSV.
fn pathway(model: &Model, sv: SvId) -> Result<BTreeSet<crate::sv::CsvId>> {
    let mut frontier: Vec<TargetId> = match sv {
        SvId::Bsv(b) => {
            model.bsv(b)?;
            [EventKind::Activation, EventKind::Deactivation]
                .into_iter()
                .map(|kind| TargetId::Dsv(crate::sv::DsvId { bsv: b, kind }))
                .filter(|t| model.contains_target(*t))
                .collect()
        }
        SvId::Dsv(d) => {
            model.dsv(d)?;
            vec![TargetId::Dsv(d)]
        }
        SvId::Csv(c) => {
            model.csv(c)?;
            vec![TargetId::Csv(c)]
        }
    };
    let mut out = BTreeSet::new();
    if let SvId::Csv(c) = sv {
        out.insert(c);
    }
    let index = model.conditioner_index();
    while let Some(t) = frontier.pop() {
        for c in index.get(&t).into_iter().flatten() {
            if out.insert(*c) {
                frontier.push(TargetId::Csv(*c));
            }
        }
    }
    Ok(out)
}

/// Renders a learned model. BSVs are brown boxes, DSVs blue ellipses, CSVs
/// grey diamonds; unconditional CSVs are drawn bold. Source edges are solid
/// (dashed for negative sources), conditioning edges are bold arrows.
pub fn model_to_dot(model: &Model, opts: &DotOptions) -> Result<String> {
    let keep: BTreeSet<crate::sv::CsvId> = match opts.pathway {
        Some(sv) => pathway(model, sv)?,
        None => model.csvs.keys().copied().collect(),
    };
    let csvs: Vec<&Csv> = model
        .csvs
        .values()
        .filter(|c| keep.contains(&c.id))
        .filter(|c| !opts.reliable_only || c.unconditionality == Unconditionality::Unconditional)
        .collect();
    let mut used: BTreeSet<SvId> = BTreeSet::new();
    for c in &csvs {
        used.insert(SvId::Csv(c.id));
        used.extend(c.pos_sources.iter().chain(&c.neg_sources).map(|s| SvId::from(*s)));
        used.extend(c.targets.iter().map(|t| SvId::from(*t)));
    }
    if let Some(sv) = opts.pathway {
        used.insert(sv);
    }
    let mut out = String::from("digraph model {\n");
    for sv in &used {
        let (shape, color, bold) = match sv {
            SvId::Bsv(_) => ("box", "sienna", false),
            SvId::Dsv(_) => ("ellipse", "steelblue", false),
            SvId::Csv(c) => (
                "diamond",
                "gray40",
                model.csvs.get(c).is_some_and(|x| x.unconditionality == Unconditionality::Unconditional),
            ),
        };
        let _ = writeln!(
            out,
            "  {} [label={}, shape={shape}, color={color}{}];",
            sv_key(*sv),
            quote(&model.name(*sv)),
            if bold { ", penwidth=2" } else { "" }
        );
    }
    for c in &csvs {
        let me = sv_key(SvId::Csv(c.id));
        for s in &c.pos_sources {
            let _ = writeln!(out, "  {} -> {me} [style=solid];", sv_key((*s).into()));
        }
        for s in &c.neg_sources {
            let _ = writeln!(out, "  {} -> {me} [style=dashed, color=red];", sv_key(SvId::from(*s)));
        }
        for t in &c.targets {
            let _ = writeln!(out, "  {me} -> {} [style=bold, arrowhead=vee];", sv_key((*t).into()));
        }
    }
    out.push_str("}\n");
    Ok(out)
}

fn plan_key(model: &Model, graph: &PlanGraph, k: &PlanKey) -> (String, String) {
    let (id, name) = match k.0 {
        PlanNode::Bsv(b) => (format!("b{}", b.0), model.name(SvId::Bsv(b))),
        PlanNode::Csv(c) => (format!("c{}", c.0), model.name(SvId::Csv(c))),
        PlanNode::Gsv(g) => {
            let members: Vec<String> = graph.gsv(g).members.iter().map(|b| model.name(SvId::Bsv(*b))).collect();
            (format!("g{}", g.0), format!("G{}{{{}}}", g.0, members.join(",")))
        }
    };
    (format!("{id}_{}", k.1.label()), format!("{name}:{}", k.1.label()))
}

/// Renders an action network; the goal is double-circled, roots are green.
pub fn action_network_to_dot(an: &ActionNetwork, graph: &PlanGraph, model: &Model) -> String {
    let mut out = String::from("digraph action_network {\n");
    for k in &an.nodes {
        let (id, label) = plan_key(model, graph, k);
        let shape = match k.0 {
            PlanNode::Bsv(b) if graph.actions.contains(&b) => "box",
            PlanNode::Csv(_) => "diamond",
            _ => "ellipse",
        };
        let extra = if an.goal == Some(*k) {
            ", peripheries=2"
        } else if an.roots.contains(k) {
            ", color=darkgreen"
        } else {
            ""
        };
        let _ = writeln!(out, "  {id} [label={}, shape={shape}{extra}];", quote(&label));
    }
    for (a, b) in &an.edges {
        let _ = writeln!(out, "  {} -> {};", plan_key(model, graph, a).0, plan_key(model, graph, b).0);
    }
    out.push_str("}\n");
    out
}

/// Renders a polynetwork with nodes pinned at their image positions (y up).
pub fn spn_to_dot<T: Scalar>(spn: &StatePolynetwork<T>, name: &str) -> String {
    let mut out = format!("digraph {} {{\n", quote(name));
    for (id, n) in &spn.nodes {
        let pos = n
            .pos
            .and_then(|p| Some(format!(", pos=\"{:.2},{:.2}!\"", p[0].to_f64()?, -p[1].to_f64()?)))
            .unwrap_or_default();
        let _ = writeln!(out, "  n{id} [label={}{pos}];", quote(&format!("{id}:{}", n.kind)));
    }
    for (key, net) in &spn.networks {
        for (a, b) in net.edges.keys() {
            let _ = writeln!(out, "  n{a} -> n{b} [label={}];", quote(key));
        }
    }
    out.push_str("}\n");
    out
}

/// Renders the conditioner hierarchy of a classifier. Negative conditioners
/// use dashed red edges; unconditional ones are bold.
pub fn mnr_to_dot<T: Scalar>(model: &MnrModel<T>, opts: &DotOptions) -> Result<String> {
    if let Some(sv) = opts.pathway {
        return Err(Error::UnknownId(format!("pathway filter not available for classifier models: {sv:?}")));
    }
    let mut out = String::from("digraph mnr {\n");
    for c in model.classes.keys() {
        let _ = writeln!(out, "  k{c} [label=\"class {c}\", shape=box, color=sienna];");
    }
    let shown: Vec<_> = model.csvs.values().filter(|c| !opts.reliable_only || c.unconditional).collect();
    let ids: BTreeSet<_> = shown.iter().map(|c| c.id).collect();
    for c in &shown {
        let _ = writeln!(
            out,
            "  m{} [label={}, shape=diamond{}];",
            c.id,
            quote(&format!("M{} d{} n{} e{} p={:.2}", c.id, c.depth, c.source.node_count(), c.source.edge_count(), c.p_incidence_given_ss())),
            if c.unconditional { ", penwidth=2" } else { "" }
        );
    }
    for c in &shown {
        let target = match c.target {
            MnrTarget::Class(l) => format!("k{l}"),
            MnrTarget::Csv(t) if ids.contains(&t) => format!("m{t}"),
            MnrTarget::Csv(_) => continue,
        };
        let style = match c.polarity {
            Polarity::Positive => "style=bold",
            Polarity::Negative => "style=dashed, color=red",
        };
        let _ = writeln!(out, "  m{} -> {target} [{style}];", c.id);
    }
    out.push_str("}\n");
    Ok(out)
}
