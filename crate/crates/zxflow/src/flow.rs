//! Pauli flow on open graphs and ZX-flow on diagrams: verification,
//! focusing, greedy search, and conversions between the two notions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, MeasLabel, NodeId, OpenGraph, Violation};
use crate::phase::Phase;
use crate::webs::{
    self, basic_semiweb, check_conditions, decompose, defects, edge_semiweb, is_semiweb,
    solve_constrained, Letter, NodeCondition, PauliSupport, SemiwebConstraintSet, WebError,
};

/// Correction-set structure on an open graph: a linear order over the
/// non-output vertices, measurement labels, and correction sets into the
/// non-inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFlow {
    pub order: Vec<NodeId>,
    pub labels: BTreeMap<NodeId, MeasLabel>,
    pub corrections: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Plain,
    Strong,
}

/// ZX-flow data: an order over the flow spiders (all non-Clifford spiders
/// when plain, all spiders when strong), a pair of logical semiwebs per
/// input, and one flow semiweb per ordered spider.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZXFlow {
    pub strength: Strength,
    pub order: Vec<NodeId>,
    pub logicals: Vec<(PauliSupport, PauliSupport)>,
    pub flows: BTreeMap<NodeId, PauliSupport>,
}

/// How many semiwebs `focus` rewrote.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct FocusReport {
    pub flow_webs_modified: usize,
    pub logical_webs_modified: usize,
}

#[derive(Error, Debug)]
pub enum FlowError {
    #[error("diagram is not graph-like")]
    NotGraphLike,
    #[error("flow fails verification: {0}")]
    InvalidFlow(String),
    #[error(transparent)]
    Web(#[from] WebError),
    #[error("flow serialization: {0}")]
    Serde(String),
}

impl MeasLabel {
    /// The measurement label as a set of Paulis.
    pub fn members(self) -> &'static [Letter] {
        match self {
            MeasLabel::X => &[Letter::X],
            MeasLabel::Y => &[Letter::Y],
            MeasLabel::XY => &[Letter::X, Letter::Y],
        }
    }
}

/// The three anticommutation sets of a correction set:
/// `A_X = Odd(c)`, `A_Y = c Δ Odd(c)`, `A_Z = c`.
pub fn anticomm_sets(
    g: &OpenGraph,
    c: &BTreeSet<NodeId>,
) -> (BTreeSet<NodeId>, BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let odd = g.odd_neighbourhood(c);
    let ay: BTreeSet<NodeId> = c.symmetric_difference(&odd).copied().collect();
    (odd.clone(), ay, c.clone())
}

fn anticomm(g: &OpenGraph, c: &BTreeSet<NodeId>, p: Letter) -> BTreeSet<NodeId> {
    let (ax, ay, az) = anticomm_sets(g, c);
    match p {
        Letter::X => ax,
        Letter::Y => ay,
        Letter::Z => az,
        Letter::I => BTreeSet::new(),
    }
}

/// Checks the two flow conditions (every measured Pauli anticommutes at its
/// own vertex; anticommutation elsewhere only in the future) and
/// independently the nine classical conditions. The two formulations are
/// equivalent; a verdict mismatch is a bug, never a legal outcome.
pub fn verify_pauli_flow(g: &OpenGraph, pf: &PauliFlow) -> (bool, Vec<Violation>) {
    let mut violations = Vec::new();
    let outputs: BTreeSet<NodeId> = g.outputs.iter().copied().collect();
    let non_outputs: BTreeSet<NodeId> =
        g.vertices.iter().copied().filter(|v| !outputs.contains(v)).collect();
    let inputs: BTreeSet<NodeId> = g.inputs.iter().copied().collect();

    let order_set: BTreeSet<NodeId> = pf.order.iter().copied().collect();
    if order_set.len() != pf.order.len() {
        violations.push(Violation::new("pf-order-dup", "order lists a vertex twice"));
    }
    if order_set != non_outputs {
        violations.push(Violation::new(
            "pf-order-domain",
            "order must cover exactly the non-output vertices",
        ));
    }
    for v in &non_outputs {
        if !pf.labels.contains_key(v) {
            violations.push(Violation::new("pf-label-missing", format!("no label for {v}")));
        }
    }
    for (u, c) in &pf.corrections {
        if !non_outputs.contains(u) {
            violations.push(Violation::new(
                "pf-correction-domain",
                format!("correction set for non-measured vertex {u}"),
            ));
        }
        for v in c {
            if inputs.contains(v) || !g.vertices.contains(v) {
                violations.push(Violation::new(
                    "pf-correction-range",
                    format!("c({u}) contains {v}, which is not a non-input vertex"),
                ));
            }
        }
    }
    if !violations.is_empty() {
        return (false, violations);
    }

    let pos: BTreeMap<NodeId, usize> =
        pf.order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let empty = BTreeSet::new();
    let preceq = |u: NodeId, v: NodeId| pos[&u] <= pos[&v];

    // direct form
    let mut ok_direct = true;
    for &u in &non_outputs {
        let c = pf.corrections.get(&u).unwrap_or(&empty);
        for &p in pf.labels[&u].members() {
            let a = anticomm(g, c, p);
            if !a.contains(&u) {
                ok_direct = false;
                violations.push(Violation::new(
                    "pf-own-correction",
                    format!("{p} in label of {u} but {u} is not in A_{p}({u})"),
                ));
            }
            for &v in &a {
                if v == u || !non_outputs.contains(&v) {
                    continue;
                }
                if pf.labels[&v].members().contains(&p) && !preceq(u, v) {
                    ok_direct = false;
                    violations.push(Violation::new(
                        "pf-ordering",
                        format!("{v} in A_{p}({u}) is measured in {p} but precedes {u}"),
                    ));
                }
            }
        }
    }

    // classical nine-condition form (P5, P6, P8 are vacuous without
    // Z/XZ/YZ labels)
    let mut ok_classic = true;
    for &u in &non_outputs {
        let c = pf.corrections.get(&u).unwrap_or(&empty);
        let (ax, ay, az) = anticomm_sets(g, c);
        for &v in &non_outputs {
            if preceq(u, v) {
                continue;
            }
            let mu = pf.labels[&v];
            if mu != MeasLabel::X && mu != MeasLabel::Y && az.contains(&v) {
                ok_classic = false;
            }
            if mu != MeasLabel::Y && ax.contains(&v) {
                ok_classic = false;
            }
            if mu != MeasLabel::X && ay.contains(&v) {
                ok_classic = false;
            }
        }
        match pf.labels[&u] {
            MeasLabel::XY => {
                if az.contains(&u) || !ax.contains(&u) {
                    ok_classic = false;
                }
            }
            MeasLabel::X => {
                if !ax.contains(&u) {
                    ok_classic = false;
                }
            }
            MeasLabel::Y => {
                if !ay.contains(&u) {
                    ok_classic = false;
                }
            }
        }
    }

    assert_eq!(
        ok_direct, ok_classic,
        "internal error: the two Pauli-flow formulations disagree"
    );
    (ok_direct, violations)
}

fn position_map(order: &[NodeId]) -> BTreeMap<NodeId, usize> {
    order.iter().enumerate().map(|(i, &n)| (n, i)).collect()
}

/// Verifies every ZX-flow invariant: order domain, logical input
/// restrictions, semiweb-ness, and the defect placement rules (the flow web
/// of a spider has a pi-defect there and all other defects strictly later;
/// a plain flow additionally confines defects to non-Clifford spiders).
pub fn verify_zx_flow(d: &Diagram, f: &ZXFlow) -> (bool, Vec<Violation>) {
    let mut violations = Vec::new();

    let expected: BTreeSet<NodeId> = match f.strength {
        Strength::Plain => d.non_clifford_spiders().into_iter().collect(),
        Strength::Strong => d.spiders().into_iter().collect(),
    };
    let order_set: BTreeSet<NodeId> = f.order.iter().copied().collect();
    if order_set.len() != f.order.len() {
        violations.push(Violation::new("flow-order-dup", "order lists a spider twice"));
    }
    if order_set != expected {
        violations.push(Violation::new(
            "flow-order-domain",
            match f.strength {
                Strength::Plain => "order must cover exactly the non-Clifford spiders",
                Strength::Strong => "order must cover exactly the spiders",
            },
        ));
    }
    let flow_domain: BTreeSet<NodeId> = f.flows.keys().copied().collect();
    if flow_domain != order_set {
        violations.push(Violation::new(
            "flow-web-domain",
            "flow semiwebs must be given for exactly the ordered spiders",
        ));
    }
    if f.logicals.len() != d.inputs().len() {
        violations.push(Violation::new(
            "flow-logical-count",
            format!("expected {} logical pairs, found {}", d.inputs().len(), f.logicals.len()),
        ));
    }

    let non_clifford: BTreeSet<NodeId> = d.non_clifford_spiders().into_iter().collect();
    let check_semiweb = |w: &PauliSupport, what: &str, violations: &mut Vec<Violation>| -> bool {
        if is_semiweb(d, w) {
            true
        } else {
            violations.push(Violation::new(
                "flow-not-semiweb",
                format!("{what} is not a Pauli semiweb"),
            ));
            false
        }
    };

    for (i, (lz, lx)) in f.logicals.iter().enumerate() {
        for (w, target) in [(lz, Letter::Z), (lx, Letter::X)] {
            for (j, &iw) in d.inputs().iter().enumerate() {
                let want = if i == j { target } else { Letter::I };
                if w.letter(iw) != want {
                    violations.push(Violation::new(
                        "flow-logical-restriction",
                        format!(
                            "logical {target} web of input {i} must restrict to {want} on input wire {iw}"
                        ),
                    ));
                }
            }
            if !check_semiweb(w, &format!("logical {target} web of input {i}"), &mut violations) {
                continue;
            }
            if f.strength == Strength::Plain {
                let map = defects(d, w).expect("semiweb has defects");
                for n in map.keys() {
                    if !non_clifford.contains(n) {
                        violations.push(Violation::new(
                            "flow-logical-defect",
                            format!(
                                "logical {target} web of input {i} has a defect at Clifford spider {n}"
                            ),
                        ));
                    }
                }
            }
        }
    }

    let pos = position_map(&f.order);
    for (&nu, w) in &f.flows {
        if !check_semiweb(w, &format!("flow web of {nu}"), &mut violations) {
            continue;
        }
        let Some(&p_nu) = pos.get(&nu) else { continue };
        let map = defects(d, w).expect("semiweb has defects");
        if map.get(&nu) != Some(&Phase::PI) {
            violations.push(Violation::new(
                "flow-pi-defect",
                format!("flow web of {nu} lacks a pi-defect at {nu}"),
            ));
        }
        for (&n, _) in map.iter().filter(|&(&n, _)| n != nu) {
            if f.strength == Strength::Plain && !non_clifford.contains(&n) {
                violations.push(Violation::new(
                    "flow-defect-clifford",
                    format!("flow web of {nu} has a defect at Clifford spider {n}"),
                ));
            }
            match pos.get(&n) {
                Some(&p) if p >= p_nu => {}
                _ => violations.push(Violation::new(
                    "flow-defect-order",
                    format!("flow web of {nu} has a defect at {n}, which is not after {nu}"),
                )),
            }
        }
    }

    (violations.is_empty(), violations)
}

/// Spiders at which `w` violates the parity condition.
fn parity_violations(d: &Diagram, w: &PauliSupport) -> BTreeSet<NodeId> {
    check_conditions(d, w)
        .nodes
        .iter()
        .filter(|(_, flags)| flags.parity_ok == Some(false))
        .map(|(&n, _)| n)
        .collect()
}

/// A flow is focused when its logicals satisfy parity everywhere and each
/// flow web satisfies parity at every spider other than its own.
pub fn is_focused(d: &Diagram, f: &ZXFlow) -> bool {
    for (lz, lx) in &f.logicals {
        if !parity_violations(d, lz).is_empty() || !parity_violations(d, lx).is_empty() {
            return false;
        }
    }
    for (&nu, w) in &f.flows {
        let mut v = parity_violations(d, w);
        v.remove(&nu);
        if !v.is_empty() {
            return false;
        }
    }
    true
}

/// Focuses a verified flow: repeatedly picks the order-maximal spider whose
/// flow web violates parity elsewhere and multiplies in the flow webs of
/// the violating spiders, then cleans the logicals the same way. The order
/// is unchanged and the result is focused.
pub fn focus(d: &Diagram, f: &ZXFlow) -> (ZXFlow, FocusReport) {
    let mut f = f.clone();
    let mut touched_flows: BTreeSet<NodeId> = BTreeSet::new();
    let cap = 4 * f.order.len() * f.order.len() + 16;

    let mut rounds = 0;
    loop {
        // order-maximal offender
        let offender = f.order.iter().rev().copied().find(|&nu| {
            let mut v = parity_violations(d, &f.flows[&nu]);
            v.remove(&nu);
            !v.is_empty()
        });
        let Some(nu) = offender else { break };
        let mut viol = parity_violations(d, &f.flows[&nu]);
        viol.remove(&nu);
        let mut w = f.flows[&nu].clone();
        for n in viol {
            let fix = f
                .flows
                .get(&n)
                .unwrap_or_else(|| panic!("parity violation at {n} without a flow web"));
            w = w.product(fix);
        }
        f.flows.insert(nu, w);
        touched_flows.insert(nu);
        rounds += 1;
        assert!(rounds <= cap, "focusing did not terminate (internal error)");
    }

    let mut touched_logicals = 0usize;
    for i in 0..f.logicals.len() {
        for side in 0..2 {
            let mut w = if side == 0 { f.logicals[i].0.clone() } else { f.logicals[i].1.clone() };
            let mut touched = false;
            let mut rounds = 0;
            loop {
                let viol = parity_violations(d, &w);
                if viol.is_empty() {
                    break;
                }
                for n in viol {
                    let fix = f
                        .flows
                        .get(&n)
                        .unwrap_or_else(|| panic!("parity violation at {n} without a flow web"));
                    w = w.product(fix);
                }
                touched = true;
                rounds += 1;
                assert!(rounds <= cap, "logical focusing did not terminate (internal error)");
            }
            if touched {
                touched_logicals += 1;
                if side == 0 {
                    f.logicals[i].0 = w;
                } else {
                    f.logicals[i].1 = w;
                }
            }
        }
    }

    let report = FocusReport {
        flow_webs_modified: touched_flows.len(),
        logical_webs_modified: touched_logicals,
    };
    (f, report)
}

/// Backward-greedy flow search. Builds the order back to front: a spider
/// can be placed when a semiweb exists with a pi-defect there, no defect at
/// any unplaced spider, and identity support on the inputs. Finally solves
/// the logical webs with defects confined to non-Clifford spiders. Sound
/// but not proven complete.
pub fn find_zx_flow(d: &Diagram) -> Option<ZXFlow> {
    let spiders = d.spiders();
    let targets = d.non_clifford_spiders();
    let mut placed: BTreeSet<NodeId> = BTreeSet::new();
    let mut order: Vec<NodeId> = Vec::new();
    let mut flows = BTreeMap::new();

    while placed.len() < targets.len() {
        let mut found = None;
        for &nu in targets.iter().rev() {
            if placed.contains(&nu) {
                continue;
            }
            let mut cs = SemiwebConstraintSet::default();
            for &w in d.inputs() {
                cs.pins.insert(w, Letter::I);
            }
            cs.node_conditions.insert(nu, NodeCondition::PiDefect);
            for &s in &spiders {
                if s != nu && !placed.contains(&s) {
                    cs.node_conditions.insert(s, NodeCondition::NoDefect);
                }
            }
            if let Some(w) = solve_constrained(d, &cs) {
                found = Some((nu, w));
                break;
            }
        }
        let (nu, w) = found?;
        order.insert(0, nu);
        placed.insert(nu);
        flows.insert(nu, w);
    }

    let clifford: Vec<NodeId> =
        spiders.iter().copied().filter(|s| !targets.contains(s)).collect();
    let mut logicals = Vec::new();
    for i in 0..d.inputs().len() {
        let mut pair = Vec::new();
        for target in [Letter::Z, Letter::X] {
            let mut cs = SemiwebConstraintSet::default();
            for (j, &w) in d.inputs().iter().enumerate() {
                cs.pins.insert(w, if i == j { target } else { Letter::I });
            }
            for &s in &clifford {
                cs.node_conditions.insert(s, NodeCondition::NoDefect);
            }
            pair.push(solve_constrained(d, &cs)?);
        }
        let lx = pair.pop().expect("two webs");
        let lz = pair.pop().expect("two webs");
        logicals.push((lz, lx));
    }

    Some(ZXFlow { strength: Strength::Plain, order, logicals, flows })
}

/// Spiders adjacent to an output wire, in output-slot order, deduplicated.
fn output_spiders(d: &Diagram) -> Vec<NodeId> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &w in d.outputs() {
        if let Some((a, b)) = d.wire(w) {
            for end in [a, b] {
                if let crate::diagram::WireEnd::Node(n) = end {
                    if d.is_spider(n) && seen.insert(n) {
                        out.push(n);
                    }
                }
            }
        }
    }
    out
}

/// Builds a strong ZX-flow from a Pauli flow on a graph-like diagram:
/// measured spiders get the product of the basic semiwebs over their
/// correction set, output spiders get the semiweb of their output wire, and
/// the logicals are the input edge semiweb and input basic semiweb.
pub fn strong_flow_from_pauli_flow(d: &Diagram, pf: &PauliFlow) -> Result<ZXFlow, FlowError> {
    if !d.is_graph_like() {
        return Err(FlowError::NotGraphLike);
    }
    let g = d.to_open_graph().map_err(|e| FlowError::InvalidFlow(e.to_string()))?;
    let (ok, violations) = verify_pauli_flow(&g, pf);
    if !ok {
        return Err(FlowError::InvalidFlow(
            violations.first().map(|v| v.message.clone()).unwrap_or_default(),
        ));
    }

    let mut flows = BTreeMap::new();
    let empty = BTreeSet::new();
    for &nu in &pf.order {
        let c = pf.corrections.get(&nu).unwrap_or(&empty);
        let mut w = PauliSupport::new();
        for &b in c {
            w = w.product(&basic_semiweb(d, b));
        }
        flows.insert(nu, w);
    }
    let mut order = pf.order.clone();
    for o in output_spiders(d) {
        let wid = d
            .node_wires(o)
            .into_iter()
            .find(|&w| d.is_output_wire(w))
            .expect("output spider has an output wire");
        let edge = d.edge_of(wid).expect("boundary wire is an edge");
        flows.insert(o, edge_semiweb(d, &edge, Letter::Z)?);
        order.push(o);
    }

    let mut logicals = Vec::new();
    for (i, &iw) in d.inputs().iter().enumerate() {
        let edge = d.edge_of(iw).expect("boundary wire is an edge");
        let lz = edge_semiweb(d, &edge, Letter::Z)?;
        let spider = match d.wire(iw) {
            Some((crate::diagram::WireEnd::Node(n), _)) if d.is_spider(n) => n,
            Some((_, crate::diagram::WireEnd::Node(n))) if d.is_spider(n) => n,
            _ => return Err(FlowError::InvalidFlow(format!("input {i} not wired to a spider"))),
        };
        let lx = basic_semiweb(d, spider);
        logicals.push((lz, lx));
    }

    Ok(ZXFlow { strength: Strength::Strong, order, logicals, flows })
}

/// Recovers a Pauli flow from a strong ZX-flow on a graph-like diagram: the
/// correction set of a measured spider is the generating spider set of its
/// flow web, labels come from the phases, and the order forgets outputs.
pub fn pauli_flow_from_strong(d: &Diagram, f: &ZXFlow) -> Result<PauliFlow, FlowError> {
    if !d.is_graph_like() {
        return Err(FlowError::NotGraphLike);
    }
    if f.strength != Strength::Strong {
        return Err(FlowError::InvalidFlow("expected a strong flow".into()));
    }
    let (ok, violations) = verify_zx_flow(d, f);
    if !ok {
        return Err(FlowError::InvalidFlow(
            violations.first().map(|v| v.message.clone()).unwrap_or_default(),
        ));
    }
    let g = d.to_open_graph().map_err(|e| FlowError::InvalidFlow(e.to_string()))?;
    let outputs: BTreeSet<NodeId> = g.outputs.iter().copied().collect();

    let mut corrections = BTreeMap::new();
    let mut labels = BTreeMap::new();
    let mut order = Vec::new();
    for &nu in &f.order {
        if outputs.contains(&nu) {
            continue;
        }
        let (b, _) = decompose(d, &f.flows[&nu])?;
        corrections.insert(nu, b);
        labels.insert(nu, d.measurement_label(nu));
        order.push(nu);
    }
    Ok(PauliFlow { order, labels, corrections })
}

// ---- serialization ----

#[derive(Serialize, Deserialize)]
struct LogicalRepr {
    z: PauliSupport,
    x: PauliSupport,
}

#[derive(Serialize, Deserialize)]
struct FlowRepr {
    strength: Strength,
    order: Vec<u32>,
    logicals: Vec<LogicalRepr>,
    flows: BTreeMap<u32, PauliSupport>,
}

impl ZXFlow {
    pub fn to_json(&self) -> String {
        let repr = FlowRepr {
            strength: self.strength,
            order: self.order.iter().map(|n| n.0).collect(),
            logicals: self
                .logicals
                .iter()
                .map(|(z, x)| LogicalRepr { z: z.clone(), x: x.clone() })
                .collect(),
            flows: self.flows.iter().map(|(n, w)| (n.0, w.clone())).collect(),
        };
        serde_json::to_string_pretty(&repr).expect("flow serializes")
    }

    pub fn from_json(s: &str) -> Result<ZXFlow, FlowError> {
        let repr: FlowRepr =
            serde_json::from_str(s).map_err(|e| FlowError::Serde(e.to_string()))?;
        Ok(ZXFlow {
            strength: repr.strength,
            order: repr.order.into_iter().map(NodeId).collect(),
            logicals: repr.logicals.into_iter().map(|l| (l.z, l.x)).collect(),
            flows: repr.flows.into_iter().map(|(n, w)| (NodeId(n), w)).collect(),
        })
    }

    /// Restriction of a strong flow to the non-Clifford spiders.
    pub fn restricted_to_plain(&self, d: &Diagram) -> ZXFlow {
        let keep: BTreeSet<NodeId> = d.non_clifford_spiders().into_iter().collect();
        ZXFlow {
            strength: Strength::Plain,
            order: self.order.iter().copied().filter(|n| keep.contains(n)).collect(),
            logicals: self.logicals.clone(),
            flows: self
                .flows
                .iter()
                .filter(|(n, _)| keep.contains(n))
                .map(|(n, w)| (*n, w.clone()))
                .collect(),
        }
    }
}

pub use webs::dump as dump_web;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{NodeType, WireEnd};

    fn path_graph(n: usize) -> OpenGraph {
        let vertices: BTreeSet<NodeId> = (0..n as u32).map(NodeId).collect();
        let edges = (0..n as u32 - 1).map(|i| (NodeId(i), NodeId(i + 1))).collect();
        OpenGraph {
            vertices,
            edges,
            inputs: vec![NodeId(0)],
            outputs: vec![NodeId(n as u32 - 1)],
            labels: (0..n as u32 - 1).map(|i| (NodeId(i), MeasLabel::XY)).collect(),
            angles: BTreeMap::new(),
        }
    }

    #[test]
    fn anticomm_sets_examples() {
        let g = path_graph(3);
        let (ax, ay, az) = anticomm_sets(&g, &BTreeSet::new());
        assert!(ax.is_empty() && ay.is_empty() && az.is_empty());

        let c: BTreeSet<NodeId> = [NodeId(1)].into();
        let (ax, ay, az) = anticomm_sets(&g, &c);
        assert_eq!(ax, [NodeId(0), NodeId(2)].into());
        assert_eq!(az, [NodeId(1)].into());
        assert_eq!(ay, [NodeId(0), NodeId(1), NodeId(2)].into());

        // isolated vertex
        let mut g = path_graph(3);
        g.edges.clear();
        let (ax, ay, az) = anticomm_sets(&g, &c);
        assert!(ax.is_empty());
        assert_eq!(az, c);
        assert_eq!(ay, c);
    }

    #[test]
    fn pauli_flow_on_line_graph() {
        // 4-vertex path, successor corrections
        let g = path_graph(4);
        let pf = PauliFlow {
            order: vec![NodeId(0), NodeId(1), NodeId(2)],
            labels: g.labels.clone(),
            corrections: (0..3).map(|i| (NodeId(i), [NodeId(i + 1)].into())).collect(),
        };
        let (ok, v) = verify_pauli_flow(&g, &pf);
        assert!(ok, "{v:?}");

        let rev = PauliFlow { order: vec![NodeId(2), NodeId(1), NodeId(0)], ..pf.clone() };
        let (ok, v) = verify_pauli_flow(&g, &rev);
        assert!(!ok);
        assert!(v.iter().any(|x| x.code == "pf-ordering"), "{v:?}");
    }

    #[test]
    fn empty_graph_flow() {
        let g = OpenGraph {
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
            inputs: vec![],
            outputs: vec![],
            labels: BTreeMap::new(),
            angles: BTreeMap::new(),
        };
        let pf = PauliFlow {
            order: vec![],
            labels: BTreeMap::new(),
            corrections: BTreeMap::new(),
        };
        assert!(verify_pauli_flow(&g, &pf).0);
    }

    /// Line diagram: input -- Z(pi/4) -- X(pi/4) -- output, with the flow
    /// drawn in the worked example.
    fn two_spider_line() -> (Diagram, ZXFlow, NodeId, NodeId, (u32, u32, u32)) {
        let mut d = Diagram::new();
        let n1 = d.add_node(NodeType::Z, Phase::new(1, 4));
        let n2 = d.add_node(NodeType::X, Phase::new(1, 4));
        let wi = d.add_input(WireEnd::Node(n1));
        let wm = d.add_wire(WireEnd::Node(n1), WireEnd::Node(n2));
        let wo = d.add_output(WireEnd::Node(n2));
        assert!(d.validate().is_empty());

        let mut f1 = PauliSupport::new();
        f1.insert_z(wm);
        f1.insert_z(wo);
        let mut f2 = PauliSupport::new();
        f2.insert_x(wo);
        let mut lz = PauliSupport::new();
        for w in [wi, wm, wo] {
            lz.insert_z(w);
        }
        let mut lx = PauliSupport::new();
        for w in [wi, wm, wo] {
            lx.insert_x(w);
        }
        let f = ZXFlow {
            strength: Strength::Plain,
            order: vec![n1, n2],
            logicals: vec![(lz, lx)],
            flows: [(n1, f1), (n2, f2)].into(),
        };
        (d, f, n1, n2, (wi.0, wm.0, wo.0))
    }

    #[test]
    fn drawn_flow_verifies() {
        let (d, f, n1, n2, _) = two_spider_line();
        let (ok, v) = verify_zx_flow(&d, &f);
        assert!(ok, "{v:?}");

        // defect structure of f(n1): pi at n1, -pi/2 at n2
        let map = defects(&d, &f.flows[&n1]).unwrap();
        assert_eq!(map, [(n1, Phase::PI), (n2, Phase::new(-1, 2))].into());

        let rev = ZXFlow { order: vec![n2, n1], ..f.clone() };
        let (ok, v) = verify_zx_flow(&d, &rev);
        assert!(!ok);
        assert!(v.iter().any(|x| x.code == "flow-defect-order"), "{v:?}");

        assert!(is_focused(&d, &f));
    }

    #[test]
    fn focus_is_identity_on_focused() {
        let (d, f, _, _, _) = two_spider_line();
        let (g, report) = focus(&d, &f);
        assert_eq!(report, FocusReport::default());
        assert_eq!(g, f);
    }

    #[test]
    fn find_flow_on_line() {
        let (d, _, n1, n2, _) = two_spider_line();
        let f = find_zx_flow(&d).expect("line diagram has a flow");
        let (ok, v) = verify_zx_flow(&d, &f);
        assert!(ok, "{v:?}");
        let p = position_map(&f.order);
        assert!(p[&n1] < p[&n2]);
    }

    #[test]
    fn find_flow_on_clifford_isometry() {
        // |0>-prep: X(0) spider with one output
        let mut d = Diagram::new();
        let n = d.add_node(NodeType::X, Phase::ZERO);
        d.add_output(WireEnd::Node(n));
        let f = find_zx_flow(&d).expect("clifford isometry has a flow");
        assert!(f.order.is_empty());
        assert!(verify_zx_flow(&d, &f).0);
    }

    #[test]
    fn find_flow_rejects_non_isometry() {
        // Z spider with two inputs and no outputs: no X logical exists
        let mut d = Diagram::new();
        let n = d.add_node(NodeType::Z, Phase::ZERO);
        d.add_input(WireEnd::Node(n));
        d.add_input(WireEnd::Node(n));
        assert!(find_zx_flow(&d).is_none());
    }

    /// Graph-like chain: in -- a(pi/4) -H- b(0) -- out.
    fn graph_like_chain() -> (Diagram, NodeId, NodeId) {
        let mut d = Diagram::new();
        let a = d.add_node(NodeType::Z, Phase::new(1, 4));
        let b = d.add_node(NodeType::Z, Phase::ZERO);
        let h = d.add_node(NodeType::H, Phase::ZERO);
        d.add_input(WireEnd::Node(a));
        d.add_wire(WireEnd::Node(a), WireEnd::Node(h));
        d.add_wire(WireEnd::Node(h), WireEnd::Node(b));
        d.add_output(WireEnd::Node(b));
        assert!(d.is_graph_like(), "{:?}", d.graph_like_violations());
        (d, a, b)
    }

    #[test]
    fn pauli_flow_round_trip() {
        let (d, a, b) = graph_like_chain();
        let pf = PauliFlow {
            order: vec![a],
            labels: [(a, MeasLabel::XY)].into(),
            corrections: [(a, [b].into())].into(),
        };
        let g = d.to_open_graph().unwrap();
        assert!(verify_pauli_flow(&g, &pf).0);

        let strong = strong_flow_from_pauli_flow(&d, &pf).unwrap();
        let (ok, v) = verify_zx_flow(&d, &strong);
        assert!(ok, "{v:?}");

        let back = pauli_flow_from_strong(&d, &strong).unwrap();
        assert!(verify_pauli_flow(&g, &back).0);
        assert_eq!(back.corrections[&a], [b].into());
        assert_eq!(back.order, vec![a]);
    }

    #[test]
    fn flow_json_round_trip() {
        let (_, f, _, _, _) = two_spider_line();
        let s = f.to_json();
        let f2 = ZXFlow::from_json(&s).unwrap();
        assert_eq!(f, f2);
        assert_eq!(s, f2.to_json());
    }
}
