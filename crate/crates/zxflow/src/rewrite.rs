//! Flow-preserving Clifford rewriting: the extended Clifford rule set plus
//! full spider fusion, semiweb transport across rewrites, and the
//! graph-like / phase-gadget-skeleton normal forms with strong-flow upgrade.
//!
//! Every rule carries its exact scalar, so rewriting preserves the dense
//! semantics on the nose (not merely up to a global factor). Derived macros
//! (local complementation, pivoting, gadgetization, boundary handling) are
//! oracle-verified sequences used by the normalizers and logged alongside
//! primitive steps in the rewrite trace.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, Edge, NodeId, NodeType, Violation, WireEnd, WireId};
use crate::flow::{find_zx_flow, verify_zx_flow, Strength, ZXFlow};
use crate::phase::Phase;
use crate::webs::{
    basic_semiweb, edge_semiweb, solve_constrained, Letter, NodeCondition, PauliSupport,
    SemiwebConstraintSet,
};

/// The primitive rewrite rules.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum RuleId {
    /// Fuse two same-colour spiders along a plain wire; at most one of the
    /// pair may be non-Clifford.
    Fuse,
    /// Fusion with both spiders allowed non-Clifford; unfusing a Clifford
    /// spider into two non-Clifford parts is rejected.
    FuseFull,
    /// Flip a spider's colour, inserting (or absorbing) an H on every leg.
    ColourChange,
    /// Push a degree-2 pi spider through an opposite-colour spider.
    PiCopy,
    /// Strong complementarity: a connected Z(0)-X(0) pair against the
    /// complete bipartite opposite-colour expansion.
    StrongComp,
    /// H-gate against the Euler chain of three pi/2 spiders.
    HadDecomp,
    /// Remove or insert a phase-0 degree-2 spider on a wire.
    Identity,
    /// A zero-legged spider against the scalar 1 + e^{i phase}.
    ScalarS1,
    /// An opposite-colour one-legged dumbbell against its scalar value.
    ScalarS2,
}

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Direction {
    L2R,
    R2L,
}

/// One primitive rewrite application: the rule, direction, and anchors that
/// bind the pattern in the pre-diagram. `apply` fills the outcome maps
/// (created/deleted ids and spider renames) so flows can be transported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: RuleId,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor_nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor_nodes2: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor_wires: Vec<WireId>,
    /// Phase parameter for R2L introductions (unfused part, new spider, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    /// Second phase parameter (the Pauli side of ScalarS2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase2: Option<Phase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_type: Option<NodeType>,
    /// Wires handed to the split-off spider when unfusing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub split_wires: Vec<WireId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub created_nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub created_wires: Vec<WireId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deleted_nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deleted_wires: Vec<WireId>,
    /// Spider identifications caused by fusion: (absorbed, surviving).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub renames: Vec<(NodeId, NodeId)>,
}

impl RewriteStep {
    pub fn new(rule: RuleId, direction: Direction) -> RewriteStep {
        RewriteStep {
            rule,
            direction,
            anchor_nodes: Vec::new(),
            anchor_nodes2: Vec::new(),
            anchor_wires: Vec::new(),
            phase: None,
            phase2: None,
            node_type: None,
            split_wires: Vec::new(),
            created_nodes: Vec::new(),
            created_wires: Vec::new(),
            deleted_nodes: Vec::new(),
            deleted_wires: Vec::new(),
            renames: Vec::new(),
        }
    }
}

#[derive(Error, Debug)]
pub enum RewriteError {
    #[error("rule pattern mismatch: {0}")]
    Mismatch(String),
    #[error("rewrite not permitted: {0}")]
    NotPermitted(String),
    #[error("flow transport failed: {0}")]
    Transport(String),
    #[error("trace serialization: {0}")]
    Serde(String),
}

/// One line of a rewrite trace: a primitive rule step, or a derived macro
/// (named surgery with the nodes/wires it consumed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEntry {
    Rule(RewriteStep),
    Macro {
        name: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        nodes: Vec<NodeId>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        wires: Vec<WireId>,
    },
}

pub fn trace_to_json_lines(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    for t in trace {
        out.push_str(&serde_json::to_string(t).expect("trace entry serializes"));
        out.push('\n');
    }
    out
}

pub fn trace_from_json_lines(s: &str) -> Result<Vec<TraceEntry>, RewriteError> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| RewriteError::Serde(e.to_string())))
        .collect()
}

// ---- small diagram helpers ----

fn node_end(e: WireEnd) -> Option<NodeId> {
    match e {
        WireEnd::Node(n) => Some(n),
        _ => None,
    }
}

fn sqrt2_pow(k: i32) -> f64 {
    let mut v = 2f64.powi(k.div_euclid(2));
    if k.rem_euclid(2) == 1 {
        v *= std::f64::consts::SQRT_2;
    }
    v
}

/// Replaces the first end of `w` equal to `from` by `to`.
fn replace_end(d: &mut Diagram, w: WireId, from: WireEnd, to: WireEnd) {
    let (a, b) = d.wire(w).expect("wire exists");
    if a == from {
        d.set_wire_ends(w, to, b);
    } else if b == from {
        d.set_wire_ends(w, a, to);
    } else {
        panic!("wire {w} has no end {from:?} (internal error)");
    }
}

/// Points the boundary-slot list at `w` if `end` is a slot end.
fn fix_slot(d: &mut Diagram, end: WireEnd, w: WireId) {
    match end {
        WireEnd::Input(k) => d.set_input_wire(k, w),
        WireEnd::Output(k) => d.set_output_wire(k, w),
        WireEnd::Node(_) => {}
    }
}

fn other_wire_of_h(d: &Diagram, h: NodeId, w: WireId) -> WireId {
    let ws = d.node_wires(h);
    assert_eq!(ws.len(), 2, "H node {h} must have two wire-ends (internal error)");
    if ws[0] == w {
        ws[1]
    } else {
        ws[0]
    }
}

/// Proper H-edge neighbours of a spider: (far spider, H node, near wire,
/// far wire), ascending by neighbour id.
fn h_neighbours(d: &Diagram, u: NodeId) -> Vec<(NodeId, NodeId, WireId, WireId)> {
    let mut out = Vec::new();
    for e in d.edges() {
        if let Edge::HEdge(a, h, b) = e {
            let fa = d.far_end(a, h).and_then(node_end);
            let fb = d.far_end(b, h).and_then(node_end);
            match (fa, fb) {
                (Some(x), Some(y)) if x == u && y != u => out.push((y, h, a, b)),
                (Some(x), Some(y)) if y == u && x != u => out.push((x, h, b, a)),
                _ => {}
            }
        }
    }
    out.sort();
    out
}

fn hedge_between(d: &Diagram, u: NodeId, v: NodeId) -> Option<(NodeId, WireId, WireId)> {
    h_neighbours(d, u)
        .into_iter()
        .find(|&(n, _, _, _)| n == v)
        .map(|(_, h, wu, wv)| (h, wu, wv))
}

fn add_hedge(d: &mut Diagram, u: NodeId, v: NodeId) -> (NodeId, WireId, WireId) {
    let h = d.add_node(NodeType::H, Phase::ZERO);
    let wu = d.add_wire(WireEnd::Node(u), WireEnd::Node(h));
    let wv = d.add_wire(WireEnd::Node(h), WireEnd::Node(v));
    (h, wu, wv)
}

fn remove_hedge(d: &mut Diagram, u: NodeId, v: NodeId) {
    let (h, wu, wv) = hedge_between(d, u, v).expect("H-edge to remove (internal error)");
    d.remove_wire(wu);
    d.remove_wire(wv);
    d.remove_node(h);
}

fn toggle_hedge(d: &mut Diagram, u: NodeId, v: NodeId) {
    if hedge_between(d, u, v).is_some() {
        remove_hedge(d, u, v);
    } else {
        add_hedge(d, u, v);
    }
}

// ---- primitive rule application ----

/// Applies a primitive rewrite step, returning the post-diagram and filling
/// the step's outcome fields. The scalar bookkeeping makes the pre and post
/// diagrams denotationally equal, not just proportional.
pub fn apply(d: &Diagram, step: &mut RewriteStep) -> Result<Diagram, RewriteError> {
    step.created_nodes.clear();
    step.created_wires.clear();
    step.deleted_nodes.clear();
    step.deleted_wires.clear();
    step.renames.clear();
    let mut post = d.clone();
    match (step.rule, step.direction) {
        (RuleId::Fuse | RuleId::FuseFull, Direction::L2R) => fuse_l2r(&mut post, step)?,
        (RuleId::Fuse | RuleId::FuseFull, Direction::R2L) => unfuse_r2l(&mut post, step)?,
        (RuleId::ColourChange, Direction::L2R) => colour_change_l2r(&mut post, step)?,
        (RuleId::ColourChange, Direction::R2L) => colour_change_r2l(&mut post, step)?,
        (RuleId::PiCopy, Direction::L2R) => pi_copy_l2r(&mut post, step)?,
        (RuleId::PiCopy, Direction::R2L) => pi_copy_r2l(&mut post, step)?,
        (RuleId::StrongComp, Direction::L2R) => strong_comp_l2r(&mut post, step)?,
        (RuleId::StrongComp, Direction::R2L) => strong_comp_r2l(&mut post, step)?,
        (RuleId::HadDecomp, Direction::L2R) => had_decomp_l2r(&mut post, step)?,
        (RuleId::HadDecomp, Direction::R2L) => had_decomp_r2l(&mut post, step)?,
        (RuleId::Identity, Direction::L2R) => identity_l2r(&mut post, step)?,
        (RuleId::Identity, Direction::R2L) => identity_r2l(&mut post, step)?,
        (RuleId::ScalarS1, Direction::L2R) => scalar_s1_l2r(&mut post, step)?,
        (RuleId::ScalarS1, Direction::R2L) => scalar_s1_r2l(&mut post, step)?,
        (RuleId::ScalarS2, Direction::L2R) => scalar_s2_l2r(&mut post, step)?,
        (RuleId::ScalarS2, Direction::R2L) => scalar_s2_r2l(&mut post, step)?,
    }
    Ok(post)
}

fn mismatch<T>(msg: impl Into<String>) -> Result<T, RewriteError> {
    Err(RewriteError::Mismatch(msg.into()))
}

fn anchor_wire(d: &Diagram, step: &RewriteStep) -> Result<WireId, RewriteError> {
    match step.anchor_wires.first() {
        Some(&w) if d.has_wire(w) => Ok(w),
        _ => mismatch("missing anchor wire"),
    }
}

fn anchor_node(d: &Diagram, step: &RewriteStep) -> Result<NodeId, RewriteError> {
    match step.anchor_nodes.first() {
        Some(&n) if d.has_node(n) => Ok(n),
        _ => mismatch("missing anchor node"),
    }
}

fn has_self_loop(d: &Diagram, n: NodeId) -> bool {
    d.wires().any(|(_, a, b)| a == WireEnd::Node(n) && b == a)
}

fn fuse_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let w = anchor_wire(d, step)?;
    let (a, b) = d.wire(w).expect("anchor wire");
    let (Some(u), Some(v)) = (node_end(a), node_end(b)) else {
        return mismatch("fusion wire must join two spiders");
    };
    if u == v {
        return mismatch("fusion wire is a self-loop");
    }
    if !d.is_spider(u) || !d.is_spider(v) || d.node_type(u) != d.node_type(v) {
        return mismatch("fusion needs two same-colour spiders");
    }
    let (pu, pv) = (d.phase(u), d.phase(v));
    if step.rule == RuleId::Fuse && !pu.is_clifford() && !pv.is_clifford() {
        return mismatch("Fuse allows at most one non-Clifford spider; use FuseFull");
    }
    let keep = u.min(v);
    let drop = u.max(v);
    d.set_phase(keep, pu + pv);
    d.remove_wire(w);
    for wid in d.wire_ids() {
        d.reattach(wid, drop, keep);
    }
    d.remove_node(drop);
    step.deleted_nodes.push(drop);
    step.deleted_wires.push(w);
    step.renames.push((drop, keep));
    Ok(())
}

fn unfuse_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let v = anchor_node(d, step)?;
    if !d.is_spider(v) {
        return mismatch("unfusion anchor must be a spider");
    }
    let beta = step.phase.unwrap_or(Phase::ZERO);
    let total = d.phase(v);
    let rest = total - beta;
    let both_non_clifford = !beta.is_clifford() && !rest.is_clifford();
    if step.rule == RuleId::Fuse && both_non_clifford {
        return mismatch("Fuse unfusion allows at most one non-Clifford part");
    }
    if step.rule == RuleId::FuseFull && total.is_clifford() && both_non_clifford {
        return Err(RewriteError::NotPermitted(
            "cannot unfuse a Clifford spider into two non-Clifford spiders".into(),
        ));
    }
    let legs: BTreeSet<WireId> = d.node_wires(v).into_iter().collect();
    for &w in &step.split_wires {
        if !legs.contains(&w) {
            return mismatch(format!("split wire {w} is not attached to the anchor"));
        }
    }
    let t = d.node_type(v);
    let n = d.add_node(t, beta);
    d.set_phase(v, rest);
    for &w in &step.split_wires {
        d.reattach(w, v, n);
    }
    let join = d.add_wire(WireEnd::Node(v), WireEnd::Node(n));
    step.created_nodes.push(n);
    step.created_wires.push(join);
    Ok(())
}

fn colour_change_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let u = anchor_node(d, step)?;
    if !d.is_spider(u) {
        return mismatch("colour change anchor must be a spider");
    }
    d.set_node_type(u, d.node_type(u).flip());
    let mut ends: Vec<WireId> = Vec::new();
    for (w, a, b) in d.wires() {
        if a == WireEnd::Node(u) {
            ends.push(w);
        }
        if b == WireEnd::Node(u) {
            ends.push(w);
        }
    }
    for w in ends {
        let h = d.add_node(NodeType::H, Phase::ZERO);
        replace_end(d, w, WireEnd::Node(u), WireEnd::Node(h));
        let nw = d.add_wire(WireEnd::Node(h), WireEnd::Node(u));
        step.created_nodes.push(h);
        step.created_wires.push(nw);
    }
    Ok(())
}

fn colour_change_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let u = anchor_node(d, step)?;
    if !d.is_spider(u) {
        return mismatch("colour change anchor must be a spider");
    }
    // every wire at u must lead to a valid H node, absorbed on reversal
    let mut hs: Vec<(NodeId, WireId)> = Vec::new();
    for w in d.node_wires(u) {
        match d.far_end(w, u) {
            Some(WireEnd::Node(h)) if d.node(h).map(|(t, _)| t) == Some(NodeType::H) => {
                if d.degree(h) != 2 {
                    return mismatch("adjacent H node is malformed");
                }
                hs.push((h, w));
            }
            _ => return mismatch("every leg must end on an H node"),
        }
    }
    hs.sort();
    hs.dedup();
    let mut done: BTreeSet<NodeId> = BTreeSet::new();
    for (h, w) in hs {
        if !done.insert(h) {
            continue; // both wires of h reach u: handled on first visit
        }
        let w2 = other_wire_of_h(d, h, w);
        let far = d
            .far_end(w2, h)
            .expect("H wire has a far end");
        if far == WireEnd::Node(u) {
            // u-h-u through two wires: collapse to a plain self-loop
            d.remove_wire(w2);
            d.set_wire_ends(w, WireEnd::Node(u), WireEnd::Node(u));
            step.deleted_wires.push(w2);
        } else {
            // keep the outer wire, splice it onto u
            replace_end(d, w2, WireEnd::Node(h), WireEnd::Node(u));
            d.remove_wire(w);
            step.deleted_wires.push(w);
        }
        d.remove_node(h);
        step.deleted_nodes.push(h);
    }
    d.set_node_type(u, d.node_type(u).flip());
    Ok(())
}

fn pi_copy_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let p = anchor_node(d, step)?;
    let w = anchor_wire(d, step)?;
    if !d.is_spider(p) || d.phase(p) != Phase::PI || d.degree(p) != 2 {
        return mismatch("PiCopy needs a degree-2 pi spider");
    }
    let Some(t) = d.far_end(w, p).and_then(node_end) else {
        return mismatch("anchor wire must join the pi spider to a spider");
    };
    if t == p || !d.is_spider(t) || d.node_type(t) != d.node_type(p).flip() {
        return mismatch("PiCopy target must be an opposite-colour spider");
    }
    if has_self_loop(d, t) {
        return mismatch("PiCopy target must not carry self-loops");
    }
    let p_wires = d.node_wires(p);
    let w_o = if p_wires[0] == w { p_wires[1] } else { p_wires[0] };
    if w_o == w {
        return mismatch("pi spider is attached by a self-loop");
    }
    if d.far_end(w_o, p) == Some(WireEnd::Node(t)) {
        return mismatch("pi spider is doubly connected to the target");
    }
    let alpha = d.phase(t);
    let legs: Vec<WireId> = d.node_wires(t).into_iter().filter(|&l| l != w).collect();
    d.set_phase(t, -alpha);
    d.reattach(w_o, p, t);
    d.remove_wire(w);
    d.remove_node(p);
    step.deleted_nodes.push(p);
    step.deleted_wires.push(w);
    let copy_type = d.node_type(t).flip();
    for l in legs {
        let q = d.add_node(copy_type, Phase::PI);
        replace_end(d, l, WireEnd::Node(t), WireEnd::Node(q));
        let nw = d.add_wire(WireEnd::Node(q), WireEnd::Node(t));
        step.created_nodes.push(q);
        step.created_wires.push(nw);
    }
    d.multiply_scalar(alpha.cis());
    Ok(())
}

fn pi_copy_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let t = anchor_node(d, step)?;
    let w_o = anchor_wire(d, step)?;
    if !d.is_spider(t) || has_self_loop(d, t) {
        return mismatch("PiCopy target must be a spider without self-loops");
    }
    let legs = d.node_wires(t);
    if !legs.contains(&w_o) {
        return mismatch("anchor wire must be a leg of the target");
    }
    let copy_type = d.node_type(t).flip();
    let mut qs: Vec<(NodeId, WireId)> = Vec::new();
    for &l in &legs {
        if l == w_o {
            continue;
        }
        match d.far_end(l, t).and_then(node_end) {
            Some(q)
                if d.is_spider(q)
                    && q != t
                    && d.node_type(q) == copy_type
                    && d.phase(q) == Phase::PI
                    && d.degree(q) == 2 =>
            {
                qs.push((q, l));
            }
            _ => return mismatch("every other leg must carry a degree-2 pi copy"),
        }
    }
    let distinct: BTreeSet<NodeId> = qs.iter().map(|&(q, _)| q).collect();
    if distinct.len() != qs.len() {
        return mismatch("pi copies must be distinct spiders");
    }
    let beta = d.phase(t);
    d.set_phase(t, -beta);
    for (q, l) in qs {
        let l2 = other_wire_of_h(d, q, l); // q is degree 2 like an H node
        replace_end(d, l2, WireEnd::Node(q), WireEnd::Node(t));
        d.remove_wire(l);
        d.remove_node(q);
        step.deleted_nodes.push(q);
        step.deleted_wires.push(l);
    }
    let p = d.add_node(copy_type, Phase::PI);
    replace_end(d, w_o, WireEnd::Node(t), WireEnd::Node(p));
    let nw = d.add_wire(WireEnd::Node(p), WireEnd::Node(t));
    step.created_nodes.push(p);
    step.created_wires.push(nw);
    d.multiply_scalar(beta.cis());
    Ok(())
}

fn strong_comp_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let w = anchor_wire(d, step)?;
    let (a, b) = d.wire(w).expect("anchor wire");
    let (Some(n1), Some(n2)) = (node_end(a), node_end(b)) else {
        return mismatch("anchor wire must join two spiders");
    };
    if n1 == n2 || !d.is_spider(n1) || !d.is_spider(n2) {
        return mismatch("anchor wire must join two distinct spiders");
    }
    let (zu, xv) = match (d.node_type(n1), d.node_type(n2)) {
        (NodeType::Z, NodeType::X) => (n1, n2),
        (NodeType::X, NodeType::Z) => (n2, n1),
        _ => return mismatch("strong complementarity needs a Z-X pair"),
    };
    if !d.phase(zu).is_zero() || !d.phase(xv).is_zero() {
        return mismatch("strong complementarity needs phase-0 spiders");
    }
    if has_self_loop(d, zu) || has_self_loop(d, xv) {
        return mismatch("strong complementarity pair must not carry self-loops");
    }
    let joins = d
        .wires()
        .filter(|&(_, x, y)| {
            (x == WireEnd::Node(zu) && y == WireEnd::Node(xv))
                || (x == WireEnd::Node(xv) && y == WireEnd::Node(zu))
        })
        .count();
    if joins != 1 {
        return mismatch("the pair must be joined by exactly one wire");
    }
    let z_legs: Vec<WireId> = d.node_wires(zu).into_iter().filter(|&l| l != w).collect();
    let x_legs: Vec<WireId> = d.node_wires(xv).into_iter().filter(|&l| l != w).collect();
    let (p, q) = (z_legs.len(), x_legs.len());
    if p == 0 || q == 0 {
        return mismatch("both spiders need at least one outer leg");
    }
    let mut xs = Vec::new();
    for l in z_legs {
        let x = d.add_node(NodeType::X, Phase::ZERO);
        replace_end(d, l, WireEnd::Node(zu), WireEnd::Node(x));
        step.created_nodes.push(x);
        xs.push(x);
    }
    let mut zs = Vec::new();
    for l in x_legs {
        let z = d.add_node(NodeType::Z, Phase::ZERO);
        replace_end(d, l, WireEnd::Node(xv), WireEnd::Node(z));
        step.created_nodes.push(z);
        zs.push(z);
    }
    d.remove_wire(w);
    d.remove_node(zu);
    d.remove_node(xv);
    step.deleted_nodes.extend([zu, xv]);
    step.deleted_wires.push(w);
    for &x in &xs {
        for &z in &zs {
            let nw = d.add_wire(WireEnd::Node(x), WireEnd::Node(z));
            step.created_wires.push(nw);
        }
    }
    let k = (p as i32 - 1) * (q as i32 - 1);
    d.multiply_scalar(Complex64::new(sqrt2_pow(k), 0.0));
    Ok(())
}

fn strong_comp_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let xs = step.anchor_nodes.clone();
    let zs = step.anchor_nodes2.clone();
    let (p, q) = (xs.len(), zs.len());
    if p == 0 || q == 0 {
        return mismatch("strong complementarity reversal needs both spider lists");
    }
    let all: BTreeSet<NodeId> = xs.iter().chain(zs.iter()).copied().collect();
    if all.len() != p + q {
        return mismatch("spider lists must be disjoint and duplicate-free");
    }
    for &x in &xs {
        if !d.has_node(x)
            || d.node_type(x) != NodeType::X
            || !d.phase(x).is_zero()
            || d.degree(x) != q + 1
        {
            return mismatch("each X spider must be phase 0 with one outer leg");
        }
    }
    for &z in &zs {
        if !d.has_node(z)
            || d.node_type(z) != NodeType::Z
            || !d.phase(z).is_zero()
            || d.degree(z) != p + 1
        {
            return mismatch("each Z spider must be phase 0 with one outer leg");
        }
    }
    let mut pair_wires: Vec<WireId> = Vec::new();
    for &x in &xs {
        for &z in &zs {
            let ws: Vec<WireId> = d
                .wires()
                .filter(|&(_, a, b)| {
                    (a == WireEnd::Node(x) && b == WireEnd::Node(z))
                        || (a == WireEnd::Node(z) && b == WireEnd::Node(x))
                })
                .map(|(w, _, _)| w)
                .collect();
            if ws.len() != 1 {
                return mismatch("each pair must be joined by exactly one wire");
            }
            pair_wires.push(ws[0]);
        }
    }
    let u = d.add_node(NodeType::Z, Phase::ZERO);
    let v = d.add_node(NodeType::X, Phase::ZERO);
    for &w in &pair_wires {
        d.remove_wire(w);
        step.deleted_wires.push(w);
    }
    for &x in &xs {
        let outer = d.node_wires(x);
        if outer.len() != 1 {
            return mismatch("X spider has unexpected extra legs");
        }
        replace_end(d, outer[0], WireEnd::Node(x), WireEnd::Node(u));
        d.remove_node(x);
        step.deleted_nodes.push(x);
    }
    for &z in &zs {
        let outer = d.node_wires(z);
        if outer.len() != 1 {
            return mismatch("Z spider has unexpected extra legs");
        }
        replace_end(d, outer[0], WireEnd::Node(z), WireEnd::Node(v));
        d.remove_node(z);
        step.deleted_nodes.push(z);
    }
    let join = d.add_wire(WireEnd::Node(u), WireEnd::Node(v));
    step.created_nodes.extend([u, v]);
    step.created_wires.push(join);
    let k = (p as i32 - 1) * (q as i32 - 1);
    d.multiply_scalar(Complex64::new(1.0 / sqrt2_pow(k), 0.0));
    Ok(())
}

fn had_decomp_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let h = anchor_node(d, step)?;
    if d.node(h).map(|(t, _)| t) != Some(NodeType::H) {
        return mismatch("anchor must be an H node");
    }
    let ws = d.node_wires(h);
    if ws.len() != 2 || ws[0] == ws[1] {
        return mismatch("H node must have two distinct wires");
    }
    let quarter = Phase::new(1, 2);
    let s1 = d.add_node(NodeType::Z, quarter);
    let s2 = d.add_node(NodeType::X, quarter);
    let s3 = d.add_node(NodeType::Z, quarter);
    replace_end(d, ws[0], WireEnd::Node(h), WireEnd::Node(s1));
    replace_end(d, ws[1], WireEnd::Node(h), WireEnd::Node(s3));
    let w12 = d.add_wire(WireEnd::Node(s1), WireEnd::Node(s2));
    let w23 = d.add_wire(WireEnd::Node(s2), WireEnd::Node(s3));
    d.remove_node(h);
    step.created_nodes.extend([s1, s2, s3]);
    step.created_wires.extend([w12, w23]);
    step.deleted_nodes.push(h);
    d.multiply_scalar((-Phase::new(1, 4)).cis());
    Ok(())
}

fn had_decomp_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let [s1, s2, s3] = step.anchor_nodes.as_slice() else {
        return mismatch("HadDecomp reversal needs three anchor spiders");
    };
    let (s1, s2, s3) = (*s1, *s2, *s3);
    let distinct: BTreeSet<NodeId> = [s1, s2, s3].into_iter().collect();
    if distinct.len() != 3 {
        return mismatch("chain spiders must be distinct");
    }
    let quarter = Phase::new(1, 2);
    for s in [s1, s2, s3] {
        if !d.has_node(s) || !d.is_spider(s) || d.phase(s) != quarter || d.degree(s) != 2 {
            return mismatch("each chain spider must be degree 2 with phase pi/2");
        }
    }
    if d.node_type(s1) != d.node_type(s3) || d.node_type(s2) != d.node_type(s1).flip() {
        return mismatch("chain colours must alternate");
    }
    let find_join = |d: &Diagram, a: NodeId, b: NodeId| -> Option<WireId> {
        d.wires()
            .find(|&(_, x, y)| {
                (x == WireEnd::Node(a) && y == WireEnd::Node(b))
                    || (x == WireEnd::Node(b) && y == WireEnd::Node(a))
            })
            .map(|(w, _, _)| w)
    };
    let Some(w12) = find_join(d, s1, s2) else {
        return mismatch("chain spiders must be joined by plain wires");
    };
    let Some(w23) = find_join(d, s2, s3) else {
        return mismatch("chain spiders must be joined by plain wires");
    };
    let o1 = d.node_wires(s1).into_iter().find(|&w| w != w12).expect("degree 2");
    let o3 = d.node_wires(s3).into_iter().find(|&w| w != w23).expect("degree 2");
    let h = d.add_node(NodeType::H, Phase::ZERO);
    replace_end(d, o1, WireEnd::Node(s1), WireEnd::Node(h));
    replace_end(d, o3, WireEnd::Node(s3), WireEnd::Node(h));
    for w in [w12, w23] {
        d.remove_wire(w);
        step.deleted_wires.push(w);
    }
    for s in [s1, s2, s3] {
        d.remove_node(s);
        step.deleted_nodes.push(s);
    }
    step.created_nodes.push(h);
    d.multiply_scalar(Phase::new(1, 4).cis());
    Ok(())
}

fn identity_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let s = anchor_node(d, step)?;
    if !d.is_spider(s) || !d.phase(s).is_zero() {
        return mismatch("identity removal needs a phase-0 spider");
    }
    let ws = d.node_wires(s);
    if ws.len() != 2 || ws[0] == ws[1] {
        return mismatch("identity removal needs degree 2 without a self-loop");
    }
    let (w1, w2) = (ws[0], ws[1]);
    let far2 = d.far_end(w2, s).expect("wire attached");
    replace_end(d, w1, WireEnd::Node(s), far2);
    fix_slot(d, far2, w1);
    d.remove_wire(w2);
    d.remove_node(s);
    step.deleted_nodes.push(s);
    step.deleted_wires.push(w2);
    Ok(())
}

fn identity_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let w = anchor_wire(d, step)?;
    let t = step.node_type.unwrap_or(NodeType::Z);
    if t == NodeType::H {
        return mismatch("identity spider must be Z or X");
    }
    let (a, b) = d.wire(w).expect("anchor wire");
    let s = d.add_node(t, Phase::ZERO);
    d.set_wire_ends(w, a, WireEnd::Node(s));
    let w2 = d.add_wire(WireEnd::Node(s), b);
    fix_slot(d, b, w2);
    step.created_nodes.push(s);
    step.created_wires.push(w2);
    Ok(())
}

fn scalar_s1_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let s = anchor_node(d, step)?;
    if !d.is_spider(s) || d.degree(s) != 0 {
        return mismatch("scalar removal needs a zero-legged spider");
    }
    let phi = d.phase(s);
    d.remove_node(s);
    step.deleted_nodes.push(s);
    d.multiply_scalar(Complex64::new(1.0, 0.0) + phi.cis());
    Ok(())
}

fn scalar_s1_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let phi = step.phase.unwrap_or(Phase::ZERO);
    if phi.is_pauli() && !phi.is_zero() {
        return Err(RewriteError::NotPermitted(
            "cannot introduce a pi spider against the scalar zero".into(),
        ));
    }
    let t = step.node_type.unwrap_or(NodeType::Z);
    if t == NodeType::H {
        return mismatch("scalar spider must be Z or X");
    }
    let s = d.add_node(t, phi);
    step.created_nodes.push(s);
    d.multiply_scalar(Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + phi.cis()));
    Ok(())
}

/// Value of the one-legged dumbbell u(alpha) - v(k pi): sqrt2 * e^{i k alpha}.
fn dumbbell_scalar(alpha: Phase, pauli: Phase) -> Complex64 {
    let s = Complex64::new(std::f64::consts::SQRT_2, 0.0);
    if pauli.is_zero() {
        s
    } else {
        s * alpha.cis()
    }
}

fn scalar_s2_l2r(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let w = anchor_wire(d, step)?;
    let (a, b) = d.wire(w).expect("anchor wire");
    let (Some(u), Some(v)) = (node_end(a), node_end(b)) else {
        return mismatch("dumbbell wire must join two spiders");
    };
    if u == v
        || !d.is_spider(u)
        || !d.is_spider(v)
        || d.node_type(u) != d.node_type(v).flip()
        || d.degree(u) != 1
        || d.degree(v) != 1
    {
        return mismatch("dumbbell needs two opposite one-legged spiders");
    }
    let (pu, pv) = (d.phase(u), d.phase(v));
    let (alpha, pauli) = if pv.is_pauli() {
        (pu, pv)
    } else if pu.is_pauli() {
        (pv, pu)
    } else {
        return mismatch("one dumbbell phase must be a multiple of pi");
    };
    d.remove_wire(w);
    d.remove_node(u);
    d.remove_node(v);
    step.deleted_nodes.extend([u, v]);
    step.deleted_wires.push(w);
    d.multiply_scalar(dumbbell_scalar(alpha, pauli));
    Ok(())
}

fn scalar_s2_r2l(d: &mut Diagram, step: &mut RewriteStep) -> Result<(), RewriteError> {
    let alpha = step.phase.unwrap_or(Phase::ZERO);
    let pauli = step.phase2.unwrap_or(Phase::ZERO);
    if !pauli.is_pauli() {
        return mismatch("second dumbbell phase must be a multiple of pi");
    }
    let t = step.node_type.unwrap_or(NodeType::Z);
    if t == NodeType::H {
        return mismatch("dumbbell spiders must be Z or X");
    }
    let u = d.add_node(t, alpha);
    let v = d.add_node(t.flip(), pauli);
    let w = d.add_wire(WireEnd::Node(u), WireEnd::Node(v));
    step.created_nodes.extend([u, v]);
    step.created_wires.push(w);
    d.multiply_scalar(Complex64::new(1.0, 0.0) / dumbbell_scalar(alpha, pauli));
    Ok(())
}

// ---- flow transport ----

/// Pushes a step's renames/deletions/creations through an order hint: fused
/// spiders merge onto the survivor, vanished or Clifford entries drop, new
/// non-Clifford spiders slot in after the anchor (or at the end).
fn update_order(order: &mut Vec<NodeId>, post: &Diagram, step: &RewriteStep) {
    for &(from, to) in &step.renames {
        for o in order.iter_mut() {
            if *o == from {
                *o = to;
            }
        }
    }
    let mut seen = BTreeSet::new();
    order.retain(|&n| seen.insert(n));
    order.retain(|&n| post.has_node(n) && post.is_spider(n) && !post.phase(n).is_clifford());
    let present: BTreeSet<NodeId> = order.iter().copied().collect();
    let missing: Vec<NodeId> =
        post.non_clifford_spiders().into_iter().filter(|n| !present.contains(n)).collect();
    for m in missing {
        let pos = step
            .anchor_nodes
            .first()
            .and_then(|a| order.iter().position(|&n| n == *a));
        match pos {
            Some(i) => order.insert(i + 1, m),
            None => order.push(m),
        }
    }
}

/// Solves a plain ZX-flow on `d` against an order hint: the hint is filtered
/// to the current non-Clifford spiders (missing ones appended in id order),
/// each flow web is the least semiweb with a pi defect at its spider and no
/// defect at Clifford spiders or earlier spiders, and the logicals are the
/// least input-restricted semiwebs. Returns `None` if any web is missing or
/// the assembled flow fails verification.
fn resolve_plain_flow(d: &Diagram, order_hint: &[NodeId]) -> Option<ZXFlow> {
    let targets: BTreeSet<NodeId> = d.non_clifford_spiders().into_iter().collect();
    let mut order: Vec<NodeId> =
        order_hint.iter().copied().filter(|n| targets.contains(n)).collect();
    let mut seen = BTreeSet::new();
    order.retain(|&n| seen.insert(n));
    for &n in &targets {
        if !seen.contains(&n) {
            order.push(n);
        }
    }
    let clifford: Vec<NodeId> =
        d.spiders().into_iter().filter(|n| !targets.contains(n)).collect();

    let mut flows = BTreeMap::new();
    for (idx, &nu) in order.iter().enumerate() {
        let mut found = None;
        for pin_inputs in [true, false] {
            let mut cs = SemiwebConstraintSet::default();
            cs.node_conditions.insert(nu, NodeCondition::PiDefect);
            for &c in &clifford {
                cs.node_conditions.insert(c, NodeCondition::NoDefect);
            }
            for &earlier in &order[..idx] {
                cs.node_conditions.insert(earlier, NodeCondition::NoDefect);
            }
            if pin_inputs {
                for &w in d.inputs() {
                    cs.pins.insert(w, Letter::I);
                }
            }
            if let Some(w) = solve_constrained(d, &cs) {
                found = Some(w);
                break;
            }
        }
        flows.insert(nu, found?);
    }

    let mut logicals = Vec::new();
    for i in 0..d.inputs().len() {
        let mut pair = Vec::new();
        for target in [Letter::Z, Letter::X] {
            let mut cs = SemiwebConstraintSet::default();
            for (j, &w) in d.inputs().iter().enumerate() {
                cs.pins.insert(w, if i == j { target } else { Letter::I });
            }
            for &c in &clifford {
                cs.node_conditions.insert(c, NodeCondition::NoDefect);
            }
            pair.push(solve_constrained(d, &cs)?);
        }
        let lx = pair.pop().expect("two webs");
        let lz = pair.pop().expect("two webs");
        logicals.push((lz, lx));
    }

    let f = ZXFlow { strength: Strength::Plain, order, logicals, flows };
    verify_zx_flow(d, &f).0.then_some(f)
}

/// Transports a plain flow across an applied step by re-solving all webs on
/// the post-diagram against the pushed-through order, falling back to a
/// fresh flow search when the pushed order admits no solution.
pub fn transport_flow(
    pre: &Diagram,
    post: &Diagram,
    step: &RewriteStep,
    f: &ZXFlow,
) -> Result<ZXFlow, RewriteError> {
    if f.strength != Strength::Plain {
        return Err(RewriteError::NotPermitted("transport is defined for plain flows".into()));
    }
    let (ok, v) = verify_zx_flow(pre, f);
    if !ok {
        return Err(RewriteError::NotPermitted(format!(
            "pre-flow fails verification: {}",
            v.first().map(|x| x.message.as_str()).unwrap_or("")
        )));
    }
    let mut order = f.order.clone();
    update_order(&mut order, post, step);
    if let Some(f2) = resolve_plain_flow(post, &order) {
        return Ok(f2);
    }
    find_zx_flow(post).ok_or_else(|| {
        RewriteError::Transport("no flow on the post-diagram (internal error)".into())
    })
}

// ---- rewrite context: diagram + order hint + trace ----

struct Ctx {
    d: Diagram,
    order: Vec<NodeId>,
    trace: Vec<TraceEntry>,
}

impl Ctx {
    fn new(d: Diagram, order: Vec<NodeId>) -> Ctx {
        Ctx { d, order, trace: Vec::new() }
    }

    fn rule(&mut self, mut step: RewriteStep) -> Result<(), RewriteError> {
        let post = apply(&self.d, &mut step)?;
        update_order(&mut self.order, &post, &step);
        self.d = post;
        self.trace.push(TraceEntry::Rule(step));
        Ok(())
    }

    fn log_macro(&mut self, name: &str, nodes: Vec<NodeId>, wires: Vec<WireId>) {
        self.trace.push(TraceEntry::Macro { name: name.into(), nodes, wires });
    }

    // -- derived macros (each oracle-verified in the tests below) --

    /// H self-loop on a spider: drop it, add pi, multiply by 1/sqrt2.
    fn h_self_loop(&mut self, h: NodeId, w1: WireId, w2: WireId, u: NodeId) {
        self.d.remove_wire(w1);
        self.d.remove_wire(w2);
        self.d.remove_node(h);
        let p = self.d.phase(u);
        self.d.set_phase(u, p + Phase::PI);
        self.d.multiply_scalar(Complex64::new(1.0 / std::f64::consts::SQRT_2, 0.0));
        self.log_macro("h-self-loop", vec![h, u], vec![w1, w2]);
    }

    /// Two parallel H-edges between the same spiders cancel, factor 1/2.
    fn h_parallel(&mut self, h1: NodeId, h2: NodeId) {
        for h in [h1, h2] {
            for w in self.d.node_wires(h) {
                self.d.remove_wire(w);
            }
            self.d.remove_node(h);
        }
        self.d.multiply_scalar(Complex64::new(0.5, 0.0));
        self.log_macro("h-parallel", vec![h1, h2], vec![]);
    }

    /// A plain self-loop on a spider is trivial.
    fn plain_self_loop(&mut self, w: WireId, u: NodeId) {
        self.d.remove_wire(w);
        self.log_macro("plain-self-loop", vec![u], vec![w]);
    }

    /// A self-loop wire on an H node is the trace of H: the scalar zero.
    fn h_trace(&mut self, h: NodeId, w: WireId) {
        self.d.remove_wire(w);
        self.d.remove_node(h);
        self.d.multiply_scalar(Complex64::new(0.0, 0.0));
        self.log_macro("h-trace", vec![h], vec![w]);
    }

    /// Two H nodes joined by both wires: a closed H-H cycle of value 2.
    fn hh_cycle(&mut self, h1: NodeId, h2: NodeId, w1: WireId, w2: WireId) {
        self.d.remove_wire(w1);
        self.d.remove_wire(w2);
        self.d.remove_node(h1);
        self.d.remove_node(h2);
        self.d.multiply_scalar(Complex64::new(2.0, 0.0));
        self.log_macro("hh-cycle", vec![h1, h2], vec![w1, w2]);
    }

    /// Splices out an adjacent H-H pair (H then H is the identity).
    fn hh_splice(&mut self, w: WireId, h1: NodeId, h2: NodeId) {
        let o1 = other_wire_of_h(&self.d, h1, w);
        let o2 = other_wire_of_h(&self.d, h2, w);
        assert_ne!(o1, o2, "double H-H link is a cycle (internal error)");
        let y = self
            .d
            .far_end(o2, h2)
            .expect("outer wire has a far end");
        replace_end(&mut self.d, o1, WireEnd::Node(h1), y);
        fix_slot(&mut self.d, y, o1);
        self.d.remove_wire(w);
        self.d.remove_wire(o2);
        self.d.remove_node(h1);
        self.d.remove_node(h2);
        self.log_macro("hh-splice", vec![h1, h2], vec![w, o2]);
    }

    /// Splits a boundary slot off a spider carrying several: the slot wire
    /// is re-routed through Z(0) - H - Z(0) - H, an exact identity chain.
    fn io_split(&mut self, w: WireId, n: NodeId) {
        let s1 = self.d.add_node(NodeType::Z, Phase::ZERO);
        let h1 = self.d.add_node(NodeType::H, Phase::ZERO);
        let s2 = self.d.add_node(NodeType::Z, Phase::ZERO);
        let h2 = self.d.add_node(NodeType::H, Phase::ZERO);
        replace_end(&mut self.d, w, WireEnd::Node(n), WireEnd::Node(s1));
        self.d.add_wire(WireEnd::Node(s1), WireEnd::Node(h1));
        self.d.add_wire(WireEnd::Node(h1), WireEnd::Node(s2));
        self.d.add_wire(WireEnd::Node(s2), WireEnd::Node(h2));
        self.d.add_wire(WireEnd::Node(h2), WireEnd::Node(n));
        self.log_macro("io-split", vec![n, s1, s2], vec![w]);
    }

    /// Local complementation at an interior proper spider with phase ±pi/2:
    /// complement its neighbourhood, shift the neighbours, drop the spider.
    fn lcomp(&mut self, u: NodeId) {
        let eps = self.d.phase(u);
        assert!(eps.is_odd_half(), "local complementation needs phase ±pi/2");
        let nb = h_neighbours(&self.d, u);
        assert_eq!(
            nb.len(),
            self.d.degree(u),
            "local complementation needs all legs on proper H-edges"
        );
        let vs: Vec<NodeId> = nb.iter().map(|&(v, _, _, _)| v).collect();
        let n = vs.len() as i32;
        let mut e0 = 0i32;
        let mut pairs = Vec::new();
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                if hedge_between(&self.d, vs[i], vs[j]).is_some() {
                    e0 += 1;
                }
                pairs.push((vs[i], vs[j]));
            }
        }
        for (a, b) in pairs {
            toggle_hedge(&mut self.d, a, b);
        }
        for &v in &vs {
            let p = self.d.phase(v);
            self.d.set_phase(v, p - eps);
        }
        for &(_, h, wu, wv) in &nb {
            self.d.remove_wire(wu);
            self.d.remove_wire(wv);
            self.d.remove_node(h);
        }
        self.d.remove_node(u);
        let mag = sqrt2_pow((n - 1) * (n - 2) / 2 - 2 * e0);
        let arg = if eps == Phase::new(1, 2) { Phase::new(1, 4) } else { -Phase::new(1, 4) };
        self.d.multiply_scalar(Complex64::new(mag, 0.0) * arg.cis());
        self.log_macro("lcomp", vec![u], vec![]);
    }

    /// Pivot along the H-edge of two adjacent interior Pauli spiders:
    /// complement between the three neighbour classes, shift phases, drop
    /// both spiders.
    fn pivot(&mut self, u: NodeId, v: NodeId) {
        let pu = self.d.phase(u);
        let pv = self.d.phase(v);
        assert!(pu.is_pauli() && pv.is_pauli(), "pivot needs Pauli phases");
        let nb_u = h_neighbours(&self.d, u);
        let nb_v = h_neighbours(&self.d, v);
        assert_eq!(nb_u.len(), self.d.degree(u), "pivot spider has a non-H-edge leg");
        assert_eq!(nb_v.len(), self.d.degree(v), "pivot spider has a non-H-edge leg");
        let su: BTreeSet<NodeId> =
            nb_u.iter().map(|&(x, _, _, _)| x).filter(|&x| x != v).collect();
        let sv: BTreeSet<NodeId> =
            nb_v.iter().map(|&(x, _, _, _)| x).filter(|&x| x != u).collect();
        assert!(
            hedge_between(&self.d, u, v).is_some(),
            "pivot spiders must be H-adjacent (internal error)"
        );
        let c: Vec<NodeId> = su.intersection(&sv).copied().collect();
        let a: Vec<NodeId> = su.difference(&sv).copied().collect();
        let b: Vec<NodeId> = sv.difference(&su).copied().collect();
        let mut pairs = Vec::new();
        for &x in &a {
            for &y in &b {
                pairs.push((x, y));
            }
        }
        for &x in &a {
            for &y in &c {
                pairs.push((x, y));
            }
        }
        for &x in &b {
            for &y in &c {
                pairs.push((x, y));
            }
        }
        let e0 = pairs
            .iter()
            .filter(|&&(x, y)| hedge_between(&self.d, x, y).is_some())
            .count() as i32;
        for &(x, y) in &pairs {
            toggle_hedge(&mut self.d, x, y);
        }
        for &x in &a {
            let p = self.d.phase(x);
            self.d.set_phase(x, p + pv);
        }
        for &x in &b {
            let p = self.d.phase(x);
            self.d.set_phase(x, p + pu);
        }
        for &x in &c {
            let p = self.d.phase(x);
            self.d.set_phase(x, p + pu + pv + Phase::PI);
        }
        for s in [u, v] {
            for (x, h, wn, wf) in h_neighbours(&self.d, s) {
                let _ = x;
                self.d.remove_wire(wn);
                self.d.remove_wire(wf);
                self.d.remove_node(h);
            }
        }
        self.d.remove_node(u);
        self.d.remove_node(v);
        let e1 = pairs.len() as i32 - e0;
        let k = 1 - (a.len() as i32 + b.len() as i32) - 2 * c.len() as i32 + (e1 - e0);
        let sign = if pu == Phase::PI && pv == Phase::PI { -1.0 } else { 1.0 };
        self.d.multiply_scalar(Complex64::new(sign * sqrt2_pow(k), 0.0));
        self.log_macro("pivot", vec![u, v], vec![]);
    }

    /// Turns a non-Clifford spider into a phase gadget: the phase moves to a
    /// fresh one-legged leaf behind a fresh phase-0 root.
    fn gadgetize(&mut self, v: NodeId) -> (NodeId, NodeId) {
        let alpha = self.d.phase(v);
        self.d.set_phase(v, Phase::ZERO);
        let root = self.d.add_node(NodeType::Z, Phase::ZERO);
        let leaf = self.d.add_node(NodeType::Z, alpha);
        add_hedge(&mut self.d, v, root);
        add_hedge(&mut self.d, root, leaf);
        for o in self.order.iter_mut() {
            if *o == v {
                *o = leaf;
            }
        }
        self.log_macro("gadgetize", vec![v, root, leaf], vec![]);
        (root, leaf)
    }

    /// Detaches a boundary spider from its slot wire so it becomes interior:
    /// a plain slot wire gains an H - Z(0) - H chain; a slot wire already
    /// carrying an H instead gains an identity spider between slot and H.
    fn interiorize(&mut self, v: NodeId) -> Result<(), RewriteError> {
        loop {
            let slots: Vec<WireId> =
                self.d.inputs().iter().chain(self.d.outputs().iter()).copied().collect();
            let mut acted = false;
            for w in slots {
                let (a, b) = self.d.wire(w).expect("slot wire");
                let n = node_end(a).or(node_end(b));
                match n {
                    Some(x) if x == v => {
                        // plain slot wire: insert H - Z(0) - H before v
                        let h1 = self.d.add_node(NodeType::H, Phase::ZERO);
                        let m = self.d.add_node(NodeType::Z, Phase::ZERO);
                        let h2 = self.d.add_node(NodeType::H, Phase::ZERO);
                        replace_end(&mut self.d, w, WireEnd::Node(v), WireEnd::Node(h1));
                        self.d.add_wire(WireEnd::Node(h1), WireEnd::Node(m));
                        self.d.add_wire(WireEnd::Node(m), WireEnd::Node(h2));
                        self.d.add_wire(WireEnd::Node(h2), WireEnd::Node(v));
                        self.log_macro("interiorize", vec![v, m], vec![w]);
                        acted = true;
                        break;
                    }
                    Some(h)
                        if self.d.node(h).map(|(t, _)| t) == Some(NodeType::H)
                            && self
                                .d
                                .far_end(other_wire_of_h(&self.d, h, w), h)
                                == Some(WireEnd::Node(v)) =>
                    {
                        // slot - H - v: an identity between slot and H makes
                        // the H a proper edge and v interior
                        let mut step = RewriteStep::new(RuleId::Identity, Direction::R2L);
                        step.anchor_wires = vec![w];
                        self.rule(step)?;
                        acted = true;
                        break;
                    }
                    _ => {}
                }
            }
            if !acted {
                return Ok(());
            }
        }
    }
}

// ---- graph-like normalization ----

enum GlFix {
    Colour(NodeId),
    HTrace(NodeId, WireId),
    HHCycle(NodeId, NodeId, WireId, WireId),
    HHSplice(WireId, NodeId, NodeId),
    PlainSelfLoop(WireId, NodeId),
    FuseWire(WireId, NodeId, NodeId),
    HSelfLoop(NodeId, WireId, WireId, NodeId),
    HParallel(NodeId, NodeId),
    BoundaryH(WireId),
    BareBoundary(WireId),
    IoSplit(WireId, NodeId),
}

fn next_gl_fix(d: &Diagram) -> Option<GlFix> {
    // 1. colour
    for (n, t, _) in d.nodes() {
        if t == NodeType::X {
            return Some(GlFix::Colour(n));
        }
    }
    // 2. H anomalies: self-loop wires and H-H adjacency
    for (h, t, _) in d.nodes() {
        if t != NodeType::H {
            continue;
        }
        let ws = d.node_wires(h);
        assert_eq!(ws.len(), 2, "H node {h} must have two wire-ends");
        if ws[0] == ws[1] {
            return Some(GlFix::HTrace(h, ws[0]));
        }
        for &w in &[ws[0], ws[1]] {
            if let Some(WireEnd::Node(h2)) = d.far_end(w, h) {
                if d.node(h2).map(|(t, _)| t) == Some(NodeType::H) && h2 != h {
                    let other = if w == ws[0] { ws[1] } else { ws[0] };
                    if d.far_end(other, h) == Some(WireEnd::Node(h2)) {
                        return Some(GlFix::HHCycle(h, h2, ws[0], ws[1]));
                    }
                    return Some(GlFix::HHSplice(w, h.min(h2), h.max(h2)));
                }
            }
        }
    }
    // 3. plain wires between spiders
    for (w, a, b) in d.wires() {
        if let (Some(u), Some(v)) = (node_end(a), node_end(b)) {
            if d.is_spider(u) && d.is_spider(v) {
                if u == v {
                    return Some(GlFix::PlainSelfLoop(w, u));
                }
                return Some(GlFix::FuseWire(w, u, v));
            }
        }
    }
    // 4. H-edge self-loops and parallel H-edges
    let mut pair_h: BTreeMap<(NodeId, NodeId), NodeId> = BTreeMap::new();
    for e in d.edges() {
        if let Edge::HEdge(a, h, b) = e {
            let fa = d.far_end(a, h).and_then(node_end);
            let fb = d.far_end(b, h).and_then(node_end);
            if let (Some(u), Some(v)) = (fa, fb) {
                if u == v {
                    return Some(GlFix::HSelfLoop(h, a, b, u));
                }
                let key = (u.min(v), u.max(v));
                if let Some(&h1) = pair_h.get(&key) {
                    return Some(GlFix::HParallel(h1, h));
                }
                pair_h.insert(key, h);
            }
        }
    }
    // 5. boundary wires: attached to an H node, or slot-to-slot
    for &w in d.inputs().iter().chain(d.outputs().iter()) {
        let (a, b) = d.wire(w).expect("slot wire");
        match (node_end(a), node_end(b)) {
            (None, None) => return Some(GlFix::BareBoundary(w)),
            (n1, n2) => {
                let n = n1.or(n2).expect("one node end");
                if d.node(n).map(|(t, _)| t) == Some(NodeType::H) {
                    return Some(GlFix::BoundaryH(w));
                }
            }
        }
    }
    // 6. spiders with several input or output wires
    for n in d.spiders() {
        let legs = d.node_wires(n);
        for list in [d.inputs(), d.outputs()] {
            let touching: Vec<WireId> =
                list.iter().copied().filter(|w| legs.contains(w)).collect();
            if touching.len() > 1 {
                return Some(GlFix::IoSplit(touching[1], n));
            }
        }
    }
    None
}

impl Ctx {
    fn run_gl_loop(&mut self) -> Result<(), RewriteError> {
        let cap = 100 * (self.d.num_nodes() + self.d.num_wires()) + 1000;
        let mut iters = 0usize;
        while let Some(fix) = next_gl_fix(&self.d) {
            match fix {
                GlFix::Colour(u) => {
                    let mut step = RewriteStep::new(RuleId::ColourChange, Direction::L2R);
                    step.anchor_nodes = vec![u];
                    self.rule(step)?;
                }
                GlFix::HTrace(h, w) => self.h_trace(h, w),
                GlFix::HHCycle(h1, h2, w1, w2) => self.hh_cycle(h1, h2, w1, w2),
                GlFix::HHSplice(w, h1, h2) => self.hh_splice(w, h1, h2),
                GlFix::PlainSelfLoop(w, u) => self.plain_self_loop(w, u),
                GlFix::FuseWire(w, u, v) => {
                    let full = !self.d.phase(u).is_clifford() && !self.d.phase(v).is_clifford();
                    let rule = if full { RuleId::FuseFull } else { RuleId::Fuse };
                    let mut step = RewriteStep::new(rule, Direction::L2R);
                    step.anchor_wires = vec![w];
                    self.rule(step)?;
                }
                GlFix::HSelfLoop(h, w1, w2, u) => self.h_self_loop(h, w1, w2, u),
                GlFix::HParallel(h1, h2) => self.h_parallel(h1, h2),
                GlFix::BoundaryH(w) | GlFix::BareBoundary(w) => {
                    let mut step = RewriteStep::new(RuleId::Identity, Direction::R2L);
                    step.anchor_wires = vec![w];
                    self.rule(step)?;
                }
                GlFix::IoSplit(w, n) => self.io_split(w, n),
            }
            iters += 1;
            assert!(iters <= cap, "graph-like normalization did not terminate (internal error)");
        }
        Ok(())
    }
}

/// Rewrites a diagram into graph-like form, transporting the plain flow.
/// The trace lists every primitive step and derived macro applied.
pub fn make_graph_like(
    d: &Diagram,
    f: &ZXFlow,
) -> Result<(Diagram, ZXFlow, Vec<TraceEntry>), RewriteError> {
    let f = require_plain(d, f)?;
    let mut ctx = Ctx::new(d.clone(), f.order.clone());
    ctx.run_gl_loop()?;
    debug_assert!(ctx.d.is_graph_like());
    let f2 = resolve_plain_flow(&ctx.d, &ctx.order)
        .or_else(|| find_zx_flow(&ctx.d))
        .ok_or_else(|| {
            RewriteError::Transport("no flow on the graph-like diagram (internal error)".into())
        })?;
    Ok((ctx.d, f2, ctx.trace))
}

fn require_plain<'a>(d: &Diagram, f: &'a ZXFlow) -> Result<&'a ZXFlow, RewriteError> {
    if f.strength != Strength::Plain {
        return Err(RewriteError::NotPermitted("expected a plain flow".into()));
    }
    let (ok, v) = verify_zx_flow(d, f);
    if !ok {
        return Err(RewriteError::NotPermitted(format!(
            "flow fails verification: {}",
            v.first().map(|x| x.message.as_str()).unwrap_or("")
        )));
    }
    Ok(f)
}

// ---- skeleton reduction ----

/// Spiders adjacent to a boundary slot, directly or through the single H of
/// a boundary chain.
fn boundary_like(d: &Diagram) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for &w in d.inputs().iter().chain(d.outputs().iter()) {
        let Some((a, b)) = d.wire(w) else { continue };
        let Some(n) = node_end(a).or(node_end(b)) else { continue };
        if d.is_spider(n) {
            out.insert(n);
        } else if d.node(n).map(|(t, _)| t) == Some(NodeType::H) {
            let w2 = other_wire_of_h(d, n, w);
            if let Some(WireEnd::Node(v)) = d.far_end(w2, n) {
                if d.is_spider(v) {
                    out.insert(v);
                }
            }
        }
    }
    out
}

/// Interior Clifford spiders H-connected to a one-legged non-Clifford leaf:
/// the roots of phase gadgets, exempt from skeleton reduction.
fn gadget_roots(d: &Diagram, boundary: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for n in d.spiders() {
        if boundary.contains(&n) || !d.phase(n).is_clifford() {
            continue;
        }
        let leafy = h_neighbours(d, n)
            .into_iter()
            .any(|(v, _, _, _)| d.degree(v) == 1 && !d.phase(v).is_clifford());
        if leafy {
            out.insert(n);
        }
    }
    out
}

/// The one-legged non-Clifford partner of a gadget root (lowest id).
fn gadget_partner(d: &Diagram, root: NodeId) -> Option<NodeId> {
    h_neighbours(d, root)
        .into_iter()
        .map(|(v, _, _, _)| v)
        .find(|&v| d.degree(v) == 1 && !d.phase(v).is_clifford())
}

impl Ctx {
    /// Eliminates interior Clifford spiders that are not gadget roots:
    /// local complementation for ±pi/2 phases, pivoting for Pauli phases
    /// (gadgetizing or interiorizing a neighbour first when necessary).
    fn run_reduction(&mut self) -> Result<(), RewriteError> {
        let cap = 60 * (self.d.num_nodes() + self.d.num_wires()) + 200;
        let mut iters = 0usize;
        loop {
            let boundary = boundary_like(&self.d);
            let roots = gadget_roots(&self.d, &boundary);
            let cand = self.d.spiders().into_iter().find(|&s| {
                self.d.phase(s).is_clifford()
                    && !boundary.contains(&s)
                    && !roots.contains(&s)
            });
            let Some(u) = cand else { break };
            iters += 1;
            assert!(iters <= cap, "skeleton reduction did not terminate (internal error)");
            if self.d.degree(u) == 0 {
                let mut step = RewriteStep::new(RuleId::ScalarS1, Direction::L2R);
                step.anchor_nodes = vec![u];
                self.rule(step)?;
                continue;
            }
            let pu = self.d.phase(u);
            if pu.is_odd_half() {
                self.lcomp(u);
                continue;
            }
            // u is an interior Pauli spider: find a partner among its
            // H-neighbours, preferring interior Clifford ones
            let nb: Vec<NodeId> =
                h_neighbours(&self.d, u).into_iter().map(|(v, _, _, _)| v).collect();
            let interior = |v: &NodeId| !boundary.contains(v) && !roots.contains(v);
            if let Some(&v) =
                nb.iter().find(|v| interior(v) && self.d.phase(**v).is_pauli())
            {
                self.pivot(u, v);
            } else if let Some(&v) =
                nb.iter().find(|v| interior(v) && self.d.phase(**v).is_odd_half())
            {
                self.lcomp(v);
            } else if let Some(&v) =
                nb.iter().find(|v| roots.contains(v) && self.d.phase(**v).is_pauli())
            {
                self.pivot(u, v);
            } else if let Some(&v) =
                nb.iter().find(|v| roots.contains(v) && self.d.phase(**v).is_odd_half())
            {
                self.lcomp(v);
            } else if let Some(&v) = nb.iter().find(|v| interior(v)) {
                // interior non-Clifford neighbour: gadgetize, then pivot
                assert!(self.d.degree(v) > 1, "leaf neighbour of a non-root (internal error)");
                self.gadgetize(v);
                self.pivot(u, v);
            } else if let Some(&v) = nb.iter().find(|v| boundary.contains(v)) {
                self.interiorize(v)?;
                let pv = self.d.phase(v);
                if pv.is_pauli() {
                    self.pivot(u, v);
                } else if pv.is_odd_half() {
                    self.lcomp(v);
                } else {
                    self.gadgetize(v);
                    self.pivot(u, v);
                }
            } else {
                unreachable!("interior Pauli spider with no reducible neighbour");
            }
        }
        Ok(())
    }

    /// Inserts identity spiders on boundary wires that carry an H, making
    /// the diagram strictly graph-like again.
    fn strictify_boundary(&mut self) -> Result<(), RewriteError> {
        loop {
            let slot = self
                .d
                .inputs()
                .iter()
                .chain(self.d.outputs().iter())
                .copied()
                .find(|&w| {
                    let (a, b) = self.d.wire(w).expect("slot wire");
                    matches!(
                        node_end(a).or(node_end(b)),
                        Some(n) if self.d.node(n).map(|(t, _)| t) == Some(NodeType::H)
                    )
                });
            let Some(w) = slot else { return Ok(()) };
            let mut step = RewriteStep::new(RuleId::Identity, Direction::R2L);
            step.anchor_wires = vec![w];
            self.rule(step)?;
        }
    }
}

/// Skeleton-form check: interior Clifford spiders must be gadget roots or
/// the partners of a degree-2 boundary identity (the unavoidable residue of
/// a Hadamard on a boundary wire).
pub fn skeleton_violations(d: &Diagram) -> Vec<Violation> {
    let mut v = d.graph_like_violations();
    let boundary = boundary_like(d);
    let roots = gadget_roots(d, &boundary);
    for n in d.spiders() {
        if boundary.contains(&n) || roots.contains(&n) || !d.phase(n).is_clifford() {
            continue;
        }
        let chained = h_neighbours(d, n).into_iter().any(|(s, _, _, _)| {
            boundary.contains(&s) && d.degree(s) == 2 && d.phase(s).is_zero()
        });
        if !chained {
            v.push(Violation::new(
                "sk-interior-clifford",
                format!("interior Clifford spider {n} is neither a gadget root nor a boundary-chain partner"),
            ));
        }
    }
    v
}

// ---- strong flow construction ----

fn slot_spider(d: &Diagram, w: WireId) -> NodeId {
    let (a, b) = d.wire(w).expect("slot wire");
    node_end(a).or(node_end(b)).filter(|&n| d.is_spider(n)).expect("slot wire ends on a spider")
}

/// The boundary-chain partner of a degree-2 boundary identity `s`: the
/// spider behind its single H-edge, with the three chain wires.
fn chain_partner(d: &Diagram, s: NodeId, slot_wire: WireId) -> Option<(NodeId, WireId, WireId)> {
    if d.degree(s) != 2 || !d.phase(s).is_zero() {
        return None;
    }
    h_neighbours(d, s)
        .into_iter()
        .next()
        .filter(|&(_, _, wn, _)| wn != slot_wire)
        .map(|(w, _, wn, wf)| (w, wn, wf))
}

/// Upgrades a plain flow on a skeleton diagram to a strong flow: Clifford
/// boundary spiders get (logical x) edge semiwebs, boundary-chain partners
/// get the chain-extended webs, gadget roots go directly before their
/// partner with the partner's basic semiweb.
fn build_strong(d: &Diagram, plain: &ZXFlow) -> Result<ZXFlow, RewriteError> {
    let boundary = boundary_like(d);
    let roots = gadget_roots(d, &boundary);
    let mut webs: BTreeMap<NodeId, PauliSupport> = plain.flows.clone();
    let err = |m: String| RewriteError::Transport(m);

    // output group: edge semiwebs, placed maximal
    let mut out_group: Vec<NodeId> = Vec::new();
    for &wk in d.outputs() {
        let s = slot_spider(d, wk);
        let mut group = Vec::new();
        if let Some((w, wn, wf)) = chain_partner(d, s, wk) {
            if !webs.contains_key(&w) && d.phase(w).is_clifford() && !roots.contains(&w) {
                let mut cw = PauliSupport::new();
                cw.set_letter(wk, Letter::X);
                cw.set_letter(wn, Letter::X);
                cw.set_letter(wf, Letter::Z);
                webs.insert(w, cw);
                group.push(w);
            }
        }
        if !webs.contains_key(&s) {
            let edge = d.edge_of(wk).expect("slot wire is an edge");
            let web = edge_semiweb(d, &edge, Letter::Z).map_err(|e| err(e.to_string()))?;
            webs.insert(s, web);
            group.push(s);
        }
        out_group.extend(group);
    }

    // input group: logicals times edge/chain semiwebs, placed minimal
    let mut in_group: Vec<NodeId> = Vec::new();
    for (i, &wi) in d.inputs().iter().enumerate() {
        let s = slot_spider(d, wi);
        if !webs.contains_key(&s) {
            let edge = d.edge_of(wi).expect("slot wire is an edge");
            let ew = edge_semiweb(d, &edge, Letter::Z).map_err(|e| err(e.to_string()))?;
            webs.insert(s, plain.logicals[i].0.product(&ew));
            in_group.push(s);
        }
        if let Some((w, wn, wf)) = chain_partner(d, s, wi) {
            if !webs.contains_key(&w) && d.phase(w).is_clifford() && !roots.contains(&w) {
                let mut cw = PauliSupport::new();
                cw.set_letter(wi, Letter::X);
                cw.set_letter(wn, Letter::X);
                cw.set_letter(wf, Letter::Z);
                webs.insert(w, plain.logicals[i].1.product(&cw));
                in_group.push(w);
            }
        }
    }

    // measured segment: gadget roots directly before their partners
    let mut mid: Vec<NodeId> = Vec::new();
    for &nu in &plain.order {
        for &r in &roots {
            if !webs.contains_key(&r) && gadget_partner(d, r) == Some(nu) {
                webs.insert(r, basic_semiweb(d, nu));
                mid.push(r);
            }
        }
        mid.push(nu);
    }

    let order: Vec<NodeId> =
        in_group.into_iter().chain(mid).chain(out_group).collect();
    let covered: BTreeSet<NodeId> = order.iter().copied().collect();
    let spiders: BTreeSet<NodeId> = d.spiders().into_iter().collect();
    if covered != spiders || covered.len() != order.len() {
        return Err(err("strong order does not cover the spiders exactly once".into()));
    }
    let f = ZXFlow {
        strength: Strength::Strong,
        order,
        logicals: plain.logicals.clone(),
        flows: webs,
    };
    let (ok, v) = verify_zx_flow(d, &f);
    if !ok {
        return Err(err(format!(
            "constructed strong flow fails verification: {}",
            v.first().map(|x| x.message.as_str()).unwrap_or("")
        )));
    }
    Ok(f)
}

/// Reduces a diagram to its phase-gadget skeleton and upgrades the flow to
/// a strong one: graph-like, with every interior Clifford spider either a
/// gadget root or the partner of a boundary identity chain (the latter are
/// unavoidable exactly when a boundary wire carries a Hadamard; a plain
/// one-qubit |1> preparation already requires one).
pub fn skeletonize(
    d: &Diagram,
    f: &ZXFlow,
) -> Result<(Diagram, ZXFlow, Vec<TraceEntry>), RewriteError> {
    let f = require_plain(d, f)?;
    let mut ctx = Ctx::new(d.clone(), f.order.clone());
    ctx.run_gl_loop()?;
    ctx.run_reduction()?;
    ctx.strictify_boundary()?;
    assert!(ctx.d.is_graph_like(), "skeleton is not graph-like (internal error)");
    let plain = resolve_plain_flow(&ctx.d, &ctx.order)
        .or_else(|| find_zx_flow(&ctx.d))
        .ok_or_else(|| {
            RewriteError::Transport("no flow on the skeleton diagram (internal error)".into())
        })?;
    let strong = build_strong(&ctx.d, &plain)?;
    Ok((ctx.d, strong, ctx.trace))
}
