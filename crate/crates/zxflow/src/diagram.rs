//! Combinatorial ZX-diagrams: spiders and H-gates joined by wires whose two
//! ends attach to nodes or to ordered input/output boundary slots. Exact
//! rational phases, edge/graph-like analysis, and the open-graph projection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::Phase;

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WireId(pub u32);

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Debug for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum NodeType {
    Z,
    X,
    H,
}

impl NodeType {
    /// The opposite spider colour; H is its own opposite.
    pub fn flip(self) -> NodeType {
        match self {
            NodeType::Z => NodeType::X,
            NodeType::X => NodeType::Z,
            NodeType::H => NodeType::H,
        }
    }
}

/// One end of a wire: attached to a node, or occupying a boundary slot.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum WireEnd {
    Node(NodeId),
    Input(usize),
    Output(usize),
}

/// Measurement label of a non-output spider, read off its phase.
#[derive(Copy, Clone, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum MeasLabel {
    X,
    Y,
    XY,
}

/// Edge in the sense of spider adjacency: a bare wire, or a pair of wires
/// through an H node.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Edge {
    Plain(WireId),
    HEdge(WireId, NodeId, WireId),
}

impl Edge {
    pub fn wires(&self) -> Vec<WireId> {
        match self {
            Edge::Plain(w) => vec![*w],
            Edge::HEdge(a, _, b) => vec![*a, *b],
        }
    }
}

/// A diagram invariant violation, named by a short code.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(code: &'static str, message: impl Into<String>) -> Violation {
        Violation { code, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

#[derive(Error, Debug)]
pub enum DiagramError {
    #[error("diagram is not valid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("diagram is not graph-like: {0:?}")]
    NotGraphLike(Vec<Violation>),
    #[error("JSON error: {0}")]
    Json(String),
}

/// Open graph underlying a graph-like diagram: Z-spiders as vertices,
/// H-edges as edges, boundary spiders as inputs/outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenGraph {
    pub vertices: BTreeSet<NodeId>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    pub labels: BTreeMap<NodeId, MeasLabel>,
    pub angles: BTreeMap<NodeId, Phase>,
}

impl OpenGraph {
    pub fn neighbours(&self, v: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for &(a, b) in &self.edges {
            if a == v {
                out.insert(b);
            } else if b == v {
                out.insert(a);
            }
        }
        out
    }

    /// Vertices adjacent to an odd number of members of `s`.
    pub fn odd_neighbourhood(&self, s: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut count: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &v in s {
            for u in self.neighbours(v) {
                *count.entry(u).or_insert(0) += 1;
            }
        }
        count.into_iter().filter(|&(_, c)| c % 2 == 1).map(|(u, _)| u).collect()
    }
}

/// A combinatorial ZX-diagram. Node and wire ids are stable: deletion never
/// renumbers, so flow data can reference nodes across rewrites.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagram {
    nodes: BTreeMap<NodeId, (NodeType, Phase)>,
    wires: BTreeMap<WireId, (WireEnd, WireEnd)>,
    inputs: Vec<WireId>,
    outputs: Vec<WireId>,
    scalar: Complex64,
    next_node: u32,
    next_wire: u32,
}

impl Default for Diagram {
    fn default() -> Self {
        Diagram::new()
    }
}

impl Diagram {
    pub fn new() -> Diagram {
        Diagram {
            nodes: BTreeMap::new(),
            wires: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            scalar: Complex64::new(1.0, 0.0),
            next_node: 0,
            next_wire: 0,
        }
    }

    // ---- construction & mutation ----

    pub fn add_node(&mut self, t: NodeType, phase: Phase) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        self.nodes.insert(id, (t, phase));
        id
    }

    pub fn add_wire(&mut self, a: WireEnd, b: WireEnd) -> WireId {
        let id = WireId(self.next_wire);
        self.next_wire += 1;
        self.wires.insert(id, (a, b));
        id
    }

    /// Adds a wire occupying the next input slot, attached to `end`.
    pub fn add_input(&mut self, end: WireEnd) -> WireId {
        let slot = self.inputs.len();
        let w = self.add_wire(WireEnd::Input(slot), end);
        self.inputs.push(w);
        w
    }

    /// Adds a wire occupying the next output slot, attached to `end`.
    pub fn add_output(&mut self, end: WireEnd) -> WireId {
        let slot = self.outputs.len();
        let w = self.add_wire(end, WireEnd::Output(slot));
        self.outputs.push(w);
        w
    }

    /// A bare wire spanning the next input and output slots.
    pub fn add_io_wire(&mut self) -> WireId {
        let islot = self.inputs.len();
        let oslot = self.outputs.len();
        let w = self.add_wire(WireEnd::Input(islot), WireEnd::Output(oslot));
        self.inputs.push(w);
        self.outputs.push(w);
        w
    }

    pub fn remove_node(&mut self, n: NodeId) {
        self.nodes.remove(&n);
    }

    pub fn remove_wire(&mut self, w: WireId) {
        self.wires.remove(&w);
    }

    pub fn set_phase(&mut self, n: NodeId, phase: Phase) {
        if let Some(e) = self.nodes.get_mut(&n) {
            e.1 = phase;
        }
    }

    pub fn set_node_type(&mut self, n: NodeId, t: NodeType) {
        if let Some(e) = self.nodes.get_mut(&n) {
            e.0 = t;
        }
    }

    pub fn set_wire_ends(&mut self, w: WireId, a: WireEnd, b: WireEnd) {
        self.wires.insert(w, (a, b));
    }

    /// Reattaches every end of `w` currently on node `from` to node `to`.
    pub fn reattach(&mut self, w: WireId, from: NodeId, to: NodeId) {
        if let Some((a, b)) = self.wires.get_mut(&w) {
            if *a == WireEnd::Node(from) {
                *a = WireEnd::Node(to);
            }
            if *b == WireEnd::Node(from) {
                *b = WireEnd::Node(to);
            }
        }
    }

    /// Replaces the boundary wire at `slot` with `w` (input side).
    pub fn set_input_wire(&mut self, slot: usize, w: WireId) {
        self.inputs[slot] = w;
    }

    pub fn set_output_wire(&mut self, slot: usize, w: WireId) {
        self.outputs[slot] = w;
    }

    pub fn multiply_scalar(&mut self, s: Complex64) {
        self.scalar *= s;
    }

    pub fn set_scalar(&mut self, s: Complex64) {
        self.scalar = s;
    }

    // ---- accessors ----

    pub fn scalar(&self) -> Complex64 {
        self.scalar
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeType, Phase)> + '_ {
        self.nodes.iter().map(|(&id, &(t, p))| (id, t, p))
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn node(&self, n: NodeId) -> Option<(NodeType, Phase)> {
        self.nodes.get(&n).copied()
    }

    pub fn node_type(&self, n: NodeId) -> NodeType {
        self.nodes[&n].0
    }

    pub fn phase(&self, n: NodeId) -> Phase {
        self.nodes[&n].1
    }

    pub fn has_node(&self, n: NodeId) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn wires(&self) -> impl Iterator<Item = (WireId, WireEnd, WireEnd)> + '_ {
        self.wires.iter().map(|(&id, &(a, b))| (id, a, b))
    }

    pub fn wire_ids(&self) -> Vec<WireId> {
        self.wires.keys().copied().collect()
    }

    pub fn wire(&self, w: WireId) -> Option<(WireEnd, WireEnd)> {
        self.wires.get(&w).copied()
    }

    pub fn has_wire(&self, w: WireId) -> bool {
        self.wires.contains_key(&w)
    }

    pub fn inputs(&self) -> &[WireId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[WireId] {
        &self.outputs
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_wires(&self) -> usize {
        self.wires.len()
    }

    pub fn is_input_wire(&self, w: WireId) -> bool {
        self.inputs.contains(&w)
    }

    pub fn is_output_wire(&self, w: WireId) -> bool {
        self.outputs.contains(&w)
    }

    pub fn is_boundary_wire(&self, w: WireId) -> bool {
        self.is_input_wire(w) || self.is_output_wire(w)
    }

    pub fn is_spider(&self, n: NodeId) -> bool {
        matches!(self.nodes.get(&n), Some((NodeType::Z | NodeType::X, _)))
    }

    pub fn spiders(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|(_, (t, _))| matches!(t, NodeType::Z | NodeType::X))
            .map(|(&n, _)| n)
            .collect()
    }

    /// Spiders with a non-Clifford phase.
    pub fn non_clifford_spiders(&self) -> Vec<NodeId> {
        self.spiders().into_iter().filter(|&n| !self.phase(n).is_clifford()).collect()
    }

    /// Wire-ends adjacent to `n`, as a multiset of wire ids in ascending
    /// order; a self-loop wire appears twice.
    pub fn node_wires(&self, n: NodeId) -> Vec<WireId> {
        let mut out = Vec::new();
        for (&w, &(a, b)) in &self.wires {
            if a == WireEnd::Node(n) {
                out.push(w);
            }
            if b == WireEnd::Node(n) {
                out.push(w);
            }
        }
        out
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.node_wires(n).len()
    }

    /// The end of `w` that is not the given one; for a self-loop both ends
    /// are on the same node and the other occurrence is returned.
    pub fn far_end(&self, w: WireId, from: NodeId) -> Option<WireEnd> {
        let (a, b) = self.wire(w)?;
        if a == WireEnd::Node(from) {
            Some(b)
        } else if b == WireEnd::Node(from) {
            Some(a)
        } else {
            None
        }
    }

    // ---- validation ----

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (&w, &(a, b)) in &self.wires {
            for end in [a, b] {
                if let WireEnd::Node(n) = end {
                    if !self.nodes.contains_key(&n) {
                        v.push(Violation {
                            code: "dangling-end",
                            message: format!("wire {w} references missing node {n}"),
                        });
                    }
                }
            }
        }
        self.check_slots(&mut v, true);
        self.check_slots(&mut v, false);
        for (&n, &(t, p)) in &self.nodes {
            if t == NodeType::H {
                let deg = self.degree(n);
                if deg != 2 {
                    v.push(Violation {
                        code: "H-degree",
                        message: format!("H node {n} has {deg} adjacent wire-ends, expected 2"),
                    });
                }
                if !p.is_zero() {
                    v.push(Violation {
                        code: "H-phase",
                        message: format!("H node {n} has phase {p}pi, expected 0"),
                    });
                }
            }
        }
        v
    }

    fn check_slots(&self, v: &mut Vec<Violation>, input_side: bool) {
        let (list, name) = if input_side {
            (&self.inputs, "input")
        } else {
            (&self.outputs, "output")
        };
        // per slot: exactly one matching wire-end, on the listed wire
        for (slot, &w) in list.iter().enumerate() {
            let mut count = 0;
            for (&wid, &(a, b)) in &self.wires {
                for end in [a, b] {
                    let hit = match end {
                        WireEnd::Input(s) => input_side && s == slot,
                        WireEnd::Output(s) => !input_side && s == slot,
                        WireEnd::Node(_) => false,
                    };
                    if hit {
                        count += 1;
                        if wid != w {
                            v.push(Violation {
                                code: "slot-mismatch",
                                message: format!(
                                    "{name} slot {slot} lists wire {w} but wire {wid} attaches"
                                ),
                            });
                        }
                    }
                }
            }
            if count != 1 {
                v.push(Violation {
                    code: "slot-count",
                    message: format!("{name} slot {slot} has {count} wire-ends, expected 1"),
                });
            }
        }
        // no ends referencing slots beyond the list
        for (&w, &(a, b)) in &self.wires {
            for end in [a, b] {
                let bad = match end {
                    WireEnd::Input(s) => input_side && s >= list.len(),
                    WireEnd::Output(s) => !input_side && s >= list.len(),
                    WireEnd::Node(_) => false,
                };
                if bad {
                    v.push(Violation {
                        code: "slot-range",
                        message: format!("wire {w} references an out-of-range {name} slot"),
                    });
                }
            }
        }
    }

    // ---- edges ----

    /// Partition of the wires into plain edges and H-edges. A wire between
    /// two H nodes is kept Plain (H-chains are normalized by rewriting, not
    /// here), so an H node forms an H-edge only when neither of its wires
    /// continues onto another H node.
    pub fn edges(&self) -> Vec<Edge> {
        let mut in_hedge: BTreeSet<WireId> = BTreeSet::new();
        let mut out = Vec::new();
        for (&h, &(t, _)) in &self.nodes {
            if t != NodeType::H {
                continue;
            }
            let ws = self.node_wires(h);
            if ws.len() != 2 || ws[0] == ws[1] {
                continue; // invalid degree or self-loop: wires stay plain
            }
            let far_is_h = |w: WireId| match self.far_end(w, h) {
                Some(WireEnd::Node(n)) => self.node(n).map(|(t, _)| t) == Some(NodeType::H),
                _ => false,
            };
            if far_is_h(ws[0]) || far_is_h(ws[1]) {
                continue;
            }
            in_hedge.insert(ws[0]);
            in_hedge.insert(ws[1]);
            out.push(Edge::HEdge(ws[0], h, ws[1]));
        }
        for &w in self.wires.keys() {
            if !in_hedge.contains(&w) {
                out.push(Edge::Plain(w));
            }
        }
        out
    }

    /// The edge containing wire `w`.
    pub fn edge_of(&self, w: WireId) -> Option<Edge> {
        self.edges().into_iter().find(|e| e.wires().contains(&w))
    }

    // ---- graph-like analysis ----

    /// Checks the graph-like conditions: Z-spiders only, interior H-edges
    /// with simple connectivity, plain boundary wires each attached to a
    /// spider, and at most one input and one output wire per spider.
    pub fn graph_like_violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (&n, &(t, _)) in &self.nodes {
            if t == NodeType::X {
                v.push(Violation {
                    code: "gl-colour",
                    message: format!("spider {n} is X-type"),
                });
            }
        }
        let edges = self.edges();
        let mut hedge_pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for e in &edges {
            match e {
                Edge::HEdge(a, h, b) => {
                    let fa = self.far_end(*a, *h);
                    let fb = self.far_end(*b, *h);
                    match (fa, fb) {
                        (Some(WireEnd::Node(u)), Some(WireEnd::Node(w))) => {
                            if u == w {
                                v.push(Violation {
                                    code: "gl-self-loop",
                                    message: format!("H-edge self-loop at spider {u}"),
                                });
                            } else {
                                let key = (u.min(w), u.max(w));
                                if !hedge_pairs.insert(key) {
                                    v.push(Violation {
                                        code: "gl-parallel",
                                        message: format!(
                                            "parallel H-edges between spiders {} and {}",
                                            key.0, key.1
                                        ),
                                    });
                                }
                            }
                        }
                        _ => v.push(Violation {
                            code: "gl-boundary-h",
                            message: format!("H node {h} sits on a boundary wire"),
                        }),
                    }
                }
                Edge::Plain(w) => {
                    let (a, b) = self.wires[w];
                    let node_ends: Vec<NodeId> = [a, b]
                        .iter()
                        .filter_map(|e| match e {
                            WireEnd::Node(n) => Some(*n),
                            _ => None,
                        })
                        .collect();
                    match node_ends.len() {
                        2 => v.push(Violation {
                            code: "gl-plain-interior",
                            message: format!("plain wire {w} connects two nodes"),
                        }),
                        0 => v.push(Violation {
                            code: "gl-bare-boundary",
                            message: format!("wire {w} joins two boundary slots directly"),
                        }),
                        _ => {
                            let n = node_ends[0];
                            if self.node(n).map(|(t, _)| t) == Some(NodeType::H) {
                                v.push(Violation {
                                    code: "gl-boundary-h",
                                    message: format!("boundary wire {w} attaches to an H node"),
                                });
                            }
                        }
                    }
                }
            }
        }
        // at most one input wire and one output wire per spider
        for &n in &self.spiders() {
            let mut ni = 0;
            let mut no = 0;
            for w in self.node_wires(n) {
                if self.is_input_wire(w) {
                    ni += 1;
                }
                if self.is_output_wire(w) {
                    no += 1;
                }
            }
            if ni > 1 {
                v.push(Violation {
                    code: "gl-multi-input",
                    message: format!("spider {n} touches {ni} input wires"),
                });
            }
            if no > 1 {
                v.push(Violation {
                    code: "gl-multi-output",
                    message: format!("spider {n} touches {no} output wires"),
                });
            }
        }
        v
    }

    pub fn is_graph_like(&self) -> bool {
        self.graph_like_violations().is_empty()
    }

    /// Measurement label of a spider, per its phase: multiples of pi are X,
    /// odd multiples of pi/2 are Y, everything else (non-Clifford) is XY.
    pub fn measurement_label(&self, n: NodeId) -> MeasLabel {
        let p = self.phase(n);
        if p.is_pauli() {
            MeasLabel::X
        } else if p.is_odd_half() {
            MeasLabel::Y
        } else {
            MeasLabel::XY
        }
    }

    pub fn to_open_graph(&self) -> Result<OpenGraph, DiagramError> {
        let gv = self.graph_like_violations();
        if !gv.is_empty() {
            return Err(DiagramError::NotGraphLike(gv));
        }
        let vertices: BTreeSet<NodeId> = self.spiders().into_iter().collect();
        let mut edges = BTreeSet::new();
        for e in self.edges() {
            if let Edge::HEdge(a, h, b) = e {
                if let (Some(WireEnd::Node(u)), Some(WireEnd::Node(w))) =
                    (self.far_end(a, h), self.far_end(b, h))
                {
                    edges.insert((u.min(w), u.max(w)));
                }
            }
        }
        let spider_of = |w: WireId| -> NodeId {
            let (a, b) = self.wires[&w];
            match (a, b) {
                (WireEnd::Node(n), _) | (_, WireEnd::Node(n)) => n,
                _ => unreachable!("graph-like boundary wire attaches to a spider"),
            }
        };
        let inputs: Vec<NodeId> = self.inputs.iter().map(|&w| spider_of(w)).collect();
        let outputs: Vec<NodeId> = self.outputs.iter().map(|&w| spider_of(w)).collect();
        let out_set: BTreeSet<NodeId> = outputs.iter().copied().collect();
        let mut labels = BTreeMap::new();
        let mut angles = BTreeMap::new();
        for &n in &vertices {
            angles.insert(n, self.phase(n));
            if !out_set.contains(&n) {
                labels.insert(n, self.measurement_label(n));
            }
        }
        Ok(OpenGraph { vertices, edges, inputs, outputs, labels, angles })
    }

    /// Builds the graph-like diagram of an open graph: one Z spider per
    /// vertex, one H node per edge, plain boundary wires in list order.
    pub fn from_open_graph(g: &OpenGraph) -> Diagram {
        let mut d = Diagram::new();
        let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for &v in &g.vertices {
            let p = g.angles.get(&v).copied().unwrap_or(Phase::ZERO);
            map.insert(v, d.add_node(NodeType::Z, p));
        }
        for &(a, b) in &g.edges {
            let h = d.add_node(NodeType::H, Phase::ZERO);
            d.add_wire(WireEnd::Node(map[&a]), WireEnd::Node(h));
            d.add_wire(WireEnd::Node(h), WireEnd::Node(map[&b]));
        }
        for &v in &g.inputs {
            d.add_input(WireEnd::Node(map[&v]));
        }
        for &v in &g.outputs {
            d.add_output(WireEnd::Node(map[&v]));
        }
        d
    }

    // ---- fusable components ----

    /// Partition of the spiders into fusable components: same colour joined
    /// by a plain edge, or opposite colours joined by an H-edge.
    pub fn fusable_components(&self) -> Vec<Vec<NodeId>> {
        let spiders = self.spiders();
        let mut parent: BTreeMap<NodeId, NodeId> = spiders.iter().map(|&n| (n, n)).collect();
        fn find(parent: &mut BTreeMap<NodeId, NodeId>, n: NodeId) -> NodeId {
            let p = parent[&n];
            if p == n {
                n
            } else {
                let r = find(parent, p);
                parent.insert(n, r);
                r
            }
        }
        let union = |parent: &mut BTreeMap<NodeId, NodeId>, a: NodeId, b: NodeId| {
            let ra = find(parent, a);
            let rb = find(parent, b);
            if ra != rb {
                parent.insert(ra.max(rb), ra.min(rb));
            }
        };
        for e in self.edges() {
            match e {
                Edge::Plain(w) => {
                    let (a, b) = self.wires[&w];
                    if let (WireEnd::Node(u), WireEnd::Node(v)) = (a, b) {
                        if self.is_spider(u)
                            && self.is_spider(v)
                            && self.node_type(u) == self.node_type(v)
                        {
                            union(&mut parent, u, v);
                        }
                    }
                }
                Edge::HEdge(a, h, b) => {
                    if let (Some(WireEnd::Node(u)), Some(WireEnd::Node(v))) =
                        (self.far_end(a, h), self.far_end(b, h))
                    {
                        if self.is_spider(u)
                            && self.is_spider(v)
                            && u != v
                            && self.node_type(u) != self.node_type(v)
                        {
                            union(&mut parent, u, v);
                        }
                    }
                }
            }
        }
        let mut blocks: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &n in &spiders {
            let r = find(&mut parent, n);
            blocks.entry(r).or_default().push(n);
        }
        blocks.into_values().collect()
    }

    /// The fusable component containing spider `n`.
    pub fn fusable_component(&self, n: NodeId) -> Vec<NodeId> {
        self.fusable_components()
            .into_iter()
            .find(|b| b.contains(&n))
            .unwrap_or_default()
    }

    // ---- JSON interchange ----

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DiagramRepr::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Diagram, DiagramError> {
        let repr: DiagramRepr =
            serde_json::from_str(s).map_err(|e| DiagramError::Json(e.to_string()))?;
        repr.into_diagram()
    }
}

// serde surface types matching the interchange schema

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    id: u32,
    #[serde(rename = "type")]
    ty: NodeType,
    #[serde(default = "phase_zero")]
    phase: Phase,
}

fn phase_zero() -> Phase {
    Phase::ZERO
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
enum EndRepr {
    #[serde(rename = "node")]
    Node(u32),
    #[serde(rename = "input")]
    Input(usize),
    #[serde(rename = "output")]
    Output(usize),
}

impl From<WireEnd> for EndRepr {
    fn from(e: WireEnd) -> EndRepr {
        match e {
            WireEnd::Node(n) => EndRepr::Node(n.0),
            WireEnd::Input(s) => EndRepr::Input(s),
            WireEnd::Output(s) => EndRepr::Output(s),
        }
    }
}

impl From<EndRepr> for WireEnd {
    fn from(e: EndRepr) -> WireEnd {
        match e {
            EndRepr::Node(n) => WireEnd::Node(NodeId(n)),
            EndRepr::Input(s) => WireEnd::Input(s),
            EndRepr::Output(s) => WireEnd::Output(s),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireRepr {
    id: u32,
    ends: [EndRepr; 2],
}

#[derive(Serialize, Deserialize)]
struct ScalarRepr {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct DiagramRepr {
    nodes: Vec<NodeRepr>,
    wires: Vec<WireRepr>,
    inputs: Vec<u32>,
    outputs: Vec<u32>,
    scalar: ScalarRepr,
}

impl From<&Diagram> for DiagramRepr {
    fn from(d: &Diagram) -> DiagramRepr {
        DiagramRepr {
            nodes: d
                .nodes
                .iter()
                .map(|(&id, &(ty, phase))| NodeRepr { id: id.0, ty, phase })
                .collect(),
            wires: d
                .wires
                .iter()
                .map(|(&id, &(a, b))| WireRepr { id: id.0, ends: [a.into(), b.into()] })
                .collect(),
            inputs: d.inputs.iter().map(|w| w.0).collect(),
            outputs: d.outputs.iter().map(|w| w.0).collect(),
            scalar: ScalarRepr { re: d.scalar.re, im: d.scalar.im },
        }
    }
}

impl DiagramRepr {
    fn into_diagram(self) -> Result<Diagram, DiagramError> {
        let mut d = Diagram::new();
        for n in self.nodes {
            if d.nodes.insert(NodeId(n.id), (n.ty, n.phase)).is_some() {
                return Err(DiagramError::Json(format!("duplicate node id {}", n.id)));
            }
            d.next_node = d.next_node.max(n.id + 1);
        }
        for w in self.wires {
            let [a, b] = w.ends;
            if d.wires.insert(WireId(w.id), (a.into(), b.into())).is_some() {
                return Err(DiagramError::Json(format!("duplicate wire id {}", w.id)));
            }
            d.next_wire = d.next_wire.max(w.id + 1);
        }
        d.inputs = self.inputs.into_iter().map(WireId).collect();
        d.outputs = self.outputs.into_iter().map(WireId).collect();
        d.scalar = Complex64::new(self.scalar.re, self.scalar.im);
        Ok(d)
    }
}
