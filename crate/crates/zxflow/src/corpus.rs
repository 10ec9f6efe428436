//! Seeded random generators of circuit-shaped, flowful diagrams: the fuel
//! for the fuzz suites and the bundled corpus tool. All randomness flows
//! through a caller-supplied ChaCha stream so corpora are reproducible; the
//! `ZXFLOW_SEED` environment variable fixes the seed externally.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagram::{Diagram, NodeId, NodeType, WireEnd};
use crate::flow::{find_zx_flow, ZXFlow};
use crate::phase::Phase;
use crate::rewrite::make_graph_like;

/// Environment variable that fixes corpus seeds.
pub const SEED_ENV: &str = "ZXFLOW_SEED";

/// Reads the corpus seed from the environment, falling back to `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

/// A deterministic generator stream for the given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape knobs for random circuit-like diagrams.
#[derive(Copy, Clone, Debug)]
pub struct CircuitParams {
    /// Number of qubit lines (boundary wires per side, before preps).
    pub max_qubits: usize,
    /// Number of random gates layered onto the lines.
    pub gates: usize,
    /// Whether the phase pool includes non-Clifford angles.
    pub non_clifford: bool,
    /// Whether some lines may start as one-legged state preparations,
    /// turning the diagram into a proper isometry.
    pub allow_prep: bool,
}

impl Default for CircuitParams {
    fn default() -> CircuitParams {
        CircuitParams { max_qubits: 3, gates: 6, non_clifford: true, allow_prep: false }
    }
}

const CLIFFORD_PHASES: [(i64, i64); 4] = [(0, 1), (1, 2), (1, 1), (3, 2)];
const NON_CLIFFORD_PHASES: [(i64, i64); 4] = [(1, 4), (3, 4), (5, 4), (7, 4)];

fn random_phase(r: &mut ChaCha8Rng, non_clifford: bool) -> Phase {
    let pool: &[(i64, i64)] = if non_clifford && r.gen_bool(0.5) {
        &NON_CLIFFORD_PHASES
    } else {
        &CLIFFORD_PHASES
    };
    let (num, den) = pool[r.gen_range(0..pool.len())];
    Phase::new(num, den)
}

/// A random circuit-shaped diagram: qubit lines of spiders joined by plain
/// and H-edge entanglers. Circuit shape guarantees a causal spider order,
/// so these diagrams are flowful by construction.
pub fn random_circuit_diagram(r: &mut ChaCha8Rng, p: &CircuitParams) -> Diagram {
    let q = r.gen_range(1..=p.max_qubits.max(1));
    let mut d = Diagram::new();
    let mut last: Vec<NodeId> = Vec::with_capacity(q);
    for _ in 0..q {
        if p.allow_prep && r.gen_bool(0.25) {
            let phase = if r.gen_bool(0.5) { Phase::ZERO } else { Phase::PI };
            last.push(d.add_node(NodeType::X, phase));
        } else {
            let n = d.add_node(NodeType::Z, Phase::ZERO);
            d.add_input(WireEnd::Node(n));
            last.push(n);
        }
    }
    let attach = |d: &mut Diagram, last: &mut Vec<NodeId>, qi: usize, n: NodeId| {
        d.add_wire(WireEnd::Node(last[qi]), WireEnd::Node(n));
        last[qi] = n;
    };
    for _ in 0..p.gates {
        match r.gen_range(0..5u8) {
            0 => {
                let qi = r.gen_range(0..q);
                let n = d.add_node(NodeType::Z, random_phase(r, p.non_clifford));
                attach(&mut d, &mut last, qi, n);
            }
            1 => {
                let qi = r.gen_range(0..q);
                let n = d.add_node(NodeType::X, random_phase(r, p.non_clifford));
                attach(&mut d, &mut last, qi, n);
            }
            2 => {
                let qi = r.gen_range(0..q);
                let n = d.add_node(NodeType::H, Phase::ZERO);
                attach(&mut d, &mut last, qi, n);
            }
            3 if q >= 2 => {
                // CX: control Z spider joined to a target X spider
                let c = r.gen_range(0..q);
                let t = (c + r.gen_range(1..q)) % q;
                let zc = d.add_node(NodeType::Z, Phase::ZERO);
                let xt = d.add_node(NodeType::X, Phase::ZERO);
                attach(&mut d, &mut last, c, zc);
                attach(&mut d, &mut last, t, xt);
                d.add_wire(WireEnd::Node(zc), WireEnd::Node(xt));
            }
            4 if q >= 2 => {
                // CZ: two Z spiders joined through an H gate
                let a = r.gen_range(0..q);
                let b = (a + r.gen_range(1..q)) % q;
                let za = d.add_node(NodeType::Z, Phase::ZERO);
                let zb = d.add_node(NodeType::Z, Phase::ZERO);
                attach(&mut d, &mut last, a, za);
                attach(&mut d, &mut last, b, zb);
                let h = d.add_node(NodeType::H, Phase::ZERO);
                d.add_wire(WireEnd::Node(za), WireEnd::Node(h));
                d.add_wire(WireEnd::Node(h), WireEnd::Node(zb));
            }
            _ => {}
        }
    }
    for qi in 0..q {
        d.add_output(WireEnd::Node(last[qi]));
    }
    debug_assert!(d.validate().is_empty(), "generated diagram is malformed");
    d
}

/// A random circuit diagram together with a verified plain ZX-flow.
pub fn random_flowful(r: &mut ChaCha8Rng, p: &CircuitParams) -> (Diagram, ZXFlow) {
    for _ in 0..100 {
        let d = random_circuit_diagram(r, p);
        if let Some(f) = find_zx_flow(&d) {
            return (d, f);
        }
    }
    panic!("corpus generator failed to find a flowful circuit (internal error)");
}

/// A random graph-like flowful diagram, obtained by normalising a random
/// circuit while transporting its flow.
pub fn random_graph_like_flowful(r: &mut ChaCha8Rng, p: &CircuitParams) -> (Diagram, ZXFlow) {
    for _ in 0..100 {
        let (d, f) = random_flowful(r, p);
        if let Ok((gd, gf, _)) = make_graph_like(&d, &f) {
            return (gd, gf);
        }
    }
    panic!("corpus generator failed to normalise a circuit (internal error)");
}
