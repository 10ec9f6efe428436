//! Circuit extraction from flowful diagrams: order-maximal non-Clifford
//! spiders peel off as Pauli exponentials read from their focused flow
//! semiwebs, and the residual Clifford isometry is synthesised from the
//! signed output colourings of the logical and stabiliser webs.
//!
//! The module also provides the gate-level plumbing: lowering Pauli
//! exponentials to CX-ladder circuits, tableau-based Clifford synthesis
//! verified by stabiliser conjugation, an OpenQASM-2-style text format, and
//! a dense oracle round-trip check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, NodeId};
use crate::flow::{focus, is_focused, verify_zx_flow, Strength, ZXFlow};
use crate::gf2::Gf2System;
use crate::oracle::{evaluate_capped, firing_coefficient, DenseMap, OracleError, DEFAULT_TOL, DEFAULT_WIRE_CAP};
use crate::phase::Phase;
use crate::webs::{
    solve_constrained, web_basis, BasisMode, Letter, NodeCondition, PauliSupport,
    SemiwebConstraintSet,
};

/// A Pauli exponential e^{-i angle/2 P} over the output qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliExp {
    pub pauli: Vec<Letter>,
    pub angle: Phase,
}

/// A signed Pauli string over the output qubits; `neg` is the -1 sign bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableauRow {
    pub neg: bool,
    pub letters: Vec<Letter>,
}

/// Signed images of the input Paulis under a Clifford isometry, plus the
/// stabilisers of its image that complete the tableau.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabTableau {
    pub num_inputs: usize,
    pub num_outputs: usize,
    /// Image of Z_i per input i.
    pub z_rows: Vec<TableauRow>,
    /// Image of X_i per input i.
    pub x_rows: Vec<TableauRow>,
    /// Stabilisers of the image spanning the ancilla directions.
    pub stab_rows: Vec<TableauRow>,
}

/// Extraction result: a Clifford isometry followed by the ordered Pauli
/// exponentials (index 0 applied first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedCircuit {
    pub clifford: StabTableau,
    pub exps: Vec<PauliExp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Z(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    Rz(usize, Phase),
    /// Scalar annotation e^{i theta}; carries no qubit action.
    GlobalPhase(Phase),
}

/// A gate sequence on `num_qubits` qubits; the last `num_ancillae` qubits
/// are initialized to |0> before the gates run, making the list a
/// 2^{n-a} -> 2^n isometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateList {
    pub num_qubits: usize,
    pub num_ancillae: usize,
    pub gates: Vec<Gate>,
}

#[derive(Error, Debug)]
pub enum ExtractError {
    #[error("flow fails verification: {0}")]
    InvalidFlow(String),
    #[error("flow is not focused")]
    NotFocused,
    #[error("no non-Clifford spider to peel")]
    NoTarget,
    #[error("correction web for spider {0} cannot avoid the input wires")]
    Unextractable(NodeId),
    #[error("residual diagram is not a Clifford isometry: {0}")]
    NotIsometry(String),
    #[error("inconsistent tableau: {0}")]
    Tableau(String),
    #[error("circuit parse error: {0}")]
    Parse(String),
    #[error("gate is not Clifford: {0:?}")]
    NonCliffordGate(Gate),
}

// ---- peeling ----

/// The combinatorial firing sign of a semiweb whose only defect is a pi at
/// one spider: +-1 by construction (asserted).
fn firing_sign(d: &Diagram, w: &PauliSupport) -> i8 {
    let sigma = firing_coefficient(d, w);
    if (sigma - 1.0).norm() < 1e-9 {
        1
    } else if (sigma + 1.0).norm() < 1e-9 {
        -1
    } else {
        panic!("non-unit firing sign {sigma} (internal error)");
    }
}

/// Peels the order-maximal non-Clifford spider of a focused plain flow into
/// a Pauli exponential over the outputs: the spider's phase is removed, the
/// exponential is the output colouring of its flow web with the angle signed
/// by the web's firing, and the flow simply drops the spider (focusing
/// guarantees the remaining webs stay defect-legal).
pub fn peel(d: &Diagram, f: &ZXFlow) -> Result<(PauliExp, Diagram, ZXFlow), ExtractError> {
    if f.strength != Strength::Plain {
        return Err(ExtractError::InvalidFlow("peel expects a plain flow".into()));
    }
    if !is_focused(d, f) {
        return Err(ExtractError::NotFocused);
    }
    let Some(&nu) = f.order.last() else {
        return Err(ExtractError::NoTarget);
    };
    let alpha = d.phase(nu);
    let mut web = f.flows.get(&nu).cloned().ok_or(ExtractError::NoTarget)?;

    // the exponential acts on outputs only: the web must avoid the inputs
    if d.inputs().iter().any(|&wi| web.letter(wi) != Letter::I) {
        let mut cs = SemiwebConstraintSet::default();
        cs.node_conditions.insert(nu, NodeCondition::PiDefect);
        for s in d.spiders() {
            if s != nu {
                cs.node_conditions.insert(s, NodeCondition::NoDefect);
            }
        }
        for &wi in d.inputs() {
            cs.pins.insert(wi, Letter::I);
        }
        web = solve_constrained(d, &cs).ok_or(ExtractError::Unextractable(nu))?;
    }

    let mut post = d.clone();
    post.set_phase(nu, Phase::ZERO);
    let sign = firing_sign(&post, &web);
    let angle = if sign < 0 { -alpha } else { alpha };
    let exp = PauliExp { pauli: web.letters_on(d.outputs()), angle };

    let mut f2 = f.clone();
    f2.order.pop();
    f2.flows.remove(&nu);
    debug_assert!(verify_zx_flow(&post, &f2).0, "peeled flow fails (internal error)");
    Ok((exp, post, f2))
}

// ---- GF(2) echelon helper over signed-free Pauli strings ----

struct Echelon {
    rows: Vec<Vec<bool>>,
}

impl Echelon {
    fn new() -> Echelon {
        Echelon { rows: Vec::new() }
    }

    /// Inserts a vector; returns false if it was dependent on the rows.
    fn insert(&mut self, mut v: Vec<bool>) -> bool {
        for r in &self.rows {
            let pivot = r.iter().position(|&b| b).expect("rows are nonzero");
            if v[pivot] {
                for (a, b) in v.iter_mut().zip(r) {
                    *a ^= b;
                }
            }
        }
        if v.iter().any(|&b| b) {
            self.rows.push(v);
            true
        } else {
            false
        }
    }
}

fn letters_bits(letters: &[Letter]) -> Vec<bool> {
    let mut v = Vec::with_capacity(2 * letters.len());
    for &l in letters {
        let (z, x) = l.bits();
        v.push(x);
        v.push(z);
    }
    v
}

/// Generators of the input-free Pauli-web subspace: products of web-basis
/// elements whose restriction to every input wire is the identity.
fn input_free_webs(d: &Diagram) -> Vec<PauliSupport> {
    let basis = web_basis(d, BasisMode::WebsOnly);
    let mut sys = Gf2System::new(basis.len());
    for &wi in d.inputs() {
        for pick_x in [false, true] {
            let vars: Vec<usize> = basis
                .iter()
                .enumerate()
                .filter(|(_, b)| if pick_x { b.has_x(wi) } else { b.has_z(wi) })
                .map(|(i, _)| i)
                .collect();
            sys.add_row(&vars, false);
        }
    }
    sys.nullspace()
        .iter()
        .map(|coeffs| {
            let mut w = PauliSupport::new();
            for (i, &c) in coeffs.iter().enumerate() {
                if c {
                    w = w.product(&basis[i]);
                }
            }
            w
        })
        .filter(|w| !w.is_empty())
        .collect()
}

// ---- extraction ----

fn signed_row(d: &Diagram, w: &PauliSupport) -> TableauRow {
    TableauRow { neg: firing_sign(d, w) < 0, letters: w.letters_on(d.outputs()) }
}

/// Extracts a circuit from a flowful diagram: focuses the flow, peels every
/// non-Clifford spider (maximal first), and reads the residual Clifford
/// isometry's tableau off the logical and stabiliser webs, with signs from
/// combinatorial firing.
pub fn extract(d: &Diagram, f: &ZXFlow) -> Result<ExtractedCircuit, ExtractError> {
    let (ok, v) = verify_zx_flow(d, f);
    if !ok {
        return Err(ExtractError::InvalidFlow(
            v.first().map(|x| x.message.clone()).unwrap_or_default(),
        ));
    }
    let plain =
        if f.strength == Strength::Strong { f.restricted_to_plain(d) } else { f.clone() };
    let (mut flow, _) = focus(d, &plain);
    let mut cur = d.clone();

    let mut exps_rev = Vec::new();
    while !flow.order.is_empty() {
        let (exp, next, next_flow) = peel(&cur, &flow)?;
        exps_rev.push(exp);
        cur = next;
        flow = next_flow;
    }
    let exps: Vec<PauliExp> = exps_rev.into_iter().rev().collect();

    // residual Clifford isometry: signed tableau rows from the logicals
    let k = cur.inputs().len();
    let n = cur.outputs().len();
    let mut ech = Echelon::new();
    let mut z_rows = Vec::new();
    let mut x_rows = Vec::new();
    for (i, (lz, lx)) in flow.logicals.iter().enumerate() {
        for (target, web, rows) in
            [(Letter::Z, lz, &mut z_rows), (Letter::X, lx, &mut x_rows)]
        {
            let expected: Vec<Letter> = (0..k)
                .map(|j| if i == j { target } else { Letter::I })
                .collect();
            if web.letters_on(cur.inputs()) != expected {
                return Err(ExtractError::InvalidFlow(format!(
                    "logical web {i} has the wrong input restriction"
                )));
            }
            let row = signed_row(&cur, web);
            if !ech.insert(letters_bits(&row.letters)) {
                return Err(ExtractError::NotIsometry(format!(
                    "logical output colourings are dependent at input {i}"
                )));
            }
            rows.push(row);
        }
    }

    // stabilisers of the image complete the tableau
    let mut stab_rows = Vec::new();
    for w in input_free_webs(&cur) {
        if stab_rows.len() == n - k.min(n) {
            break;
        }
        let row = signed_row(&cur, &w);
        if ech.insert(letters_bits(&row.letters)) {
            stab_rows.push(row);
        }
    }
    if k > n || stab_rows.len() != n - k {
        return Err(ExtractError::NotIsometry(format!(
            "found {} independent stabilisers, need {}",
            stab_rows.len(),
            n as isize - k as isize
        )));
    }

    let clifford =
        StabTableau { num_inputs: k, num_outputs: n, z_rows, x_rows, stab_rows };
    Ok(ExtractedCircuit { clifford, exps })
}

// ---- Pauli-row conjugation engine ----

/// A signed Pauli string in symplectic representation.
#[derive(Clone, Debug, PartialEq)]
struct PauliRow {
    x: Vec<bool>,
    z: Vec<bool>,
    neg: bool,
}

impl PauliRow {
    fn from_letters(letters: &[Letter], neg: bool) -> PauliRow {
        let mut x = Vec::with_capacity(letters.len());
        let mut z = Vec::with_capacity(letters.len());
        for &l in letters {
            let (zb, xb) = l.bits();
            x.push(xb);
            z.push(zb);
        }
        PauliRow { x, z, neg }
    }

    fn to_letters(&self) -> Vec<Letter> {
        self.x.iter().zip(&self.z).map(|(&x, &z)| Letter::from_bits(z, x)).collect()
    }

    fn anticommutes(&self, other: &PauliRow) -> bool {
        let mut acc = false;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] && other.z[i]) ^ (self.z[i] && other.x[i]);
        }
        acc
    }

    /// Multiplies in a commuting row (used only for Z-only stabiliser
    /// cleanup, which introduces no i factors).
    fn mul_z_only(&mut self, other: &PauliRow) {
        for i in 0..self.z.len() {
            debug_assert!(!other.x[i], "cleanup rows must be Z-only (internal error)");
            debug_assert!(
                !(other.z[i] && self.x[i]),
                "cleanup must not cross X support (internal error)"
            );
            self.z[i] ^= other.z[i];
        }
        self.neg ^= other.neg;
    }

}

/// Conjugation of a Pauli row by a Clifford gate (row -> G row G^dagger).
fn conj_row(r: &mut PauliRow, g: &Gate) -> Result<(), ExtractError> {
    match *g {
        Gate::H(q) => {
            r.neg ^= r.x[q] && r.z[q];
            let t = r.x[q];
            r.x[q] = r.z[q];
            r.z[q] = t;
        }
        Gate::S(q) => {
            // X -> Y, Y -> -X, Z -> Z
            r.neg ^= r.x[q] && r.z[q];
            r.z[q] ^= r.x[q];
        }
        Gate::Sdg(q) => {
            // X -> -Y, Y -> X, Z -> Z
            r.neg ^= r.x[q] && !r.z[q];
            r.z[q] ^= r.x[q];
        }
        Gate::X(q) => r.neg ^= r.z[q],
        Gate::Z(q) => r.neg ^= r.x[q],
        Gate::Cx(c, t) => {
            r.neg ^= r.x[c] && r.z[t] && !(r.x[t] ^ r.z[c]);
            r.x[t] ^= r.x[c];
            r.z[c] ^= r.z[t];
        }
        Gate::Cz(c, t) => {
            // CZ = (I x H) CX (I x H)
            conj_row(r, &Gate::H(t))?;
            conj_row(r, &Gate::Cx(c, t))?;
            conj_row(r, &Gate::H(t))?;
        }
        Gate::GlobalPhase(_) => {}
        Gate::Rz(..) => return Err(ExtractError::NonCliffordGate(g.clone())),
    }
    Ok(())
}

/// Conjugates a signed Pauli string through a gate list (temporal order).
pub fn conjugate_through(
    gl: &GateList,
    letters: &[Letter],
    neg: bool,
) -> Result<TableauRow, ExtractError> {
    let mut r = PauliRow::from_letters(letters, neg);
    for g in &gl.gates {
        conj_row(&mut r, g)?;
    }
    Ok(TableauRow { neg: r.neg, letters: r.to_letters() })
}

// ---- Clifford synthesis ----

fn inverse_gate(g: &Gate) -> Gate {
    match *g {
        Gate::S(q) => Gate::Sdg(q),
        Gate::Sdg(q) => Gate::S(q),
        Gate::Rz(q, p) => Gate::Rz(q, -p),
        Gate::GlobalPhase(p) => Gate::GlobalPhase(-p),
        ref other => other.clone(),
    }
}

struct Reducer {
    rows: Vec<PauliRow>,
    gates: Vec<Gate>,
}

impl Reducer {
    fn apply(&mut self, g: Gate) {
        for r in &mut self.rows {
            conj_row(r, &g).expect("synthesis emits Clifford gates only");
        }
        self.gates.push(g);
    }

    /// Reduces row `idx` to +Z_target using conjugations only.
    fn reduce_to_z(&mut self, idx: usize, target: usize) -> Result<(), ExtractError> {
        // make every supported qubit Z-only
        for q in 0..self.rows[idx].x.len() {
            if self.rows[idx].x[q] {
                if self.rows[idx].z[q] {
                    self.apply(Gate::S(q));
                }
                self.apply(Gate::H(q));
            }
        }
        let support: Vec<usize> =
            (0..self.rows[idx].z.len()).filter(|&q| self.rows[idx].z[q]).collect();
        let Some(&qz) = support.iter().find(|&&q| q == target).or(support.first()) else {
            return Err(ExtractError::Tableau(format!("row {idx} reduces to identity")));
        };
        for &q in &support {
            if q != qz {
                self.apply(Gate::Cx(q, qz));
            }
        }
        if qz != target {
            self.apply(Gate::Cx(qz, target));
            self.apply(Gate::Cx(target, qz));
            self.apply(Gate::Cx(qz, target));
        }
        if self.rows[idx].neg {
            self.apply(Gate::X(target));
        }
        debug_assert!(self.is_trivial_z(idx, target));
        Ok(())
    }

    /// Reduces row `idx` to +X_target with gates that fix Z_target.
    fn reduce_to_x_fixing_z(&mut self, idx: usize, target: usize) -> Result<(), ExtractError> {
        if !self.rows[idx].x[target] {
            return Err(ExtractError::Tableau(format!(
                "row {idx} commutes with Z_{target}"
            )));
        }
        // make every other supported qubit X-only, then fold it onto target
        for q in 0..self.rows[idx].x.len() {
            if q == target || !self.rows[idx].z[q] {
                continue;
            }
            if self.rows[idx].x[q] {
                self.apply(Gate::S(q));
            } else {
                self.apply(Gate::H(q));
            }
        }
        for q in 0..self.rows[idx].x.len() {
            if q != target && self.rows[idx].x[q] {
                self.apply(Gate::Cx(target, q));
            }
        }
        if self.rows[idx].z[target] {
            self.apply(Gate::S(target));
        }
        if self.rows[idx].neg {
            self.apply(Gate::Z(target));
        }
        debug_assert!(self.is_trivial_x(idx, target));
        Ok(())
    }

    fn is_trivial_z(&self, idx: usize, q: usize) -> bool {
        let r = &self.rows[idx];
        !r.neg
            && !r.x.iter().any(|&b| b)
            && r.z.iter().enumerate().all(|(i, &b)| b == (i == q))
    }

    fn is_trivial_x(&self, idx: usize, q: usize) -> bool {
        let r = &self.rows[idx];
        !r.neg
            && !r.z.iter().any(|&b| b)
            && r.x.iter().enumerate().all(|(i, &b)| b == (i == q))
    }
}

/// Synthesises a gate list preparing the tableau's Clifford isometry:
/// ancillae (the last n-k qubits) start in |0>, and conjugating Z_i / X_i
/// through the gates reproduces the signed rows; ancilla Z's map into the
/// stabiliser group. Gaussian-elimination style: each logical pair is
/// reduced to (Z_i, X_i) by conjugation, then the stabiliser rows are
/// reduced to the ancilla Z's (row multiplication allowed among them).
pub fn synthesize_clifford(t: &StabTableau) -> Result<GateList, ExtractError> {
    let (k, n) = (t.num_inputs, t.num_outputs);
    if k > n
        || t.z_rows.len() != k
        || t.x_rows.len() != k
        || t.stab_rows.len() != n - k
        || t.z_rows
            .iter()
            .chain(&t.x_rows)
            .chain(&t.stab_rows)
            .any(|r| r.letters.len() != n)
    {
        return Err(ExtractError::Tableau("row shape mismatch".into()));
    }
    let row = |r: &TableauRow| PauliRow::from_letters(&r.letters, r.neg);
    let mut rows: Vec<PauliRow> = t
        .z_rows
        .iter()
        .chain(&t.x_rows)
        .chain(&t.stab_rows)
        .map(row)
        .collect();

    // symplectic consistency: z_i/x_i anticommute pairwise only; stabilisers
    // commute with everything
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let want = i < k && j == k + i;
            if rows[i].anticommutes(&rows[j]) != want {
                return Err(ExtractError::Tableau(format!(
                    "rows {i} and {j} have the wrong commutation"
                )));
            }
        }
    }

    let mut red = Reducer { rows: std::mem::take(&mut rows), gates: Vec::new() };
    for i in 0..k {
        red.reduce_to_z(i, i)?;
        red.reduce_to_x_fixing_z(k + i, i)?;
    }
    for j in 0..(n - k) {
        let idx = 2 * k + j;
        // clear Z bits at already-finalized ancilla qubits by multiplying
        // in the finished +Z rows (group generators, not fixed images)
        for q in k..(k + j) {
            if red.rows[idx].z[q] {
                let done = red.rows[2 * k + (q - k)].clone();
                red.rows[idx].mul_z_only(&done);
            }
        }
        red.reduce_to_z(idx, k + j)?;
    }
    for (i, r) in red.rows.iter().enumerate() {
        let _ = (i, r);
        debug_assert!(!r.neg, "synthesis left a signed row (internal error)");
    }

    let gates: Vec<Gate> = red.gates.iter().rev().map(inverse_gate).collect();
    Ok(GateList { num_qubits: n, num_ancillae: n - k, gates })
}

// ---- Pauli exponential lowering ----

fn half(p: Phase) -> Phase {
    Phase::new(p.num(), p.den() * 2)
}

/// Lowers a Pauli exponential to gates: basis-change conjugation (H for X,
/// Sdg-H for Y), a CX ladder onto the highest supported qubit, Rz(angle),
/// and the unconjugation. Empty support is a global phase annotation.
pub fn lower_pauli_exp(e: &PauliExp) -> GateList {
    let n = e.pauli.len();
    let support: Vec<usize> =
        (0..n).filter(|&q| e.pauli[q] != Letter::I).collect();
    let mut gates = Vec::new();
    let Some(&pivot) = support.last() else {
        return GateList {
            num_qubits: n,
            num_ancillae: 0,
            gates: vec![Gate::GlobalPhase(-half(e.angle))],
        };
    };
    for &q in &support {
        match e.pauli[q] {
            Letter::X => gates.push(Gate::H(q)),
            Letter::Y => {
                gates.push(Gate::Sdg(q));
                gates.push(Gate::H(q));
            }
            _ => {}
        }
    }
    for &q in &support {
        if q != pivot {
            gates.push(Gate::Cx(q, pivot));
        }
    }
    gates.push(Gate::Rz(pivot, e.angle));
    for &q in support.iter().rev() {
        if q != pivot {
            gates.push(Gate::Cx(q, pivot));
        }
    }
    for &q in support.iter().rev() {
        match e.pauli[q] {
            Letter::X => gates.push(Gate::H(q)),
            Letter::Y => {
                gates.push(Gate::H(q));
                gates.push(Gate::S(q));
            }
            _ => {}
        }
    }
    GateList { num_qubits: n, num_ancillae: 0, gates }
}

/// Lowers a full extracted circuit: Clifford synthesis first, then the
/// exponentials in order.
pub fn lower(c: &ExtractedCircuit) -> Result<GateList, ExtractError> {
    let mut gl = synthesize_clifford(&c.clifford)?;
    for e in &c.exps {
        if e.pauli.len() != gl.num_qubits {
            return Err(ExtractError::Tableau("exponential width mismatch".into()));
        }
        gl.gates.extend(lower_pauli_exp(e).gates);
    }
    Ok(gl)
}

// ---- dense simulation ----

/// Applies a gate to a 2^n x cols matrix from the left (qubit 0 is the most
/// significant bit of the row index).
fn apply_gate(u: &mut DenseMap, n: usize, cols: usize, g: &Gate) {
    let rows = 1usize << n;
    let bit = |q: usize| 1usize << (n - 1 - q);
    match *g {
        Gate::H(q) => {
            let b = bit(q);
            let s = 1.0 / std::f64::consts::SQRT_2;
            for r in 0..rows {
                if r & b != 0 {
                    continue;
                }
                for c in 0..cols {
                    let a0 = u.get(r, c);
                    let a1 = u.get(r | b, c);
                    u.set(r, c, (a0 + a1) * s);
                    u.set(r | b, c, (a0 - a1) * s);
                }
            }
        }
        Gate::S(q) | Gate::Sdg(q) => {
            let b = bit(q);
            let f = if matches!(g, Gate::S(_)) {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, -1.0)
            };
            for r in 0..rows {
                if r & b != 0 {
                    for c in 0..cols {
                        u.set(r, c, u.get(r, c) * f);
                    }
                }
            }
        }
        Gate::X(q) => {
            let b = bit(q);
            for r in 0..rows {
                if r & b != 0 {
                    continue;
                }
                for c in 0..cols {
                    let a0 = u.get(r, c);
                    u.set(r, c, u.get(r | b, c));
                    u.set(r | b, c, a0);
                }
            }
        }
        Gate::Z(q) => {
            let b = bit(q);
            for r in 0..rows {
                if r & b != 0 {
                    for c in 0..cols {
                        u.set(r, c, -u.get(r, c));
                    }
                }
            }
        }
        Gate::Cx(cq, t) => {
            let (bc, bt) = (bit(cq), bit(t));
            for r in 0..rows {
                if r & bc != 0 && r & bt == 0 {
                    for c in 0..cols {
                        let a0 = u.get(r, c);
                        u.set(r, c, u.get(r | bt, c));
                        u.set(r | bt, c, a0);
                    }
                }
            }
        }
        Gate::Cz(cq, t) => {
            let (bc, bt) = (bit(cq), bit(t));
            for r in 0..rows {
                if r & bc != 0 && r & bt != 0 {
                    for c in 0..cols {
                        u.set(r, c, -u.get(r, c));
                    }
                }
            }
        }
        Gate::Rz(q, p) => {
            let b = bit(q);
            let lo = (-half(p)).cis();
            let hi = half(p).cis();
            for r in 0..rows {
                let f = if r & b != 0 { hi } else { lo };
                for c in 0..cols {
                    u.set(r, c, u.get(r, c) * f);
                }
            }
        }
        Gate::GlobalPhase(p) => {
            let f = p.cis();
            for r in 0..rows {
                for c in 0..cols {
                    u.set(r, c, u.get(r, c) * f);
                }
            }
        }
    }
}

/// The dense isometry of a gate list: ancillae initialized to |0>, then the
/// gates in temporal order. Shape 2^n x 2^{n - ancillae}.
pub fn gate_list_isometry(gl: &GateList) -> DenseMap {
    let n = gl.num_qubits;
    let k = n - gl.num_ancillae;
    let mut u = DenseMap::zeros(1 << n, 1 << k);
    for x in 0..(1usize << k) {
        u.set(x << gl.num_ancillae, x, Complex64::new(1.0, 0.0));
    }
    for g in &gl.gates {
        apply_gate(&mut u, n, 1 << k, g);
    }
    u
}

/// Oracle round-trip for a lowered gate list: returns lambda with
/// evaluate(d) = lambda * isometry, or None on mismatch.
pub fn verify_gate_list_capped(
    d: &Diagram,
    gl: &GateList,
    cap: usize,
    tol: f64,
) -> Result<Option<Complex64>, OracleError> {
    let m = evaluate_capped(d, cap)?;
    if gl.num_qubits != d.outputs().len()
        || gl.num_qubits - gl.num_ancillae != d.inputs().len()
    {
        return Ok(None);
    }
    let iso = gate_list_isometry(gl);
    Ok(crate::oracle::equal_up_to_scalar(&m, &iso, tol))
}

/// Verifies an extracted circuit against the diagram's dense semantics,
/// returning the proportionality scalar.
pub fn verify_extraction(d: &Diagram, c: &ExtractedCircuit) -> Option<Complex64> {
    let gl = lower(c).ok()?;
    verify_gate_list_capped(d, &gl, DEFAULT_WIRE_CAP, DEFAULT_TOL).ok()?
}

// ---- OpenQASM-style text format ----

fn fmt_pi(p: Phase) -> String {
    let (num, den) = (p.num(), p.den());
    match (num, den) {
        (0, _) => "0".into(),
        (1, 1) => "pi".into(),
        (n, 1) => format!("{n}*pi"),
        (1, d) => format!("pi/{d}"),
        (n, d) => format!("{n}*pi/{d}"),
    }
}

fn parse_pi(s: &str) -> Result<Phase, ExtractError> {
    let s = s.trim();
    let bad = || ExtractError::Parse(format!("bad angle '{s}'"));
    if s == "0" {
        return Ok(Phase::ZERO);
    }
    let (num_str, rest) = match s.split_once("pi") {
        Some((a, b)) => (a.trim().trim_end_matches('*').trim(), b.trim()),
        None => return Err(bad()),
    };
    let num: i64 =
        if num_str.is_empty() { 1 } else { num_str.parse().map_err(|_| bad())? };
    let den: i64 = if rest.is_empty() {
        1
    } else {
        rest.strip_prefix('/').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?
    };
    Ok(Phase::new(num, den))
}

/// Emits a gate list in an OpenQASM-2-style text format; the ancilla
/// initialization is documented in a header comment since the format has no
/// isometry primitive.
pub fn to_qasm(gl: &GateList) -> String {
    let mut out = String::new();
    out.push_str("// extracted circuit\n");
    out.push_str(&format!("// ancillae: {} (last qubits, initialized to |0>)\n", gl.num_ancillae));
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", gl.num_qubits.max(1)));
    for g in &gl.gates {
        match *g {
            Gate::H(q) => out.push_str(&format!("h q[{q}];\n")),
            Gate::S(q) => out.push_str(&format!("s q[{q}];\n")),
            Gate::Sdg(q) => out.push_str(&format!("sdg q[{q}];\n")),
            Gate::X(q) => out.push_str(&format!("x q[{q}];\n")),
            Gate::Z(q) => out.push_str(&format!("z q[{q}];\n")),
            Gate::Cx(c, t) => out.push_str(&format!("cx q[{c}],q[{t}];\n")),
            Gate::Cz(c, t) => out.push_str(&format!("cz q[{c}],q[{t}];\n")),
            Gate::Rz(q, p) => out.push_str(&format!("rz({}) q[{q}];\n", fmt_pi(p))),
            Gate::GlobalPhase(p) => {
                out.push_str(&format!("// global phase: exp(i*{})\n", fmt_pi(p)))
            }
        }
    }
    out
}

pub fn from_qasm(s: &str) -> Result<GateList, ExtractError> {
    let bad = |l: &str| ExtractError::Parse(format!("bad line '{l}'"));
    let mut num_qubits = 0usize;
    let mut num_ancillae = 0usize;
    let mut gates = Vec::new();
    let parse_q = |tok: &str| -> Result<usize, ExtractError> {
        tok.trim()
            .strip_prefix("q[")
            .and_then(|t| t.strip_suffix(']'))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ExtractError::Parse(format!("bad qubit '{tok}'")))
    };
    for line in s.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("// ancillae:") {
            let count = rest.trim().split_whitespace().next().unwrap_or("0");
            num_ancillae = count.parse().map_err(|_| bad(line))?;
            continue;
        }
        if let Some(rest) = line.strip_prefix("// global phase: exp(i*") {
            let p = parse_pi(rest.trim_end_matches(')')).map_err(|_| bad(line))?;
            gates.push(Gate::GlobalPhase(p));
            continue;
        }
        if line.starts_with("//") || line.starts_with("OPENQASM") || line.starts_with("include") {
            continue;
        }
        let line = line.strip_suffix(';').ok_or_else(|| bad(line))?;
        if let Some(rest) = line.strip_prefix("qreg q[") {
            num_qubits = rest
                .strip_suffix(']')
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(line))?;
            continue;
        }
        if line.starts_with("creg") {
            continue;
        }
        let (op, args) = line.split_once(' ').ok_or_else(|| bad(line))?;
        let qs: Vec<&str> = args.split(',').collect();
        let gate = match (op, qs.as_slice()) {
            ("h", [q]) => Gate::H(parse_q(q)?),
            ("s", [q]) => Gate::S(parse_q(q)?),
            ("sdg", [q]) => Gate::Sdg(parse_q(q)?),
            ("x", [q]) => Gate::X(parse_q(q)?),
            ("z", [q]) => Gate::Z(parse_q(q)?),
            ("cx", [c, t]) => Gate::Cx(parse_q(c)?, parse_q(t)?),
            ("cz", [c, t]) => Gate::Cz(parse_q(c)?, parse_q(t)?),
            (rz, [q]) if rz.starts_with("rz(") => {
                let angle = rz
                    .strip_prefix("rz(")
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| bad(line))?;
                Gate::Rz(parse_q(q)?, parse_pi(angle)?)
            }
            _ => return Err(bad(line)),
        };
        gates.push(gate);
    }
    Ok(GateList { num_qubits, num_ancillae, gates })
}
