//! Dense semantics at desk scale: evaluate diagrams as complex matrices by
//! brute-force contraction over wire assignments, realize (twisted) local
//! states, and fire Pauli webs to verify the signed push-through identity.

use num_complex::Complex64;
use thiserror::Error;

use crate::diagram::{Diagram, NodeId, NodeType, WireId};
use crate::phase::Phase;
use crate::webs::{self, Letter, PauliSupport};

pub const DEFAULT_WIRE_CAP: usize = 16;
pub const DEFAULT_TOL: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A dense complex matrix, row-major; shape 2^|O| x 2^|I| for diagram maps.
#[derive(Clone, PartialEq, Debug)]
pub struct DenseMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseMap {
    pub fn zeros(rows: usize, cols: usize) -> DenseMap {
        DenseMap { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> DenseMap {
        let mut m = DenseMap::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn scaled(&self, s: Complex64) -> DenseMap {
        DenseMap {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn mul(&self, other: &DenseMap) -> DenseMap {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = DenseMap::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.add_at(r, c, a * other.get(k, c));
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &DenseMap) -> DenseMap {
        let mut out = DenseMap::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.set(
                            r1 * other.rows + r2,
                            c1 * other.cols + c2,
                            a * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entrywise closeness within `tol`, absolute after normalizing by the
    /// larger max-magnitude entry.
    pub fn approx_eq(&self, other: &DenseMap, tol: f64) -> bool {
        if self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        let scale = self.max_abs().max(other.max_abs()).max(1.0);
        self.data
            .iter()
            .zip(&other.data)
            .all(|(a, b)| (a - b).norm() <= tol * scale)
    }
}

#[derive(Clone, Debug)]
pub struct FiringReport {
    pub input_pauli: Vec<Letter>,
    pub output_pauli: Vec<Letter>,
    pub sign: i8,
}

#[derive(Error, Debug)]
pub enum OracleError {
    #[error("diagram has {wires} wires, above the evaluation cap {cap}")]
    TooLarge { wires: usize, cap: usize },
    #[error("H local state requires degree 2, got {0}")]
    HDegree(usize),
    #[error("support is not a Pauli web")]
    NotWeb,
    #[error("firing identity failed for a valid web (implementation bug): {0}")]
    FiringMismatch(String),
}

/// The local state of a node: |0..0> + e^{i phase}|1..1> for Z,
/// |+..+> + e^{i phase}|-..-> for X, and the normalized H gate state.
pub fn local_state(t: NodeType, phase: Phase, degree: usize) -> Result<DenseMap, OracleError> {
    if t == NodeType::H && degree != 2 {
        return Err(OracleError::HDegree(degree));
    }
    let dim = 1usize << degree;
    let mut v = DenseMap::zeros(dim, 1);
    for idx in 0..dim {
        v.set(idx, 0, local_amp(t, phase, degree, idx));
    }
    Ok(v)
}

/// Local state with the spider phase twisted by `alpha`; twisting has no
/// effect on H gates.
pub fn twisted_local_state(
    t: NodeType,
    phase: Phase,
    degree: usize,
    alpha: Phase,
) -> Result<DenseMap, OracleError> {
    match t {
        NodeType::H => local_state(t, phase, degree),
        _ => local_state(t, phase + alpha, degree),
    }
}

/// Amplitude of the local state at a basis index (bits big-endian over the
/// node's wire-ends). Constant-time; used by the contraction loop.
fn local_amp(t: NodeType, phase: Phase, degree: usize, idx: usize) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    match t {
        NodeType::Z => {
            if degree == 0 {
                one + phase.cis()
            } else if idx == 0 {
                one
            } else if idx == (1 << degree) - 1 {
                phase.cis()
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        NodeType::X => {
            let parity = (idx.count_ones() % 2) as i32;
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            FRAC_1_SQRT_2.powi(degree as i32) * (one + phase.cis() * sign)
        }
        NodeType::H => {
            // degree 2: (|00> + |01> + |10> - |11>)/sqrt(2)
            let sign = if idx == 3 { -1.0 } else { 1.0 };
            Complex64::new(FRAC_1_SQRT_2 * sign, 0.0)
        }
    }
}

/// Evaluates a diagram to its 2^|O| x 2^|I| matrix by summing local-state
/// amplitudes over all wire-bit assignments. Boundary slot 0 is the most
/// significant bit.
pub fn evaluate(d: &Diagram) -> Result<DenseMap, OracleError> {
    evaluate_capped(d, DEFAULT_WIRE_CAP)
}

pub fn evaluate_capped(d: &Diagram, cap: usize) -> Result<DenseMap, OracleError> {
    let wires = d.wire_ids();
    if wires.len() > cap {
        return Err(OracleError::TooLarge { wires: wires.len(), cap });
    }
    for (n, t, _) in d.nodes() {
        if t == NodeType::H && d.degree(n) != 2 {
            return Err(OracleError::HDegree(d.degree(n)));
        }
    }
    let widx: std::collections::BTreeMap<WireId, usize> =
        wires.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let nodes: Vec<(NodeType, Phase, Vec<usize>)> = d
        .nodes()
        .map(|(n, t, p)| (t, p, d.node_wires(n).iter().map(|w| widx[w]).collect()))
        .collect();
    let in_pos: Vec<usize> = d.inputs().iter().map(|w| widx[w]).collect();
    let out_pos: Vec<usize> = d.outputs().iter().map(|w| widx[w]).collect();
    let mut m = DenseMap::zeros(1 << out_pos.len(), 1 << in_pos.len());
    for assign in 0u64..(1u64 << wires.len()) {
        let bit = |i: usize| (assign >> i) & 1 == 1;
        let mut amp = d.scalar();
        for (t, p, adj) in &nodes {
            let mut idx = 0usize;
            for &wi in adj {
                idx = (idx << 1) | bit(wi) as usize;
            }
            amp *= local_amp(*t, *p, adj.len(), idx);
            if amp.norm_sqr() == 0.0 {
                break;
            }
        }
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut r = 0usize;
        for &wi in &out_pos {
            r = (r << 1) | bit(wi) as usize;
        }
        let mut c = 0usize;
        for &wi in &in_pos {
            c = (c << 1) | bit(wi) as usize;
        }
        m.add_at(r, c, amp);
    }
    Ok(m)
}

/// 2x2 Pauli matrix for a letter.
pub fn pauli_matrix(l: Letter) -> DenseMap {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let data = match l {
        Letter::I => vec![o, z, z, o],
        Letter::X => vec![z, o, o, z],
        Letter::Y => vec![z, -i, i, z],
        Letter::Z => vec![o, z, z, -o],
    };
    DenseMap { rows: 2, cols: 2, data }
}

/// Kronecker product of Pauli matrices, index 0 most significant.
pub fn pauli_string_matrix(letters: &[Letter]) -> DenseMap {
    let mut m = DenseMap::identity(1);
    for &l in letters {
        m = m.kron(&pauli_matrix(l));
    }
    m
}

/// The local eigenvalue of a web's restricted Pauli on a node's state: 1 for
/// H gates and spiders without opposite-type support; otherwise the phase
/// factor with one +-i per Y end (self-loops counted twice).
fn local_eigenvalue(d: &Diagram, n: NodeId, t: NodeType, phase: Phase, w: &PauliSupport) -> Complex64 {
    if t == NodeType::H {
        return Complex64::new(1.0, 0.0);
    }
    let legs = d.node_wires(n);
    let opp = |l: WireId| match t {
        NodeType::Z => w.has_x(l),
        _ => w.has_z(l),
    };
    let full_opp = !legs.is_empty() && legs.iter().all(|&l| opp(l));
    if !full_opp {
        return Complex64::new(1.0, 0.0);
    }
    let y_ends = legs.iter().filter(|&&l| w.has_z(l) && w.has_x(l)).count() as i32;
    let i_pow = match t {
        NodeType::Z => Complex64::new(0.0, -1.0),
        _ => Complex64::new(0.0, 1.0),
    };
    phase.cis() * i_pow.powi(y_ends)
}

/// Combinatorial firing coefficient of a support: the product of local
/// eigenvalues over all nodes times one -1 per Y-coloured wire that is
/// interior or input-only. For a Pauli web w with boundary strings P, Q this
/// is the sign in Q D P = sigma D; for a semiweb it relates Q D P to the
/// diagram with each node's defect twist added to its phase.
pub fn firing_coefficient(d: &Diagram, w: &PauliSupport) -> Complex64 {
    let mut sigma = Complex64::new(1.0, 0.0);
    for (n, t, p) in d.nodes() {
        sigma *= local_eigenvalue(d, n, t, p, w);
    }
    for (wid, _, _) in d.wires() {
        if !(w.has_z(wid) && w.has_x(wid)) {
            continue;
        }
        let interior = !d.is_boundary_wire(wid);
        let input_only = d.is_input_wire(wid) && !d.is_output_wire(wid);
        if interior || input_only {
            sigma = -sigma;
        }
    }
    sigma
}

/// Fires a Pauli web: returns boundary Pauli strings P (inputs) and Q
/// (outputs) with a sign such that D = sign * Q D P, and checks the identity
/// densely. Failure on a valid web is an implementation bug and errors.
pub fn verify_firing(d: &Diagram, w: &PauliSupport) -> Result<FiringReport, OracleError> {
    verify_firing_capped(d, w, DEFAULT_WIRE_CAP, DEFAULT_TOL)
}

pub fn verify_firing_capped(
    d: &Diagram,
    w: &PauliSupport,
    cap: usize,
    tol: f64,
) -> Result<FiringReport, OracleError> {
    if !webs::is_pauli_web(d, w) {
        return Err(OracleError::NotWeb);
    }
    let m = evaluate_capped(d, cap)?;
    let input_pauli = w.letters_on(d.inputs());
    let output_pauli = w.letters_on(d.outputs());

    let sigma = firing_coefficient(d, w);

    let sign = if (sigma - 1.0).norm() <= 1e-6 {
        1i8
    } else if (sigma + 1.0).norm() <= 1e-6 {
        -1i8
    } else if m.max_abs() <= tol {
        1i8 // zero map: any sign satisfies the identity
    } else {
        return Err(OracleError::FiringMismatch(format!("non-unit sign {sigma}")));
    };

    let p = pauli_string_matrix(&input_pauli);
    let q = pauli_string_matrix(&output_pauli);
    let rhs = q.mul(&m).mul(&p).scaled(Complex64::new(sign as f64, 0.0));
    if !m.approx_eq(&rhs, tol) {
        return Err(OracleError::FiringMismatch(format!(
            "D != {sign} * Q D P for web {:?}",
            w.support()
        )));
    }
    Ok(FiringReport { input_pauli, output_pauli, sign })
}

/// Returns lambda with a = lambda * b within `tol`, or `None`. Both-zero
/// matrices are related by lambda = 1.
pub fn equal_up_to_scalar(a: &DenseMap, b: &DenseMap, tol: f64) -> Option<Complex64> {
    if a.rows != b.rows || a.cols != b.cols {
        return None;
    }
    let bmax = b.max_abs();
    if bmax <= tol {
        return if a.max_abs() <= tol { Some(Complex64::new(1.0, 0.0)) } else { None };
    }
    let idx = b
        .data
        .iter()
        .enumerate()
        .max_by(|(_, u), (_, v)| u.norm().total_cmp(&v.norm()))
        .map(|(i, _)| i)
        .expect("nonempty matrix");
    let lambda = a.data[idx] / b.data[idx];
    if lambda.norm() <= tol {
        return None;
    }
    let scale = a.max_abs().max((lambda * bmax).norm()).max(1.0);
    let ok = a
        .data
        .iter()
        .zip(&b.data)
        .all(|(u, v)| (u - lambda * v).norm() <= tol * scale);
    if ok {
        Some(lambda)
    } else {
        None
    }
}
