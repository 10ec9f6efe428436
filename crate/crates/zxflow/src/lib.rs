//! Analysis of combinatorial ZX-diagrams decorated with Pauli webs and Pauli
//! semiwebs: ZX-flow verification, finding, and focusing; flow-preserving
//! Clifford rewriting; and extraction of Clifford-isometry-plus-Pauli-exponential
//! circuits. A dense tensor oracle validates every semantic claim at desk scale.

pub mod diagram;
pub mod extract;
pub mod flow;
mod gf2;
pub mod oracle;
pub mod phase;
pub mod rewrite;
pub mod webs;

pub mod corpus;

pub use diagram::{Diagram, Edge, NodeId, NodeType, OpenGraph, WireEnd, WireId};
pub use phase::Phase;
pub use webs::PauliSupport;
