//! Command-line front end: diagram validation, web reports, flow search,
//! verification and focusing, flow-preserving simplification, circuit
//! extraction, and dense-oracle verification.
//!
//! Exit codes: 0 success, 1 validation/verification failure, 2 not found,
//! 3 resource cap exceeded, 4 I/O or parse error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zxflow::diagram::Diagram;
use zxflow::extract::{extract, from_qasm, lower, to_qasm, verify_gate_list_capped};
use zxflow::flow::{find_zx_flow, focus, verify_zx_flow, Strength, ZXFlow};
use zxflow::oracle::OracleError;
use zxflow::rewrite::{make_graph_like, skeletonize, trace_to_json_lines};
use zxflow::webs::{classify, web_basis, BasisMode};

#[derive(Parser)]
#[command(name = "zxflow", about = "ZX-diagram webs, flows, rewriting, and extraction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check diagram well-formedness and print any violations.
    Validate { file: PathBuf },
    /// Print a basis of Pauli webs (or semiwebs) with optional classes.
    Webs {
        file: PathBuf,
        /// Base the report on semiwebs instead of webs.
        #[arg(long)]
        semiwebs: bool,
        /// Annotate each web with its boundary class.
        #[arg(long)]
        classify: bool,
    },
    /// Search for a plain ZX-flow and write it as JSON.
    FlowFind {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Verify a flow against a diagram.
    FlowCheck {
        file: PathBuf,
        flow: PathBuf,
        /// Additionally require the flow to be strong.
        #[arg(long)]
        strong: bool,
    },
    /// Rewrite a flow into focused form.
    Focus {
        file: PathBuf,
        flow: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simplify a diagram while transporting its flow.
    Simplify {
        file: PathBuf,
        flow: PathBuf,
        /// Output diagram path.
        #[arg(short, long)]
        out: PathBuf,
        /// Output flow path.
        #[arg(short, long)]
        flow_out: PathBuf,
        /// Reduce all the way to a skeleton (graph-like normal form with
        /// only gadget/boundary-chain interior Clifford structure).
        #[arg(long, conflicts_with = "graph_like")]
        skeleton: bool,
        /// Stop at graph-like form (the default).
        #[arg(long)]
        graph_like: bool,
        /// Write the rewrite trace as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Extract a circuit and write it in OpenQASM-style text.
    Extract {
        file: PathBuf,
        flow: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check a circuit against the diagram's dense semantics.
    Verify {
        file: PathBuf,
        circuit: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Wire cap for the dense oracle.
        #[arg(long, default_value_t = 16)]
        cap: usize,
    },
}

const EXIT_FAIL: u8 = 1;
const EXIT_NOT_FOUND: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_IO: u8 = 4;

fn read_diagram(path: &PathBuf) -> Result<Diagram, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    Diagram::from_json(&text).map_err(|e| {
        eprintln!("error: cannot parse {}: {e}", path.display());
        EXIT_IO
    })
}

fn read_flow(path: &PathBuf) -> Result<ZXFlow, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    ZXFlow::from_json(&text).map_err(|e| {
        eprintln!("error: cannot parse {}: {e}", path.display());
        EXIT_IO
    })
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), u8> {
    std::fs::write(path, contents).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_IO
    })
}

fn checked_flow(d: &Diagram, f: &ZXFlow) -> Result<(), u8> {
    let (ok, violations) = verify_zx_flow(d, f);
    if ok {
        Ok(())
    } else {
        for v in violations {
            println!("violation [{}]: {}", v.code, v.message);
        }
        Err(EXIT_FAIL)
    }
}

fn run(cli: Cli) -> Result<(), u8> {
    match cli.cmd {
        Cmd::Validate { file } => {
            let d = read_diagram(&file)?;
            let violations = d.validate();
            for v in &violations {
                println!("violation [{}]: {}", v.code, v.message);
            }
            if violations.is_empty() {
                println!("ok: {} nodes, {} wires", d.num_nodes(), d.num_wires());
                Ok(())
            } else {
                Err(EXIT_FAIL)
            }
        }
        Cmd::Webs { file, semiwebs, classify: want_class } => {
            let d = read_diagram(&file)?;
            let mode = if semiwebs { BasisMode::SemiwebsOnly } else { BasisMode::WebsOnly };
            let basis = web_basis(&d, mode);
            println!("basis size: {}", basis.len());
            for (i, w) in basis.iter().enumerate() {
                println!("-- web {i} --");
                if want_class {
                    match classify(&d, w) {
                        Ok(c) => println!("class: {c:?}"),
                        Err(_) => println!("class: (semiweb)"),
                    }
                }
                print!("{}", zxflow::webs::dump(&d, w));
            }
            Ok(())
        }
        Cmd::FlowFind { file, out } => {
            let d = read_diagram(&file)?;
            match find_zx_flow(&d) {
                Some(f) => {
                    write_file(&out, &f.to_json())?;
                    println!("flow found: {} ordered spiders", f.order.len());
                    Ok(())
                }
                None => {
                    eprintln!("no ZX-flow found");
                    Err(EXIT_NOT_FOUND)
                }
            }
        }
        Cmd::FlowCheck { file, flow, strong } => {
            let d = read_diagram(&file)?;
            let f = read_flow(&flow)?;
            if strong && f.strength != Strength::Strong {
                println!("violation [flow-strength]: flow is not strong");
                return Err(EXIT_FAIL);
            }
            checked_flow(&d, &f)?;
            println!("ok: {:?} flow verifies", f.strength);
            Ok(())
        }
        Cmd::Focus { file, flow, out } => {
            let d = read_diagram(&file)?;
            let f = read_flow(&flow)?;
            checked_flow(&d, &f)?;
            let (focused, report) = focus(&d, &f);
            write_file(&out, &focused.to_json())?;
            println!(
                "focused: {} flow webs and {} logical webs rewritten",
                report.flow_webs_modified, report.logical_webs_modified
            );
            Ok(())
        }
        Cmd::Simplify { file, flow, out, flow_out, skeleton, graph_like: _, log } => {
            let d = read_diagram(&file)?;
            let f = read_flow(&flow)?;
            checked_flow(&d, &f)?;
            let (d2, f2, trace) = if skeleton {
                skeletonize(&d, &f)
            } else {
                make_graph_like(&d, &f)
            }
            .map_err(|e| {
                eprintln!("error: simplification failed: {e}");
                EXIT_FAIL
            })?;
            write_file(&out, &d2.to_json())?;
            write_file(&flow_out, &f2.to_json())?;
            if let Some(log_path) = log {
                write_file(&log_path, &trace_to_json_lines(&trace))?;
            }
            println!(
                "simplified: {} nodes, {} wires, {} trace steps",
                d2.num_nodes(),
                d2.num_wires(),
                trace.len()
            );
            Ok(())
        }
        Cmd::Extract { file, flow, out } => {
            let d = read_diagram(&file)?;
            let f = read_flow(&flow)?;
            checked_flow(&d, &f)?;
            let circuit = extract(&d, &f).map_err(|e| {
                eprintln!("error: extraction failed: {e}");
                EXIT_FAIL
            })?;
            let gl = lower(&circuit).map_err(|e| {
                eprintln!("error: lowering failed: {e}");
                EXIT_FAIL
            })?;
            write_file(&out, &to_qasm(&gl))?;
            println!(
                "extracted: {} exponentials, {} gates, {} ancillae",
                circuit.exps.len(),
                gl.gates.len(),
                gl.num_ancillae
            );
            Ok(())
        }
        Cmd::Verify { file, circuit, tol, cap } => {
            let d = read_diagram(&file)?;
            let text = std::fs::read_to_string(&circuit).map_err(|e| {
                eprintln!("error: cannot read {}: {e}", circuit.display());
                EXIT_IO
            })?;
            let gl = from_qasm(&text).map_err(|e| {
                eprintln!("error: cannot parse {}: {e}", circuit.display());
                EXIT_IO
            })?;
            match verify_gate_list_capped(&d, &gl, cap, tol) {
                Ok(Some(scalar)) => {
                    println!("ok: scalar {:+.9e}{:+.9e}i", scalar.re, scalar.im);
                    Ok(())
                }
                Ok(None) => {
                    println!("mismatch: circuit does not match the diagram");
                    Err(EXIT_FAIL)
                }
                Err(OracleError::TooLarge { wires, cap }) => {
                    eprintln!("refused: {wires} wires exceeds the oracle cap {cap}");
                    Err(EXIT_CAP)
                }
                Err(e) => {
                    eprintln!("error: oracle failed: {e}");
                    Err(EXIT_FAIL)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
