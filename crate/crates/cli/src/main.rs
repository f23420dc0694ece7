//! Command-line driver: validation, evaluation, class analysis, normal
//! forms, difference exploration, bound computation, dependency-graph
//! export and look-ahead removal over transducer files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dtla::normalize::{self, Stage};
use dtla::removal::{BoundMode, RemovalOutcome, DEFAULT_TUPLE_CAP};
use dtla::trees::NodeAddress;
use dtla::{syntax, Dtla};

/// Deterministic top-down tree transducers with regular look-ahead:
/// analysis, normal forms and look-ahead removal.
#[derive(Parser)]
#[command(name = "dtla", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FileArg {
    /// Transducer file.
    file: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a transducer file and check every structural invariant.
    Validate(FileArg),
    /// Run the transducer on an input tree.
    Run {
        #[command(flatten)]
        file: FileArg,
        /// Input tree, e.g. "sigma(sigma(b))".
        #[arg(long)]
        tree: String,
        /// Evaluate a single state instead of the whole transducer.
        #[arg(long)]
        state: Option<String>,
        /// Allow look-ahead states as rank-0 leaves in the input tree.
        #[arg(long)]
        extended: bool,
    },
    /// Report the structural classes (linear, ultralinear, bounded erasing,
    /// output-monadic, depth-uniform, la-uniform, earliest, canonical).
    Classify {
        #[command(flatten)]
        file: FileArg,
        #[arg(long)]
        json: bool,
    },
    /// Construct a normal form and write it in the file format.
    Normalize {
        #[command(flatten)]
        file: FileArg,
        /// Target normal form.
        #[arg(long, value_enum)]
        to: StageArg,
        /// Output file (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the pipeline trace as JSON instead of the transducer.
        #[arg(long)]
        json: bool,
    },
    /// Compute height bounds: the class difference bound of the original
    /// and the output/ancestral/difference bounds of its normalized form.
    Bounds {
        #[command(flatten)]
        file: FileArg,
        /// Print only the automatically computed class difference bound.
        #[arg(long)]
        auto: bool,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustively enumerate contexts and report the observed difference
    /// trees and difference tuples.
    Diff {
        #[command(flatten)]
        file: FileArg,
        /// Enumerate contexts with at most this many non-hole nodes.
        #[arg(long)]
        max_context_nodes: usize,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether the transducer is equivalent to one without
    /// look-ahead, and construct it if so.
    RemoveLa {
        #[command(flatten)]
        file: FileArg,
        /// Difference bound to run with.
        #[arg(long, conflicts_with_all = ["auto_bound", "unbounded"])]
        bound: Option<usize>,
        /// Use the class difference bound (ultralinear + bounded erasing).
        #[arg(long, conflicts_with = "unbounded")]
        auto_bound: bool,
        /// Run without height checks; may not terminate on its own, so the
        /// tuple cap applies.
        #[arg(long)]
        unbounded: bool,
        /// Hard cap on constructed states; hitting it is reported as
        /// inconclusive, never as a negative answer.
        #[arg(long, default_value_t = DEFAULT_TUPLE_CAP)]
        cap: usize,
        /// Output file for the constructed transducer (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Build the two-run dependency graph and analyze depth uniformity.
    Depgraph {
        #[command(flatten)]
        file: FileArg,
        /// Emit the graph in DOT format.
        #[arg(long)]
        dot: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Report the origin of an output node: the state, the input node and
    /// the position inside the applied rule that produced it.
    Origin {
        #[command(flatten)]
        file: FileArg,
        #[arg(long)]
        tree: String,
        /// Output node address: dotted 1-based path, "eps" for the root.
        #[arg(long)]
        node: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Initialized,
    Uniform,
    Earliest,
    Canonical,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Initialized => Stage::Initialized,
            StageArg::Uniform => Stage::Uniform,
            StageArg::Earliest => Stage::Earliest,
            StageArg::Canonical => Stage::Canonical,
        }
    }
}

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 3;
const EXIT_NOT_APPLICABLE: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

enum CliError {
    Syntax(syntax::SyntaxError),
    Core(dtla::Error),
    Io(std::io::Error),
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Syntax(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(dtla::Error::NotApplicable(_)) => EXIT_NOT_APPLICABLE,
            _ => EXIT_INPUT,
        }
    }
}

impl From<syntax::SyntaxError> for CliError {
    fn from(e: syntax::SyntaxError) -> Self {
        CliError::Syntax(e)
    }
}
impl From<dtla::Error> for CliError {
    fn from(e: dtla::Error) -> Self {
        CliError::Core(e)
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn load(path: &Path) -> Result<Dtla, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(syntax::parse(&text)?)
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Initialization and uniformization applied on demand for the commands
/// whose analysis is defined on that form.
fn ensure_initialized_uniform(m: &Dtla) -> Result<Dtla, CliError> {
    let already = !m.la.states.is_empty()
        && m.la.states.iter().all(|p| {
            m.axioms.get(p).is_some_and(|t| {
                matches!(&t.label, dtla::trees::Label::StateCall(_))
                    && t.children.len() == 1
                    && t.children[0].label == dtla::trees::Label::Var(0)
            })
        })
        && dtla::classify::infer_la_map(m).0;
    if already {
        return Ok(m.clone());
    }
    eprintln!("note: normalizing to the initialized la-uniform form first");
    let base = m.trim();
    if !base.is_total() {
        return Err(dtla::Error::NotTotal.into());
    }
    let i = normalize::make_initialized(&base)?;
    Ok(normalize::make_la_uniform(&i)?)
}

fn dispatch(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Validate(f) => {
            let text = std::fs::read_to_string(&f.file)?;
            match syntax::parse(&text) {
                Ok(m) => {
                    let report = m.validate();
                    if report.valid() {
                        println!(
                            "valid: {} states, {} look-ahead states, {} rules",
                            m.states.len(),
                            m.la.states.len(),
                            m.rules.len()
                        );
                        Ok(EXIT_OK)
                    } else {
                        for fnd in &report.findings {
                            println!("invalid: {}", fnd.message);
                        }
                        Ok(EXIT_INPUT)
                    }
                }
                Err(e) => {
                    println!("invalid: {e}");
                    Ok(EXIT_INPUT)
                }
            }
        }
        Command::Run {
            file,
            tree,
            state,
            extended,
        } => {
            let m = load(&file.file)?;
            let s = syntax::parse_input_tree(&m, &tree, extended)?;
            let result = match &state {
                None => m.eval(&s),
                Some(q) => {
                    if !m.has_state(q) {
                        return Err(CliError::Input(format!("unknown state {q}")));
                    }
                    m.eval_state(&dtla::trees::name(q), &s)
                }
            };
            match result {
                Some(t) => println!("{t}"),
                None => println!("undefined"),
            }
            Ok(EXIT_OK)
        }
        Command::Classify { file, json } => {
            let m = load(&file.file)?;
            let report = dtla::classify::classify(&m.trim());
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("linear:          {}", report.linear);
                println!("ultralinear:     {}", report.ultralinear);
                println!("bounded erasing: {}", report.b_erasing);
                println!("output-monadic:  {}", report.output_monadic);
                println!("depth-uniform:   {}", report.depth_uniform);
                println!("la-uniform:      {}", report.la_uniform);
                match report.earliest {
                    Some(e) => println!("earliest:        {e}"),
                    None => println!("earliest:        not applicable (not la-uniform)"),
                }
                match report.canonical {
                    Some(c) => println!("canonical:       {c}"),
                    None => println!("canonical:       not applicable"),
                }
                if let Some(map) = &report.la_map {
                    let entries: Vec<String> =
                        map.iter().map(|(q, p)| format!("{q}->{p}")).collect();
                    println!("la-map:          {}", entries.join(" "));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Normalize {
            file,
            to,
            output,
            json,
        } => {
            let m = load(&file.file)?;
            let trace = normalize::normalization_trace(&m, to.into())?;
            let (_, last) = trace.stages.last().expect("at least one stage");
            if json {
                let stages: Vec<_> = trace
                    .stages
                    .iter()
                    .map(|(s, d)| {
                        json!({
                            "stage": format!("{s:?}").to_lowercase(),
                            "states": d.states.len(),
                            "rules": d.rules.len(),
                            "transducer": syntax::unparse(d),
                        })
                    })
                    .collect();
                let doc = json!({
                    "stages": stages,
                    "sumfix": trace.sumfix,      // null unless the uniform stage ran
                    "maxfix": trace.maxfix,
                    "earliestSteps": trace.earliest_steps,
                    "boundTransport":
                        "difference bound h for the input becomes h + earliestSteps for the final stage",
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                if let Some(p) = output {
                    std::fs::write(p, syntax::unparse(last))?;
                }
            } else {
                emit(output.as_ref(), &syntax::unparse(last))?;
            }
            Ok(EXIT_OK)
        }
        Command::Bounds { file, auto, json } => {
            let m = load(&file.file)?;
            let report = dtla::bounds::bounds_report(&m)?;
            if auto {
                match report.class_difference_bound {
                    Some(v) => {
                        if json {
                            println!("{}", json!({ "classDifferenceBound": v }));
                        } else {
                            println!("{v}");
                        }
                        Ok(EXIT_OK)
                    }
                    None => Err(dtla::Error::NotApplicable(
                        report
                            .class_refusal
                            .unwrap_or_else(|| "out of class".into()),
                    )
                    .into()),
                }
            } else if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
                Ok(EXIT_OK)
            } else {
                match report.class_difference_bound {
                    Some(v) => println!("class difference bound: {v}"),
                    None => println!(
                        "class difference bound: not applicable ({})",
                        report.class_refusal.as_deref().unwrap_or("out of class")
                    ),
                }
                println!("output bound (normalized): {}", report.output_bound);
                match (report.ancestral_bound, &report.ancestral_justification) {
                    (Some(v), Some(j)) => println!("ancestral bound (normalized): {v} via {j:?}"),
                    _ => println!("ancestral bound (normalized): not applicable"),
                }
                match report.difference_bound_original {
                    Some(v) => println!("difference bound (original): {v}"),
                    None => println!("difference bound (original): not applicable"),
                }
                for line in &report.provenance {
                    println!("  {line}");
                }
                Ok(EXIT_OK)
            }
        }
        Command::Diff {
            file,
            max_context_nodes,
            json,
        } => {
            let m = load(&file.file)?;
            let base = m.trim();
            if !base.is_total() {
                return Err(dtla::Error::NotTotal.into());
            }
            let obs = dtla::diffs::enumerate_diffs(&base, max_context_nodes)?;
            let report = obs.report();
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("budget: {} context nodes", report.budget);
                println!("difference trees ({}):", report.trees.len());
                for t in &report.trees {
                    println!("  {t}");
                }
                println!("difference tuples ({}):", report.tuples.len());
                for t in &report.tuples {
                    println!("  ({})", t.join(", "));
                }
                println!("max difference-tree height observed: {}", report.max_height);
                println!("exhausted: {}", report.exhausted);
            }
            Ok(EXIT_OK)
        }
        Command::RemoveLa {
            file,
            bound,
            auto_bound,
            unbounded,
            cap,
            output,
            json,
        } => {
            let m = load(&file.file)?;
            let mode = match (bound, auto_bound, unbounded) {
                (Some(h), _, _) => BoundMode::Given(h),
                (None, true, _) => BoundMode::Auto,
                (None, false, true) => BoundMode::Unbounded,
                (None, false, false) => BoundMode::Auto,
            };
            let report = dtla::removal::remove_lookahead(&m, mode, cap)?;
            match &report.outcome {
                RemovalOutcome::Dtop {
                    dtop,
                    bypassed,
                    bound_used,
                } => {
                    let mut text = String::new();
                    text.push_str("# constructed transducer without look-ahead\n");
                    if !dtop.tuple_table.is_empty() {
                        let table: serde_json::Map<String, serde_json::Value> = dtop
                            .tuple_table
                            .iter()
                            .map(|(n, t)| {
                                (
                                    n.to_string(),
                                    json!(t.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
                                )
                            })
                            .collect();
                        text.push_str(&format!(
                            "# tuple-table: {}\n",
                            serde_json::Value::Object(table)
                        ));
                    }
                    text.push_str(&syntax::unparse(&dtop.dtla));
                    if json {
                        let doc = json!({
                            "answer": "yes",
                            "bypassed": bypassed,
                            "boundUsed": bound_used,
                            "transportedBound": report.transported_bound,
                            "states": dtop.dtla.states.len(),
                            "tupleTable": dtop.tuple_table.iter().map(|(n, t)| {
                                json!({"state": n.to_string(),
                                       "tuple": t.iter().map(|x| x.to_string()).collect::<Vec<_>>()})
                            }).collect::<Vec<_>>(),
                            "dtop": syntax::unparse(&dtop.dtla),
                        });
                        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                        if let Some(p) = output {
                            std::fs::write(p, text)?;
                        }
                    } else {
                        emit(output.as_ref(), &text)?;
                        if output.is_some() {
                            println!("yes: wrote a {}-state transducer", dtop.dtla.states.len());
                        }
                    }
                }
                RemovalOutcome::No(refusal) => {
                    if json {
                        let doc = json!({
                            "answer": "no",
                            "transportedBound": report.transported_bound,
                            "refusal": refusal,
                        });
                        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                    } else {
                        println!("no: {refusal:?}");
                    }
                }
                RemovalOutcome::CapExceeded {
                    tuples_constructed,
                    cap,
                } => {
                    if json {
                        let doc = json!({
                            "answer": "unknown",
                            "reason": "cap-exceeded",
                            "tuplesConstructed": tuples_constructed,
                            "cap": cap,
                        });
                        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                    } else {
                        println!(
                            "unknown: stopped after constructing {tuples_constructed} states (cap {cap}); this is not a negative answer"
                        );
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Depgraph {
            file,
            dot,
            output,
            json,
        } => {
            let m = load(&file.file)?;
            let norm = ensure_initialized_uniform(&m)?;
            let g = dtla::bounds::build_depgraph(&norm)?;
            let analysis = dtla::bounds::analyze_graph(&g);
            if dot {
                emit(output.as_ref(), &g.to_dot())?;
                return Ok(EXIT_OK);
            }
            if json {
                let edges: Vec<_> = g
                    .edges
                    .iter()
                    .map(|e| {
                        json!({
                            "from": e.from.to_string(),
                            "to": e.to.to_string(),
                            "rule1": format!("r{}", e.rule1),
                            "rule2": format!("r{}", e.rule2),
                            "child": e.child,
                            "out1": dtla::bounds::branch_to_string(&e.out1),
                            "out2": dtla::bounds::branch_to_string(&e.out2),
                            "weight": e.weight(),
                        })
                    })
                    .collect();
                let wdu = match &analysis {
                    dtla::bounds::DepthUniformity::Weak { bound } => {
                        json!({"weakDepthUniform": true, "pathWeightBound": bound})
                    }
                    dtla::bounds::DepthUniformity::CycleWitness { edges, weight } => json!({
                        "weakDepthUniform": false,
                        "cycleWeight": weight,
                        "cycleAt": edges.first().map(|e| e.from.to_string()),
                        "cycleEdges": edges.iter().map(|e| json!({
                            "from": e.from.to_string(),
                            "to": e.to.to_string(),
                            "out1": dtla::bounds::branch_to_string(&e.out1),
                            "out2": dtla::bounds::branch_to_string(&e.out2),
                        })).collect::<Vec<_>>(),
                    }),
                };
                let doc = json!({
                    "nodes": g.nodes.len(),
                    "entries": g.entries.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                    "edges": edges,
                    "rules": g.rules.iter().enumerate()
                        .map(|(i, k)| format!("r{i} = {k}")).collect::<Vec<_>>(),
                    "analysis": wdu,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!("nodes: {}  edges: {}", g.nodes.len(), g.edges.len());
                match &analysis {
                    dtla::bounds::DepthUniformity::Weak { bound } => {
                        println!("weak depth-uniform: yes, entry-path weight bound {bound}")
                    }
                    dtla::bounds::DepthUniformity::CycleWitness { edges, weight } => {
                        println!(
                            "weak depth-uniform: no, cycle of weight {weight} at {}",
                            edges[0].from
                        )
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Origin { file, tree, node } => {
            let m = load(&file.file)?;
            let norm = ensure_initialized_uniform(&m)?;
            let s = syntax::parse_input_tree(&norm, &tree, false)?;
            let addr = NodeAddress::parse(&node)
                .ok_or_else(|| CliError::Input(format!("bad node address {node}")))?;
            let (q, u, z) = dtla::diffs::origin(&norm, &s, &addr)?;
            println!("state: {q}");
            println!("input node: {u}");
            println!("rhs node: {z}");
            Ok(EXIT_OK)
        }
    }
}
