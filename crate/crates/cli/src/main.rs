//! Command-line front door: graph and SEM files in, text or `key=value`
//! lines out.
//!
//! Exit status: 0 success, 1 usage error, 2 domain error (invalid sets,
//! non-amenable graphs, malformed files), 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use adjopt::adjust::{self, AdjustError, FailedCondition};
use adjopt::estimate::{self, Dataset};
use adjopt::graph::{
    ancestry, d_separated, is_maximal, list_dag_extensions, orient_closure, parse_graph,
    GraphError, NodeSet, Pdag, Relation, DEFAULT_EXTENSION_LIMIT,
};
use adjopt::oracle;
use adjopt::sem::{self, LinearSem};
use adjopt::simbench::{self, SimConfig};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "adjopt",
    about = "Valid, efficient and optimal covariate adjustment sets in causal graphs",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Kv,
}

#[derive(Args)]
struct XyArgs {
    /// Comma-separated treatment labels.
    #[arg(long, value_name = "NODES")]
    x: String,
    /// Comma-separated outcome labels.
    #[arg(long, value_name = "NODES")]
    y: String,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a graph file, validate it, and report basic facts.
    Validate { graph: PathBuf },
    /// Orient a PDAG to its maximal closure and print it.
    Close { graph: PathBuf },
    /// Ancestral relations of a node set.
    Ancestry {
        graph: PathBuf,
        #[arg(long, value_name = "NODES")]
        of: String,
        /// parents|children|ancestors|descendants|possible_ancestors|possible_descendants
        #[arg(long)]
        relation: String,
    },
    /// d-separation of x and y given z in a maximal PDAG.
    Dsep {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        /// Conditioning set; omit or pass "" for the empty set.
        #[arg(long, value_name = "NODES", default_value = "")]
        z: String,
    },
    /// Check the generalized adjustment criterion for z.
    Vas {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, value_name = "NODES")]
        z: String,
    },
    /// The asymptotically optimal adjustment set O(x, y).
    Optimal {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
    },
    /// The Adjust(x, y) set.
    Adjust {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
    },
    /// Variance-reducing pruning of a valid adjustment set.
    Prune {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, value_name = "NODES")]
        z: String,
    },
    /// Qualitative asymptotic-variance comparison of two valid sets.
    Compare {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, value_name = "NODES")]
        z1: String,
        #[arg(long, value_name = "NODES")]
        z2: String,
    },
    /// Exact asymptotic variances of the adjusted OLS estimator.
    Avar {
        sem: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, value_name = "NODES")]
        z: String,
        /// Skip the validity check (the formula is then only meaningful
        /// for Gaussian errors).
        #[arg(long, action = ArgAction::SetTrue)]
        allow_invalid: bool,
    },
    /// Total effects of x on y in a linear SEM.
    TotalEffect {
        sem: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
    },
    /// OLS total-effect estimate from CSV data; pass a SEM file instead of
    /// "none" to also print the exact effect and asymptotic variance.
    Estimate {
        /// SEM file or "none".
        sem: String,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, value_name = "NODES")]
        z: String,
    },
    /// Run the adjustment-set benchmark described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results.csv and summary.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force verifiers.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Enumerate every valid adjustment set.
    Vas {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
    },
    /// Asymptotic variances of every valid adjustment set; checks that the
    /// optimal set attains the minimum.
    Optimality {
        sem: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
    },
    /// d-separation decided over all DAGs represented by a maximal PDAG.
    Dsep {
        graph: PathBuf,
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, value_name = "NODES", default_value = "")]
        z: String,
    },
}

enum CliError {
    Usage(String),
    Domain(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Io(m) => m,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::OverlappingSets(_) | GraphError::DuplicateInSet(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<AdjustError> for CliError {
    fn from(e: AdjustError) -> Self {
        match e {
            AdjustError::Graph(g) => g.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<sem::SemError> for CliError {
    fn from(e: sem::SemError) -> Self {
        match e {
            sem::SemError::Graph(g) => g.into(),
            sem::SemError::Adjust(a) => a.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<estimate::EstimateError> for CliError {
    fn from(e: estimate::EstimateError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<simbench::SimError> for CliError {
    fn from(e: simbench::SimError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<oracle::OracleError> for CliError {
    fn from(e: oracle::OracleError) -> Self {
        match e {
            oracle::OracleError::Graph(g) => g.into(),
            oracle::OracleError::Adjust(a) => a.into(),
            oracle::OracleError::Sem(s) => s.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

fn load_graph(path: &PathBuf) -> Result<Pdag, CliError> {
    Ok(parse_graph(&read(path)?)?)
}

fn load_sem(path: &PathBuf) -> Result<LinearSem<f64>, CliError> {
    Ok(LinearSem::parse(&read(path)?)?)
}

/// Splits a comma-separated node list; empty input is the empty set.
fn parse_set(g: &Pdag, spec: &str) -> Result<NodeSet, CliError> {
    let labels: Vec<&str> =
        spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    NodeSet::from_labels(g, &labels).map_err(|e| match e {
        GraphError::DuplicateInSet(l) => {
            CliError::Usage(format!("duplicate node {l:?} in set {spec:?}"))
        }
        other => other.into(),
    })
}

fn labels_csv(set: &NodeSet, g: &Pdag) -> String {
    set.labels(g).join(",")
}

/// Six significant digits for human-readable numbers.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

fn print_set(fmt: Format, key: &str, set: &NodeSet, g: &Pdag) {
    match fmt {
        Format::Kv => println!("{key}={}", labels_csv(set, g)),
        Format::Human => {
            if set.is_empty() {
                println!("(empty set)");
            } else {
                println!("{}", set.labels(g).join(" "));
            }
        }
    }
}

fn print_matrix(fmt: Format, name: &str, m: &adjopt::EffectMatrix64) {
    for (i, row) in m.rows().iter().enumerate() {
        for (j, col) in m.cols().iter().enumerate() {
            match fmt {
                Format::Kv => println!("{name}[{row}][{col}]={}", m.entry(i, j)),
                Format::Human => println!("{name}({row}, {col}) = {}", sig6(m.entry(i, j))),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let fmt = cli.format;
    match cli.command {
        Command::Validate { graph } => {
            let g = load_graph(&graph)?;
            let report = is_maximal(&g);
            match fmt {
                Format::Kv => {
                    println!("nodes={}", g.n());
                    println!("directed_edges={}", g.directed_edge_count());
                    println!("undirected_edges={}", g.undirected_edge_count());
                    println!("dag={}", g.is_dag());
                    println!("maximal={}", report.is_maximal());
                    println!("violations={}", report.violations.len());
                }
                Format::Human => {
                    println!(
                        "valid PDAG: {} nodes, {} directed and {} undirected edges",
                        g.n(),
                        g.directed_edge_count(),
                        g.undirected_edge_count()
                    );
                    if report.is_maximal() {
                        println!("maximal: yes");
                    } else {
                        println!(
                            "maximal: no ({} forbidden induced subgraph(s))",
                            report.violations.len()
                        );
                        for v in report.violations.iter().take(10) {
                            let nodes: Vec<&str> =
                                v.nodes.iter().map(|id| g.label(*id)).collect();
                            println!("  pattern ({}): {}", v.pattern.id(), nodes.join(" "));
                        }
                    }
                }
            }
        }
        Command::Close { graph } => {
            let g = load_graph(&graph)?;
            let closed = orient_closure(&g)?;
            print!("{closed}");
        }
        Command::Ancestry { graph, of, relation } => {
            let g = load_graph(&graph)?;
            let rel = Relation::parse(&relation)
                .ok_or_else(|| CliError::Usage(format!("unknown relation {relation:?}")))?;
            let s = parse_set(&g, &of)?;
            let out = ancestry(&g, &s, rel);
            print_set(fmt, "set", &out, &g);
        }
        Command::Dsep { graph, xy, z } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let z = parse_set(&g, &z)?;
            let r = d_separated(&g, &x, &y, &z)?;
            match fmt {
                Format::Kv => {
                    println!("separated={}", r.separated);
                    if let Some(w) = &r.witness {
                        let labels: Vec<&str> = w.iter().map(|v| g.label(*v)).collect();
                        println!("witness={}", labels.join(","));
                    }
                }
                Format::Human => {
                    if r.separated {
                        println!("separated");
                    } else {
                        let w = r.witness.expect("witness accompanies connection");
                        let labels: Vec<&str> = w.iter().map(|v| g.label(*v)).collect();
                        println!("not separated; open path: {}", labels.join(" "));
                    }
                }
            }
        }
        Command::Vas { graph, xy, z } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let z = parse_set(&g, &z)?;
            let d = adjust::is_valid_adjustment(&g, &x, &y, &z)?;
            match fmt {
                Format::Kv => {
                    println!("valid={}", d.valid());
                    match &d.failed_condition {
                        None => {}
                        Some(FailedCondition::Amenability { witness }) => {
                            println!("failed_condition=amenability");
                            let l: Vec<&str> = witness.iter().map(|v| g.label(*v)).collect();
                            println!("detail={}", l.join(","));
                        }
                        Some(FailedCondition::ForbiddenOverlap { node }) => {
                            println!("failed_condition=forbidden_overlap");
                            println!("detail={}", g.label(*node));
                        }
                        Some(FailedCondition::OpenPath { witness }) => {
                            println!("failed_condition=open_path");
                            let l: Vec<&str> = witness.iter().map(|v| g.label(*v)).collect();
                            println!("detail={}", l.join(","));
                        }
                    }
                }
                Format::Human => println!("{}", d.describe(&g)),
            }
        }
        Command::Optimal { graph, xy } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let o = adjust::optimal_set(&g, &x, &y)?;
            print_set(fmt, "optimal", &o, &g);
        }
        Command::Adjust { graph, xy } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let a = adjust::adjust_set(&g, &x, &y)?;
            print_set(fmt, "adjust", &a, &g);
        }
        Command::Prune { graph, xy, z } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let z = parse_set(&g, &z)?;
            let p = adjust::prune(&g, &x, &y, &z)?;
            print_set(fmt, "pruned", &p, &g);
        }
        Command::Compare { graph, xy, z1, z2 } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let z1 = parse_set(&g, &z1)?;
            let z2 = parse_set(&g, &z2)?;
            let r = adjust::compare(&g, &x, &y, &z1, &z2)?;
            match fmt {
                Format::Kv => {
                    println!("verdict={}", r.verdict.as_str());
                    println!("second_y_sep={}", r.second_no_worse.y_sep);
                    println!("second_x_sep={}", r.second_no_worse.x_sep);
                    println!("first_y_sep={}", r.first_no_worse.y_sep);
                    println!("first_x_sep={}", r.first_no_worse.x_sep);
                }
                Format::Human => println!("{}", r.verdict.as_str()),
            }
        }
        Command::Avar { sem: sem_path, xy, z, allow_invalid } => {
            let model = load_sem(&sem_path)?;
            let g = model.graph().clone();
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let z = parse_set(&g, &z)?;
            let a = if allow_invalid {
                sem::avar_unchecked(&model, &x, &y, &z)?
            } else {
                sem::avar(&model, &x, &y, &z)?
            };
            print_matrix(fmt, "avar", &a);
        }
        Command::TotalEffect { sem: sem_path, xy } => {
            let model = load_sem(&sem_path)?;
            let g = model.graph().clone();
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let te = sem::total_effect(&model, &x, &y)?;
            print_matrix(fmt, "effect", &te);
        }
        Command::Estimate { sem: sem_arg, data, xy, z } => {
            let dataset: Dataset<f64> = Dataset::from_csv(&read(&data)?)?;
            let split = |s: &str| -> Vec<String> {
                s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
            };
            let (xs, ys, zs) = (split(&xy.x), split(&xy.y), split(&z));
            let est = estimate::ols_total_effect(&dataset, &xs, &ys, &zs)?;
            print_matrix(fmt, "estimate", &est);
            if sem_arg != "none" {
                let model = load_sem(&PathBuf::from(&sem_arg))?;
                let g = model.graph().clone();
                let x = parse_set(&g, &xy.x)?;
                let y = parse_set(&g, &xy.y)?;
                let zset = parse_set(&g, &z)?;
                let te = sem::total_effect(&model, &x, &y)?;
                print_matrix(fmt, "truth", &te);
                let a = sem::avar(&model, &x, &y, &zset)?;
                print_matrix(fmt, "avar", &a);
            }
        }
        Command::Simulate { config, out } => {
            let cfg = SimConfig::parse(&read(&config)?)?;
            let output = run_simulation(&cfg)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;
            let csv_path = out.join("results.csv");
            let summary_path = out.join("summary.txt");
            std::fs::write(&csv_path, &output.csv)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", csv_path.display())))?;
            std::fs::write(&summary_path, &output.summary)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", summary_path.display())))?;
            match fmt {
                Format::Kv => {
                    println!("csv={}", csv_path.display());
                    println!("summary={}", summary_path.display());
                    print!("{}", output.summary);
                }
                Format::Human => {
                    println!("wrote {}", csv_path.display());
                    println!("wrote {}", summary_path.display());
                    print!("{}", output.summary);
                }
            }
        }
        Command::Oracle(cmd) => run_oracle(fmt, cmd)?,
    }
    Ok(())
}

/// Runs the benchmark, honoring the ADJOPT_THREADS cap.
fn run_simulation(cfg: &SimConfig) -> Result<simbench::SimOutput, CliError> {
    if let Ok(threads) = std::env::var("ADJOPT_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| CliError::Usage(format!("ADJOPT_THREADS={threads:?} is not a number")))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Domain(format!("thread pool: {e}")))?;
        Ok(pool.install(|| simbench::run_sim(cfg))?)
    } else {
        Ok(simbench::run_sim(cfg)?)
    }
}

fn run_oracle(fmt: Format, cmd: OracleCommand) -> Result<(), CliError> {
    match cmd {
        OracleCommand::Vas { graph, xy } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let sets = oracle::all_valid_adjustment_sets(&g, &x, &y)?;
            match fmt {
                Format::Kv => {
                    println!("count={}", sets.len());
                    for (i, s) in sets.iter().enumerate() {
                        println!("set.{i}={}", labels_csv(s, &g));
                    }
                }
                Format::Human => {
                    println!("{} valid adjustment set(s):", sets.len());
                    for s in &sets {
                        if s.is_empty() {
                            println!("  (empty set)");
                        } else {
                            println!("  {}", s.labels(&g).join(" "));
                        }
                    }
                }
            }
        }
        OracleCommand::Optimality { sem: sem_path, xy } => {
            let model = load_sem(&sem_path)?;
            let g = model.graph().clone();
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let report = oracle::brute_optimality(&model, &x, &y)?;
            match fmt {
                Format::Kv => {
                    println!("optimal={}", labels_csv(&report.optimal, &g));
                    for (s, a) in &report.table {
                        println!("avar[{}]={}", labels_csv(s, &g), a.entry(0, 0));
                    }
                }
                Format::Human => {
                    println!("optimal set: {}", report.optimal.labels(&g).join(" "));
                    for (s, a) in &report.table {
                        let name = if s.is_empty() {
                            "(empty set)".to_string()
                        } else {
                            s.labels(&g).join(" ")
                        };
                        println!("  avar {:<24} {}", name, sig6(a.entry(0, 0)));
                    }
                }
            }
        }
        OracleCommand::Dsep { graph, xy, z } => {
            let g = load_graph(&graph)?;
            let x = parse_set(&g, &xy.x)?;
            let y = parse_set(&g, &xy.y)?;
            let z = parse_set(&g, &z)?;
            g.require_disjoint(&[&x, &y, &z])?;
            let separated = oracle::dsep_by_extension(&g, &x, &y, &z, DEFAULT_EXTENSION_LIMIT)?;
            match fmt {
                Format::Kv => println!("separated={separated}"),
                Format::Human => {
                    let count = list_dag_extensions(&g, DEFAULT_EXTENSION_LIMIT)?.count();
                    println!(
                        "{} (checked over {count} represented DAG(s))",
                        if separated { "separated" } else { "not separated" }
                    );
                }
            }
        }
    }
    Ok(())
}
