use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use syscause::bisim::intervention_closure;
use syscause::causality::{causal_projection, find_causal_chains, Ac1Mode, ChainQuery};
use syscause::dot;
use syscause::dsl::{parse, parse_query, Document};
use syscause::hp::{export_hp, export_hp_path};
use syscause::logic::ident;
use syscause::model::TransitionMode;
use syscause::query::{run_query, Evidence, QueryError, QueryReport, RunOptions};

const EXIT_FALSE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "syscause",
    version,
    about = "Causal analysis of component-based system models"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Synchronous updates: every component steps at once
    #[arg(long, global = true, conflicts_with = "async_")]
    sync: bool,
    /// Asynchronous updates: one component per step
    #[arg(long = "async", global = true)]
    async_: bool,
    /// Keep self-loop transitions at rule fixpoints
    #[arg(long, global = true)]
    self_loops: bool,
    /// Admit covers where one side contains the other
    #[arg(long, global = true)]
    allow_trivial_split: bool,
    /// Require each cause component to hold its final value at the start
    #[arg(long, global = true)]
    strict_ac1: bool,
    /// Largest configuration space to enumerate
    #[arg(long, global = true, value_name = "N")]
    max_states: Option<usize>,
    /// Write the JSON report here
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every query stanza in the file, in order
    Run { file: PathBuf },
    /// Model-check a formula at a named configuration
    Check {
        file: PathBuf,
        config: String,
        formula: String,
    },
    /// Find the minimal causes of reaching `to` from `from`, or check one candidate
    Cause {
        file: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_delimiter = ',', required = true)]
        effect: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        candidate: Option<Vec<String>>,
    },
    /// Find the minimal causal chains between two configurations
    Chain {
        file: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_delimiter = ',', required = true)]
        effect: Vec<String>,
        #[arg(long, default_value_t = 8)]
        max: usize,
    },
    /// Decide bisimilarity under intervention of two pointed models
    Bisim {
        file: PathBuf,
        left: String,
        right: String,
        /// Model file holding `right`; defaults to FILE
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// Check whether two component sets form an interface split
    Decompose {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        left: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        right: Vec<String>,
    },
    /// List the interventions that guarantee recovery
    Recover(Recovery),
    /// Pick the cheapest guaranteed recovery
    Mincost(Recovery),
    /// Pick the recovery with the best utility
    Utility(Recovery),
    /// Write a Graphviz graph to stdout
    ExportDot {
        file: PathBuf,
        #[command(subcommand)]
        what: DotKind,
    },
    /// Write the structural-equation model as JSON to stdout
    ExportHp {
        file: PathBuf,
        /// Initial configuration
        config: String,
        /// Unroll along these further configurations, in order
        #[arg(long, value_delimiter = ',')]
        path: Option<Vec<String>>,
    },
}

#[derive(Args)]
struct Recovery {
    file: PathBuf,
    config: String,
    /// Formula describing failure
    #[arg(long)]
    fail: String,
}

#[derive(Subcommand)]
enum DotKind {
    /// Transition graph reachable from a configuration
    Reachable { config: String },
    /// Causal projection of the chains between two configurations
    Projection {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_delimiter = ',', required = true)]
        effect: Vec<String>,
        #[arg(long, default_value_t = 8)]
        max: usize,
    },
    /// Model variants reachable by interventions
    Variants,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        Failure {
            code: if e.is_cap() { EXIT_CAP } else { EXIT_USAGE },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn load(path: &Path, g: &Global) -> Result<Document, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let doc = parse(&text).map_err(|d| usage(format!("{}:\n{d}", path.display())))?;
    let mut s = *doc.model.settings();
    if g.sync {
        s.mode = TransitionMode::Sync;
    }
    if g.async_ {
        s.mode = TransitionMode::Async;
    }
    s.self_loops |= g.self_loops;
    s.allow_trivial_split |= g.allow_trivial_split;
    if let Some(n) = g.max_states {
        s.max_states = n;
    }
    Ok(doc.with_settings(s))
}

fn set(names: &[String]) -> String {
    let items: Vec<String> = names.iter().map(|n| ident(n)).collect();
    format!("{{{}}}", items.join(", "))
}

fn summary(r: &QueryReport) -> String {
    let detail = match &r.evidence {
        Evidence::Check { explanation } => explanation.witness.as_ref().map(|w| serde_json::to_string(w).unwrap()),
        Evidence::Cause { causes, .. } => {
            let sets: Vec<String> = causes.iter().map(|c| set(c)).collect();
            let head = if r.verdict || sets.is_empty() {
                "causes"
            } else {
                "rejected candidate"
            };
            Some(format!("{head}: {}", sets.join(" ")))
        }
        Evidence::Chain { chains, projection } => Some(format!(
            "{} chain(s), projection of {} configuration(s), acyclic: {}",
            chains.len(),
            projection.configurations.len(),
            projection.acyclic
        )),
        Evidence::Bisim { outcome } => match outcome {
            syscause::bisim::BisimOutcome::Bisimilar(rel) => Some(format!("{} related pair(s)", rel.pairs.len())),
            syscause::bisim::BisimOutcome::Distinguished { formula } => Some(format!("distinguished by {formula}")),
        },
        Evidence::Decompose { interface, violations } => match interface {
            Some(i) => Some(format!("interface {}", set(i))),
            None => Some(violations.join("; ")),
        },
        Evidence::Recovery { chosen, candidates } => {
            let ok: Vec<&str> = candidates
                .iter()
                .filter(|c| c.qualifies)
                .map(|c| c.intervention.as_str())
                .collect();
            Some(format!(
                "chosen: {}; qualifying: [{}]",
                chosen.as_deref().unwrap_or("none"),
                ok.join(", ")
            ))
        }
    };
    match detail {
        Some(d) => format!("{}\t{}\n\t{}", r.verdict, r.query, d),
        None => format!("{}\t{}", r.verdict, r.query),
    }
}

fn write_report(g: &Global, value: &impl serde::Serialize) -> Result<(), Failure> {
    if let Some(path) = &g.report {
        let text = serde_json::to_string_pretty(value).expect("reports serialize");
        fs::write(path, text + "\n").map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn options(file: &Path, g: &Global) -> RunOptions {
    RunOptions {
        base_dir: file.parent().map(Path::to_path_buf),
        strict_ac1: g.strict_ac1,
    }
}

fn stanza(file: &Path, text: String, g: &Global) -> Result<bool, Failure> {
    let doc = load(file, g)?;
    let q = parse_query(&text, &doc).map_err(|d| usage(format!("{text}\n{d}")))?;
    let r = run_query(&doc, &q, &options(file, g))?;
    println!("{}", summary(&r));
    write_report(g, &r)?;
    Ok(r.verdict)
}

fn run_all(file: &Path, g: &Global) -> Result<bool, Failure> {
    let doc = load(file, g)?;
    if doc.queries.is_empty() {
        return Err(usage(format!("{}: no query stanzas", file.display())));
    }
    let opts = options(file, g);
    let mut reports = Vec::new();
    for q in &doc.queries {
        let r = run_query(&doc, q, &opts)?;
        println!("{}", summary(&r));
        reports.push(r);
    }
    write_report(g, &reports)?;
    Ok(reports.iter().all(|r| r.verdict))
}

fn config<'a>(doc: &'a Document, name: &str) -> Result<&'a syscause::model::Configuration, Failure> {
    doc.config(name)
        .ok_or_else(|| usage(format!("unknown configuration `{name}`")))
}

fn export_dot(file: &Path, what: &DotKind, g: &Global) -> Result<bool, Failure> {
    let doc = load(file, g)?;
    let m = &doc.model;
    let text = match what {
        DotKind::Reachable { config: c } => dot::reachable_dot(m, config(&doc, c)?).map_err(QueryError::from)?,
        DotKind::Projection { from, to, effect, max } => {
            let q = ChainQuery {
                start: config(&doc, from)?.clone(),
                end: config(&doc, to)?.clone(),
                effect: m.component_set(effect).map_err(QueryError::from)?,
                max_len: *max,
                mode: if g.strict_ac1 {
                    Ac1Mode::Strict
                } else {
                    Ac1Mode::Example
                },
            };
            let chains = find_causal_chains(m, &q).map_err(QueryError::from)?;
            dot::projection_dot(m, &causal_projection(m, &chains))
        }
        DotKind::Variants => dot::variant_dot(m, &intervention_closure(m).map_err(QueryError::from)?),
    };
    print!("{text}");
    Ok(true)
}

fn export(file: &Path, c: &str, path: &Option<Vec<String>>, g: &Global) -> Result<bool, Failure> {
    let doc = load(file, g)?;
    let start = config(&doc, c)?.clone();
    let hp = match path {
        None => export_hp(&doc.model, &start),
        Some(rest) => {
            let mut seq = vec![start];
            for n in rest {
                seq.push(config(&doc, n)?.clone());
            }
            export_hp_path(&doc.model, &seq)
        }
    }
    .map_err(usage)?;
    println!("{}", serde_json::to_string_pretty(&hp).expect("models serialize"));
    Ok(true)
}

fn dispatch(cli: &Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Run { file } => run_all(file, g),
        Command::Check { file, config, formula } => stanza(file, format!("check {} |= {formula}", ident(config)), g),
        Command::Cause {
            file,
            from,
            to,
            effect,
            candidate,
        } => {
            let mut text = format!("cause from {} to {} effect {}", ident(from), ident(to), set(effect));
            if let Some(c) = candidate {
                text += &format!(" candidate {}", set(c));
            }
            stanza(file, text, g)
        }
        Command::Chain {
            file,
            from,
            to,
            effect,
            max,
        } => stanza(
            file,
            format!(
                "chain from {} to {} effect {} max {max}",
                ident(from),
                ident(to),
                set(effect)
            ),
            g,
        ),
        Command::Bisim {
            file,
            left,
            right,
            other,
        } => {
            let mut text = format!("bisim {} ~ {}", ident(left), ident(right));
            if let Some(p) = other {
                let p = fs::canonicalize(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                text += &format!(" in {:?}", p.display().to_string());
            }
            stanza(file, text, g)
        }
        Command::Decompose { file, left, right } => stanza(file, format!("decompose {} {}", set(left), set(right)), g),
        Command::Recover(r) => stanza(&r.file, format!("recover {} fail {}", ident(&r.config), r.fail), g),
        Command::Mincost(r) => stanza(&r.file, format!("mincost {} fail {}", ident(&r.config), r.fail), g),
        Command::Utility(r) => stanza(&r.file, format!("utility {} fail {}", ident(&r.config), r.fail), g),
        Command::ExportDot { file, what } => export_dot(file, what, g),
        Command::ExportHp { file, config, path } => export(file, config, path, g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FALSE),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
