use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bagcq_core::encoder::{assemble, classify_database, extract_valuation, DbClassification};
use bagcq_core::gadgets::{alpha_witness, beta_witness, build_alpha, build_beta, build_gamma, gamma_witness};
use bagcq_core::polyreduce::normalize_hilbert;
use bagcq_core::qalgebra::{blowup, inequality_elimination_witness, power_product, product, strip_inequalities, DEFAULT_K_CAP};
use bagcq_core::{Database, Query, QueryExpr};
use bagcq_harness::artifacts::{read_check, read_instance, write_gadget, write_reduction};
use bagcq_harness::formats::{parse_database, parse_polynomial, parse_query, parse_query_expr, read_file, write_database, write_file, write_query};
use bagcq_harness::search::{search_scaled, SearchConfig, SearchMode};
use bagcq_harness::suites::{run_suite, SuiteParams};
use clap::{Parser, Subcommand, ValueEnum};

/// Bag-semantics conjunctive query containment toolkit.
#[derive(Parser)]
#[command(name = "bagcq", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Counts homomorphisms from a query (.cq) or expression (.qx) into a database.
    Eval {
        #[arg(short, long)]
        query: PathBuf,
        #[arg(short, long)]
        database: PathBuf,
    },
    /// Compiles a polynomial into (c, phi_s, phi_b).
    Reduce {
        #[arg(short, long)]
        poly: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Writes a multiplication gadget, its witness and its multiplier.
    Gadget {
        kind: GadgetKind,
        #[arg(long)]
        param: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Classifies a database against the arena of a reduction directory.
    Classify {
        #[arg(short, long)]
        database: PathBuf,
        #[arg(short = 'i', long)]
        dir: PathBuf,
    },
    /// Runs a verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        param: usize,
        #[arg(long, default_value_t = 3)]
        bound: u64,
        #[arg(long, default_value_t = 4)]
        max_domain: usize,
    },
    /// Searches for a database violating the check of a reduction or gadget directory.
    Search {
        #[arg(short = 'i', long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_domain: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        #[arg(long, default_value_t = 4)]
        max_facts: usize,
        #[arg(long, default_value_t = 100_000)]
        max_states: u64,
    },
    /// Structure and query transformations.
    Transform {
        #[command(subcommand)]
        op: Transform,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetKind {
    Beta,
    Gamma,
    Alpha,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Random,
    Exhaustive,
}

#[derive(Subcommand)]
enum Transform {
    /// Drops all inequalities of a query.
    StripNeq {
        #[arg(short, long)]
        query: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Replaces every element by k copies.
    Blowup {
        #[arg(short, long)]
        database: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Product of two databases.
    Product {
        #[arg(short, long)]
        database: PathBuf,
        #[arg(long)]
        with: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// k-fold product of a database with itself.
    PowerProduct {
        #[arg(short, long)]
        database: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Turns a separating database for strip(q_s) into one for q_s.
    EliminateNeq {
        #[arg(long)]
        q_s: PathBuf,
        #[arg(long)]
        q_b: PathBuf,
        #[arg(short, long)]
        database: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn load_query(path: &Path) -> Result<Query> {
    parse_query(&read_file(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_db(path: &Path) -> Result<Database> {
    parse_database(&read_file(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_expr(path: &Path) -> Result<QueryExpr> {
    if path.extension().is_some_and(|e| e == "qx") {
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(parse_query_expr(&read_file(path)?, Some(base)).with_context(|| format!("parsing {}", path.display()))?)
    } else {
        Ok(QueryExpr::leaf(load_query(path)?))
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_file(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Eval { query, database } => {
            let e = load_expr(&query)?;
            let d = load_db(&database)?;
            let c = e.eval(&d)?;
            println!("count: {c}");
            if let Some(n) = c.to_biguint_below(256) {
                println!("decimal: {n}");
            }
        }
        Cmd::Reduce { poly, out } => {
            let q = parse_polynomial(&read_file(&poly)?).with_context(|| format!("parsing {}", poly.display()))?;
            let inst = normalize_hilbert(&q)?;
            let enc = assemble(&inst)?;
            write_reduction(&out, &inst, &enc)?;
            println!("P_s = {}", inst.p_s);
            println!("P_b = {}", inst.p_b);
            println!("c_frak = {}", inst.c_frak);
            println!("j = {}, k = {}, cycle length = {}", enc.constants.j, enc.constants.k, enc.constants.l_len);
            println!("c1 = {}", enc.constants.c1);
            println!("c = {}", enc.c);
            println!("written to {}", out.display());
        }
        Cmd::Gadget { kind, param, out } => {
            let (g, w) = match kind {
                GadgetKind::Beta => (build_beta(param)?, beta_witness(param)?),
                GadgetKind::Gamma => (build_gamma(param)?, gamma_witness(param)?),
                GadgetKind::Alpha => (build_alpha(param)?, alpha_witness(param)?),
            };
            write_gadget(&out, &g, &w)?;
            let (s, b) = g.counts(&w)?;
            println!("multiplier = {}", g.multiplier);
            println!("witness: q_s = {s}, q_b = {b}");
            println!("written to {}", out.display());
        }
        Cmd::Classify { database, dir } => {
            let inst = read_instance(&dir)?;
            let d = load_db(&database)?;
            let class = classify_database(&d, &inst)?;
            println!("classification: {class:?}");
            if class != DbClassification::NotModel {
                let v = extract_valuation(&d, &inst)?;
                let vals: Vec<String> = v.iter().map(|(i, x)| format!("x{i} = {x}")).collect();
                println!("valuation: {}", vals.join(", "));
                println!("violates the instance: {}", inst.violated_at(&v)?);
            }
        }
        Cmd::Verify {
            suite,
            trials,
            seed,
            param,
            bound,
            max_domain,
        } => {
            let p = SuiteParams { n: param, max_domain, bound };
            let r = run_suite(&suite, &p, trials, seed)?;
            print!("{r}");
            if !r.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Search {
            dir,
            max_domain,
            trials,
            seed,
            mode,
            max_facts,
            max_states,
        } => {
            let check = read_check(&dir)?;
            let cfg = SearchConfig {
                max_domain,
                max_facts_per_relation: max_facts,
                trials,
                seed,
                mode: match mode {
                    Mode::Random => SearchMode::Random,
                    Mode::Exhaustive => SearchMode::Exhaustive,
                },
                max_states,
            };
            match search_scaled(&check, &cfg)? {
                Some(d) => {
                    let (s, b) = check.sides(&d)?;
                    println!("violation: {s} > {b}");
                    print!("{}", write_database(&d));
                    return Ok(ExitCode::from(1));
                }
                None => println!("no violation within budget"),
            }
        }
        Cmd::Transform { op } => match op {
            Transform::StripNeq { query, out } => emit(&write_query(&strip_inequalities(&load_query(&query)?)), out.as_deref())?,
            Transform::Blowup { database, k, out } => emit(&write_database(&blowup(&load_db(&database)?, k)?), out.as_deref())?,
            Transform::Product { database, with, out } => {
                emit(&write_database(&product(&load_db(&database)?, &load_db(&with)?)?), out.as_deref())?
            }
            Transform::PowerProduct { database, k, out } => {
                emit(&write_database(&power_product(&load_db(&database)?, k)?), out.as_deref())?
            }
            Transform::EliminateNeq { q_s, q_b, database, out } => {
                let d = inequality_elimination_witness(&load_query(&q_s)?, &load_query(&q_b)?, &load_db(&database)?, DEFAULT_K_CAP)?;
                emit(&write_database(&d), out.as_deref())?
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
