use clap::{Args, Parser, Subcommand, ValueEnum};
use krein::czkit::{cz_decompose, cz_verify};
use krein::KreinError;
use krein_cli::acceptance::{self, verify_all, Level};
use krein_cli::config::ExperimentConfig;
use krein_cli::experiments::{self, Outcome, Profile};
use krein_cli::report::{cell, emit, Manifest, ReportRow, Table};
use krein_cli::spec::{parse_list, parse_step, parse_weight};
use serde_json::json;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "krein", version, about = "Krein systems generated by A_p weights: experiments and verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Half width of the lambda window.
    #[arg(long, default_value_t = 128.0)]
    lambda: f64,
    /// Number of lambda nodes (power of two).
    #[arg(long = "nodes", default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    dr: f64,
    #[arg(long = "r-max", default_value_t = 20.0)]
    r_max: f64,
    /// Stride over r nodes when taking sups in r.
    #[arg(long = "r-every", default_value_t = 1)]
    r_every: usize,
    /// Directory for CSV and manifest; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Repeat at (dr/2, 2 Lambda).
    #[arg(long)]
    convergence: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GridArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            lambda: self.lambda,
            n: self.n,
            dr: self.dr,
            r_max: self.r_max,
            r_every: self.r_every,
            out_dir: self.out.clone(),
            convergence: self.convergence,
            seed: self.seed,
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Critical,
    Bump,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Bump,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the acceptance suite.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
        /// Run only these criteria, e.g. `2,5`.
        #[arg(long)]
        only: Option<String>,
    },
    /// r -> ||P(r, .) - e^{i . r}||_{L^p_w} with its sup and plateau diagnostic.
    Steklov {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Log-log slope of sup_r ||P - e||_{L^p_w} against delta.
    Slope {
        #[arg(long, value_enum, default_value = "bump")]
        family: Family,
        /// List: `a,b,c` or `lo:hi:logK`.
        #[arg(long, default_value = "1e-3:1e-1:log5")]
        deltas: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Growth of ||P_[-n,n] u||_{L^p} for a profile u on the edge of L^p2.
    Diverge {
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "1,2,4,8,16,32,64")]
        n: String,
        #[arg(long, default_value_t = 512.0)]
        lambda: f64,
        #[arg(long = "nodes", default_value_t = 32768)]
        nodes: usize,
        #[arg(long, value_enum, default_value = "critical")]
        profile: ProfileArg,
        #[arg(long)]
        out: Option<String>,
    },
    /// Log-log slope of sup_r ||R_{k,r}||_{L^p} against delta (bump family).
    Remainder {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "1e-3:1e-1:log5")]
        deltas: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// r -> ||R_{1,r}||_{L^p_w} and its L^2 + L^inf split value.
    Mixed {
        #[arg(long)]
        weight: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Dyadic CZ decomposition of a step function `x0,..,xn;v1,..,vn`.
    Cz {
        #[arg(long)]
        u: String,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, default_value_t = krein::czkit::DEFAULT_DEPTH)]
        depth: u32,
    },
}

enum Failure {
    Krein(KreinError),
    Io(std::io::Error),
    Verification,
}

impl From<KreinError> for Failure {
    fn from(e: KreinError) -> Failure {
        Failure::Krein(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Io(e)
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("KREIN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second initialization is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs an experiment, once more refined when asked, writing a partial
/// manifest when it fails.
fn run_experiment(cfg: &ExperimentConfig, f: impl Fn(&ExperimentConfig) -> krein::Result<Outcome>) -> Result<(), Failure> {
    let mut todo = vec![(cfg.clone(), "")];
    if cfg.convergence {
        todo.push((cfg.refined(), "_refined"));
    }
    for (c, suffix) in todo {
        match f(&c) {
            Ok(o) => {
                let m = Manifest::new(&o.name, &c, &o.table, o.summary.clone());
                emit(c.out_dir.as_deref(), &format!("{}{suffix}", o.name), &o.table, &m)?;
                eprintln!("{}", o.summary);
            }
            Err(e) => {
                if let Some(d) = c.out_dir.as_deref() {
                    let t = Table::default();
                    let mut m = Manifest::new("partial", &c, &t, json!({}));
                    m.error = Some(e.to_string());
                    emit(Some(d), &format!("partial{suffix}"), &t, &m)?;
                }
                return Err(e.into());
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Verify { level, seed, out, only } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let results = match only {
                Some(list) => parse_list(&list)?.iter().map(|&id| acceptance::run(id as u32, seed)).collect(),
                None => verify_all(level, seed),
            };
            let mut rows: Vec<ReportRow> = Vec::new();
            for c in &results {
                println!("{}", c.line());
                rows.extend(c.rows.iter().cloned());
            }
            let t = Table::from_rows(&rows);
            let cfg = ExperimentConfig { seed, out_dir: out.clone(), ..ExperimentConfig::default() };
            let passed: Vec<u32> = results.iter().filter(|c| c.passed()).map(|c| c.id).collect();
            let failed: Vec<u32> = results.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
            let m = Manifest::new("verify", &cfg, &t, json!({ "passed": passed, "failed": failed }));
            if out.is_some() {
                emit(out.as_deref(), "verify", &t, &m)?;
            }
            if failed.is_empty() { Ok(()) } else { Err(Failure::Verification) }
        }
        Cmd::Steklov { weight, p, grid } => {
            let cfg = ExperimentConfig { weight, p, ..grid.config() };
            run_experiment(&cfg, experiments::steklov_sweep)
        }
        Cmd::Slope { family: Family::Bump, deltas, p, grid } => {
            let cfg = ExperimentConfig { weight: "bump:delta=1".into(), deltas: parse_list(&deltas)?, p, ..grid.config() };
            run_experiment(&cfg, experiments::perturbative_slope)
        }
        Cmd::Remainder { k, deltas, p, grid } => {
            let cfg = ExperimentConfig { weight: "bump:delta=1".into(), deltas: parse_list(&deltas)?, p, k, ..grid.config() };
            run_experiment(&cfg, experiments::remainder_scaling)
        }
        Cmd::Mixed { weight, p, grid } => {
            parse_weight(&weight)?;
            let cfg = ExperimentConfig { weight, p, k: 1, ..grid.config() };
            run_experiment(&cfg, experiments::mixed_norm_table)
        }
        Cmd::Diverge { p2, p, n, lambda, nodes, profile, out } => {
            let ns = parse_list(&n)?;
            let profile = match profile {
                ProfileArg::Critical => Profile::Critical,
                ProfileArg::Bump => Profile::Bump,
            };
            let cfg = ExperimentConfig { lambda, n: nodes, p, p2, n_list: ns.clone(), out_dir: out, r_max: 1.0, ..ExperimentConfig::default() };
            run_experiment(&cfg, |c| Ok(experiments::divergence_outcome(&experiments::divergence_probe(p2, p, &ns, c.lambda, c.n, profile)?, p, p2)))
        }
        Cmd::Cz { u, beta, q, depth } => {
            let u = parse_step(&u)?;
            let d = cz_decompose(&u, beta, q, depth)?;
            let mut t = Table::new(&["n", "j", "left", "right"]);
            for iv in &d.intervals {
                t.push(vec![iv.n.to_string(), iv.j.to_string(), cell(iv.left()), cell(iv.right())]);
            }
            print!("{}", t.to_csv());
            let rep = cz_verify(&d, &u);
            eprintln!("{}", json!({ "total_mu": d.total_mu, "containment": rep.containment, "selection": rep.selection, "disjoint": rep.disjoint, "sum_bound": rep.sum_bound }));
            if rep.all() { Ok(()) } else { Err(Failure::Verification) }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Krein(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
