//! `pcspan`: generate, solve, verify and benchmark packing-covering spanner instances.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use pcspan::gen::{generate, GenParams, Regime};
use pcspan::greedy::{solve_pcs, SolveConfig, SolveReport};
use pcspan::io::{instance_to_json, load_instance};
use pcspan::junction::{min_density_junction_tree, JunctionConfig, Mode};
use pcspan::oracle::{brute_force_opt, OracleLimits};
use pcspan::product::ProductConfig;
use pcspan::rcsp::verify_solution;
use pcspan::reductions::{parse_hopset, parse_rcs, solve_hopset, solve_rcs};
use pcspan::{PcsError, PcsInstance, Result, Scalar, Q};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RunMode {
    PcsInt,
    PcsTheta,
    Rcs,
    Hopset,
    Junction,
    Verify,
    Gen,
    Bench,
}

#[derive(Debug, Parser)]
#[command(name = "pcspan", version, about = "Packing-covering spanner solver")]
struct Cli {
    #[arg(long, value_enum)]
    mode: RunMode,
    /// Instance file (suite directory for bench).
    input: Option<PathBuf>,
    /// Height parameter; layered graphs get ceil(1/epsilon) levels.
    #[arg(long, default_value = "1/2")]
    epsilon: String,
    /// Length relaxation for pcs-theta and verify.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = pcspan::product::DEFAULT_MAX_PRODUCT_VERTICES)]
    max_product_vertices: usize,
    #[arg(long, default_value_t = pcspan::junction::DEFAULT_ROUNDING_RETRIES)]
    rounding_retries: usize,
    /// Concurrent instances in bench mode.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output file (output directory for bench); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solution report to check in verify mode.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    packing: usize,
    #[arg(long, default_value_t = 0)]
    covering: usize,
    #[arg(long, default_value_t = 2)]
    tau: i64,
    /// integer | rational | rational-negative
    #[arg(long, default_value = "integer")]
    regime: String,
}

fn parse_q(text: &str, flag: &str) -> Result<Q> {
    Q::parse_text(text).ok_or_else(|| PcsError::Parameter(format!("--{flag} expects a rational, got {text:?}")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PcsError::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, format!("{text}\n")).map_err(|e| PcsError::Internal(format!("writing {}: {e}", p.display())))
        }
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(PcsError::Internal(format!("writing stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn input(cli: &Cli) -> Result<&Path> {
    cli.input
        .as_deref()
        .ok_or_else(|| PcsError::Parameter(format!("--mode {:?} needs an input file", cli.mode)))
}

fn solve_config(cli: &Cli) -> Result<SolveConfig<Q>> {
    let epsilon = parse_q(&cli.epsilon, "epsilon")?;
    if epsilon <= Q::from_int(0) {
        return Err(PcsError::Parameter("--epsilon must be positive".into()));
    }
    Ok(SolveConfig {
        junction: JunctionConfig {
            epsilon,
            seed: cli.seed,
            product: ProductConfig {
                max_vertices: cli.max_product_vertices,
                ..ProductConfig::default()
            },
            rounding_retries: cli.rounding_retries,
            ..JunctionConfig::default()
        },
        reprice_selected: true,
    })
}

fn pcs_mode(cli: &Cli) -> Result<Mode<Q>> {
    match (cli.mode, &cli.theta) {
        (RunMode::PcsTheta, None) => Err(PcsError::Parameter("--mode pcs-theta needs --theta".into())),
        (_, Some(t)) if cli.mode != RunMode::PcsInt => {
            let theta = parse_q(t, "theta")?;
            if theta <= Q::from_int(0) {
                return Err(PcsError::Parameter("--theta must be positive".into()));
            }
            Ok(Mode::Theta(theta))
        }
        _ => Ok(Mode::Integer),
    }
}

/// Writes the report, then re-reads it and re-verifies the edge set against the instance.
fn emit_report(cli: &Cli, inst: &PcsInstance<Q>, report: &SolveReport<Q>, mut value: Value) -> Result<()> {
    if let Value::Object(map) = &mut value {
        let v = report.to_json_value();
        if let Value::Object(base) = v {
            for (k, x) in base {
                map.entry(k).or_insert(x);
            }
        }
    }
    let text = serde_json::to_string_pretty(&value).expect("report serializes");
    emit(cli.out.as_deref(), &text)?;
    let back = match cli.out.as_deref() {
        Some(p) => read(p)?,
        None => text,
    };
    let edges = report_edges(&back)?;
    let checks = verify_solution(inst, &edges, report.mode.theta())?;
    if let Some(d) = checks.iter().position(|c| !c.feasible) {
        return Err(PcsError::Internal(format!(
            "written solution fails demand {d} on re-read"
        )));
    }
    Ok(())
}

fn report_edges(text: &str) -> Result<Vec<usize>> {
    let v: Value = serde_json::from_str(text).map_err(|e| PcsError::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    v.get("edges")
        .and_then(Value::as_array)
        .and_then(|a| {
            a.iter()
                .map(|x| x.as_u64().map(|u| u as usize))
                .collect::<Option<Vec<_>>>()
        })
        .ok_or_else(|| PcsError::Parse {
            location: "edges".into(),
            message: "expected an array of edge ids".into(),
        })
}

fn cmd_solve(cli: &Cli) -> Result<()> {
    let inst: PcsInstance<Q> = load_instance(&read(input(cli)?)?)?;
    let mode = pcs_mode(cli)?;
    let report = solve_pcs(&inst, &mode, &solve_config(cli)?)?;
    emit_report(cli, &inst, &report, json!({}))
}

fn cmd_rcs(cli: &Cli) -> Result<()> {
    let rcs = parse_rcs::<Q>(&read(input(cli)?)?)?;
    let report = solve_rcs(&rcs, &solve_config(cli)?)?;
    let inst = pcspan::reductions::rcs_to_pcs(&rcs)?;
    emit_report(cli, &inst, &report, json!({"problem": "rcs"}))
}

fn cmd_hopset(cli: &Cli) -> Result<()> {
    let hs = parse_hopset(&read(input(cli)?)?)?;
    let sol = solve_hopset::<Q>(&hs, &solve_config(cli)?)?;
    let (inst, _) = pcspan::reductions::hopset_to_pcs::<Q>(&hs)?;
    let extra = json!({
        "problem": "hopset",
        "hopset": sol.hopset,
        "hopset_size": sol.hopset.len(),
        "verified": sol.verified.iter().all(|&ok| ok),
    });
    emit_report(cli, &inst, &sol.report, extra)
}

fn cmd_junction(cli: &Cli) -> Result<()> {
    let inst: PcsInstance<Q> = load_instance(&read(input(cli)?)?)?;
    let mode = pcs_mode(cli)?;
    let cfg = solve_config(cli)?;
    let ids: Vec<usize> = (0..inst.demands.len()).collect();
    if ids.is_empty() {
        return Err(PcsError::Parameter("junction mode needs at least one demand".into()));
    }
    let t = min_density_junction_tree(&inst, &ids, &mode, &cfg.junction)?;
    let value = json!({
        "root": t.root,
        "edges": t.edges,
        "resolved": t.resolved,
        "witnesses": t.witnesses.iter().map(|w| &w.edges).collect::<Vec<_>>(),
        "cost": t.cost.to_text(),
        "density": t.density.to_text(),
        "origin": t.origin,
    });
    emit(
        cli.out.as_deref(),
        &serde_json::to_string_pretty(&value).expect("serializes"),
    )
}

fn cmd_verify(cli: &Cli) -> Result<bool> {
    let inst: PcsInstance<Q> = load_instance(&read(input(cli)?)?)?;
    let sol = cli
        .solution
        .as_deref()
        .ok_or_else(|| PcsError::Parameter("--mode verify needs --solution".into()))?;
    let edges = report_edges(&read(sol)?)?;
    let mode = pcs_mode(cli)?;
    let checks = verify_solution(&inst, &edges, mode.theta())?;
    let ok = checks.iter().all(|c| c.feasible);
    let value = json!({
        "verified": ok,
        "cost": inst.edge_cost_sum(&edges).to_text(),
        "demands": checks,
    });
    emit(
        cli.out.as_deref(),
        &serde_json::to_string_pretty(&value).expect("serializes"),
    )?;
    Ok(ok)
}

fn cmd_gen(cli: &Cli) -> Result<()> {
    let regime: Regime = cli.regime.parse()?;
    if cli.n < 2 || cli.k == 0 {
        return Err(PcsError::Parameter("--n must be at least 2 and --k positive".into()));
    }
    let p = GenParams {
        n: cli.n,
        k: cli.k,
        packing: cli.packing,
        covering: cli.covering,
        tau: cli.tau,
        regime,
        seed: cli.seed,
        extra_edges: cli.n,
        ..GenParams::default()
    };
    let inst = generate::<Q>(&p)?;
    emit(cli.out.as_deref(), &instance_to_json(&inst))
}

#[derive(Debug, Serialize)]
struct BenchRow {
    instance: String,
    status: String,
    cost: String,
    opt: String,
    ratio: String,
    iterations: usize,
    densities: String,
}

fn bench_one(cli: &Cli, path: &Path) -> (BenchRow, u128) {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let oracle = name.ends_with(".oracle.json");
    let start = Instant::now();
    let run = || -> Result<(SolveReport<Q>, Option<Q>)> {
        let inst: PcsInstance<Q> = load_instance(&read(path)?)?;
        let report = solve_pcs(&inst, &pcs_mode(cli)?, &solve_config(cli)?)?;
        let opt = if oracle {
            Some(brute_force_opt(&inst, report.mode.theta(), &OracleLimits::default())?.0)
        } else {
            None
        };
        Ok((report, opt))
    };
    let row = match run() {
        Ok((report, opt)) => {
            let ratio = match &opt {
                Some(o) if *o > Q::from_int(0) => format!("{:.6}", (report.cost.clone() / o.clone()).as_f64()),
                Some(_) if report.cost == Q::from_int(0) => "1.000000".into(),
                Some(_) => "inf".into(),
                None => "unavailable".into(),
            };
            BenchRow {
                instance: name,
                status: "ok".into(),
                cost: report.cost.to_text(),
                opt: opt.map_or("unavailable".into(), |o| o.to_text()),
                ratio,
                iterations: report.iterations.len(),
                densities: report
                    .iterations
                    .iter()
                    .map(|i| i.density.to_text())
                    .collect::<Vec<_>>()
                    .join(" "),
            }
        }
        Err(e) => BenchRow {
            instance: name,
            status: format!("error: {e}"),
            cost: String::new(),
            opt: String::new(),
            ratio: "unavailable".into(),
            iterations: 0,
            densities: String::new(),
        },
    };
    (row, start.elapsed().as_millis())
}

fn cmd_bench(cli: &Cli) -> Result<()> {
    let dir = input(cli)?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| PcsError::Parse {
            location: dir.display().to_string(),
            message: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with("summary.json"))
        .collect();
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build()
        .map_err(|e| PcsError::Internal(e.to_string()))?;
    let results: Vec<(BenchRow, u128)> = pool.install(|| files.par_iter().map(|f| bench_one(cli, f)).collect());
    let out_dir = cli.out.clone().unwrap_or_else(|| dir.to_path_buf());
    fs::create_dir_all(&out_dir).map_err(|e| PcsError::Internal(e.to_string()))?;
    let csv_err = |e: csv::Error| PcsError::Internal(e.to_string());
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv")).map_err(csv_err)?;
    for (row, _) in &results {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| PcsError::Internal(e.to_string()))?;
    let mut t = csv::Writer::from_path(out_dir.join("timings.csv")).map_err(csv_err)?;
    t.write_record(["instance", "runtime_ms"]).map_err(csv_err)?;
    for (row, ms) in &results {
        t.write_record([row.instance.as_str(), &ms.to_string()])
            .map_err(csv_err)?;
    }
    t.flush().map_err(|e| PcsError::Internal(e.to_string()))?;
    let rows: Vec<&BenchRow> = results.iter().map(|(r, _)| r).collect();
    let summary = serde_json::to_string_pretty(&json!({ "instances": rows })).expect("serializes");
    fs::write(out_dir.join("summary.json"), format!("{summary}\n")).map_err(|e| PcsError::Internal(e.to_string()))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    match cli.mode {
        RunMode::PcsInt | RunMode::PcsTheta => cmd_solve(cli).map(|_| true),
        RunMode::Rcs => cmd_rcs(cli).map(|_| true),
        RunMode::Hopset => cmd_hopset(cli).map(|_| true),
        RunMode::Junction => cmd_junction(cli).map(|_| true),
        RunMode::Verify => cmd_verify(cli),
        RunMode::Gen => cmd_gen(cli).map(|_| true),
        RunMode::Bench => cmd_bench(cli).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PCSPAN_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
