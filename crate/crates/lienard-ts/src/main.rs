//! Scenario-driven CLI: certify hypotheses, solve for periodic solutions,
//! sweep parameters, and run the brute-force discrete oracle.
//!
//! Exit codes: 0 success, 1 solver failure, 2 hypothesis failure,
//! 3 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lienard_ts::checker::{certify, falsify_condition};
use lienard_ts::homotopy::multi_solve;
use lienard_ts::oracle::solve_discrete;
use lienard_ts::output::{
    check_report_json, check_report_table, failure_report, fmt_f64, sha256_hex, solution_meta,
    write_json, write_solution_csv, RunManifest,
};
use lienard_ts::scenario::{parse_scenario, Built, PhiSpec, Scenario};

const EXIT_SOLVER: u8 = 1;
const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lienard-ts",
    version,
    about = "Periodic solutions of singular phi-Laplacian Lienard equations on time scales"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Override the mesh resolution bound.
    #[arg(long, env = "LIENARD_TS_MESH_DT")]
    mesh_dt: Option<f64>,
    /// Override the fixed-point defect tolerance.
    #[arg(long, env = "LIENARD_TS_TOL_FP")]
    tol_fp: Option<f64>,
    /// Override the equation residual tolerance.
    #[arg(long, env = "LIENARD_TS_TOL_EQ")]
    tol_eq: Option<f64>,
    /// Override the homotopy schedule length.
    #[arg(long, env = "LIENARD_TS_LAMBDA_STEPS")]
    lambda_steps: Option<u32>,
    /// Override the scenario RNG seed (Monte-Carlo falsifier).
    #[arg(long, env = "LIENARD_TS_SEED")]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, env = "LIENARD_TS_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify the window hypotheses and spacing; write a check report.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Solve every window; write one CSV per solution plus a manifest.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Solve even when the hypothesis check fails.
        #[arg(long)]
        force: bool,
    },
    /// Re-solve across a parameter range; write a summary CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        parameter: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long)]
        force: bool,
    },
    /// Brute-force baseline solve on a purely discrete time scale.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepParam {
    /// Singularity bound of the relativistic phi.
    C,
    /// Multiplies the whole time axis.
    TScale,
    /// Sets the delay r.
    Delay,
    /// Multiplies the forcing amplitude.
    ForcingAmplitude,
}

fn load(common: &Common) -> Result<(Scenario, Built, String), String> {
    let mut scenario = parse_scenario(&common.scenario).map_err(|e| e.to_string())?;
    if let Some(dt) = common.mesh_dt {
        scenario.solver.mesh_dt = Some(dt);
    }
    if let Some(v) = common.tol_fp {
        scenario.solver.tol_fp = v;
    }
    if let Some(v) = common.tol_eq {
        scenario.solver.tol_eq = v;
    }
    if let Some(v) = common.lambda_steps {
        scenario.solver.lambda_steps = v;
    }
    if let Some(v) = common.seed {
        scenario.seed = v;
    }
    scenario.validate().map_err(|e| e.to_string())?;
    let built = scenario.build().map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&common.scenario).map_err(|e| e.to_string())?;
    Ok((scenario, built, sha256_hex(&bytes)))
}

fn ensure_out_dir(dir: &PathBuf) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn run_check(common: &Common) -> Result<u8, String> {
    let (scenario, built, _) = load(common)?;
    ensure_out_dir(&common.out_dir)?;
    let report = certify(&built.problem, &scenario.alphas, built.samples);
    let falsifier = falsify_condition(&built.problem, &scenario.alphas, 200, scenario.seed);
    let mut doc = check_report_json(&report);
    doc["falsifier"] = serde_json::json!({
        "trials": falsifier.trials,
        "violations": falsifier.violations,
        "witness": falsifier.witness.map(|(j, v)| serde_json::json!({"strip": j, "integral": v})),
    });
    if built.forcing_offset.abs() > 1e-12 {
        eprintln!("note: forcing re-centered by subtracting {}", fmt_f64(built.forcing_offset));
    }
    write_json(&common.out_dir.join("check_report.json"), &doc)
        .map_err(|e| format!("cannot write check report: {e}"))?;
    print!("{}", check_report_table(&report));
    if falsifier.violations > 0 {
        println!("falsifier: {} violation(s) in {} trials", falsifier.violations, falsifier.trials);
    }
    Ok(if report.pass && falsifier.violations == 0 { 0 } else { EXIT_HYPOTHESIS })
}

fn run_solve(common: &Common, force: bool) -> Result<u8, String> {
    let (scenario, built, hash) = load(common)?;
    ensure_out_dir(&common.out_dir)?;
    if built.forcing_offset.abs() > 1e-12 {
        eprintln!("note: forcing re-centered by subtracting {}", fmt_f64(built.forcing_offset));
    }
    let report = certify(&built.problem, &scenario.alphas, built.samples);
    if !report.pass {
        if force {
            eprintln!("warning: hypothesis check failed, continuing under --force");
        } else {
            write_json(&common.out_dir.join("check_report.json"), &check_report_json(&report))
                .map_err(|e| format!("cannot write check report: {e}"))?;
            print!("{}", check_report_table(&report));
            return Ok(EXIT_HYPOTHESIS);
        }
    }
    let results = multi_solve(&built.problem, &scenario.alphas, &built.settings);
    let mut outcomes = Vec::new();
    let mut files = Vec::new();
    let mut any_failure = false;
    println!(
        "{:>3} {:>10} {:>13} {:>13} {:>8}",
        "win", "x(0)", "residual_eq", "defect", "status"
    );
    for result in &results {
        match result {
            Ok(rec) => {
                let csv = common.out_dir.join(format!("window_{}.csv", rec.window));
                write_solution_csv(&csv, &rec.x, &rec.x_delta)
                    .map_err(|e| format!("cannot write {}: {e}", csv.display()))?;
                let meta = solution_meta(rec);
                let meta_path = common.out_dir.join(format!("window_{}.json", rec.window));
                write_json(&meta_path, &meta)
                    .map_err(|e| format!("cannot write {}: {e}", meta_path.display()))?;
                files.push(csv.file_name().unwrap().to_string_lossy().into_owned());
                files.push(meta_path.file_name().unwrap().to_string_lossy().into_owned());
                outcomes.push(meta);
                println!(
                    "{:>3} {:>10.5} {:>13.3e} {:>13.3e} {:>8}",
                    rec.window,
                    rec.x.value(0),
                    rec.residual_eq,
                    rec.residual_fp,
                    "ok"
                );
            }
            Err(fail) => {
                any_failure = true;
                let doc = failure_report(fail);
                let path = common.out_dir.join(format!("failure_{}.json", fail.window));
                write_json(&path, &doc)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                files.push(path.file_name().unwrap().to_string_lossy().into_owned());
                outcomes.push(doc);
                println!("{:>3} {:>10} {:>13} {:>13} {:>8}", fail.window, "-", "-", "-", "FAIL");
                eprintln!("window {}: {}", fail.window, fail.reason);
            }
        }
    }
    let manifest = RunManifest {
        scenario_path: common.scenario.clone(),
        scenario_sha256: hash,
        seed: scenario.seed,
        outcomes,
        files,
    };
    manifest
        .write(&common.out_dir.join("manifest.json"))
        .map_err(|e| format!("cannot write manifest: {e}"))?;
    let violations = built.problem.apriori_violations();
    if violations > 0 {
        eprintln!("warning: {violations} derivative-bound violations recorded");
        return Ok(EXIT_SOLVER);
    }
    Ok(if any_failure { EXIT_SOLVER } else { 0 })
}

fn sweep_values(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points <= 1 || from == to {
        return vec![from];
    }
    (0..points).map(|i| from + (to - from) * i as f64 / (points - 1) as f64).collect()
}

fn apply_sweep(scenario: &Scenario, parameter: SweepParam, value: f64) -> Result<Scenario, String> {
    let mut out = scenario.clone();
    match parameter {
        SweepParam::C => match out.phi {
            PhiSpec::Relativistic { .. } => out.phi = PhiSpec::Relativistic { c: value },
            _ => return Err("sweep over c needs a relativistic phi".into()),
        },
        SweepParam::TScale => {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("t-scale factor must be positive, got {value}"));
            }
            out = out.scale_time(value);
        }
        SweepParam::Delay => out.delay = value,
        SweepParam::ForcingAmplitude => out.p = out.p.scale_amplitude(value),
    }
    out.validate().map_err(|e| e.to_string())?;
    Ok(out)
}

fn run_sweep(
    common: &Common,
    parameter: SweepParam,
    from: f64,
    to: f64,
    points: usize,
    force: bool,
) -> Result<u8, String> {
    let (scenario, _, _) = load(common)?;
    ensure_out_dir(&common.out_dir)?;
    let mut csv = String::from("value,certified,windows,solved,max_residual_eq\n");
    for value in sweep_values(from, to, points) {
        let sc = apply_sweep(&scenario, parameter, value)?;
        let row = match sc.build() {
            Ok(built) => {
                let report = certify(&built.problem, &sc.alphas, built.samples);
                let windows = sc.alphas.len() - 1;
                if report.pass || force {
                    let results = multi_solve(&built.problem, &sc.alphas, &built.settings);
                    let solved = results.iter().filter(|r| r.is_ok()).count();
                    let max_res = results
                        .iter()
                        .filter_map(|r| r.as_ref().ok().map(|s| s.residual_eq))
                        .fold(f64::NAN, f64::max);
                    format!(
                        "{},{},{},{},{}\n",
                        fmt_f64(value),
                        u8::from(report.pass),
                        windows,
                        solved,
                        fmt_f64(max_res)
                    )
                } else {
                    format!("{},0,{},0,nan\n", fmt_f64(value), windows)
                }
            }
            Err(e) => {
                eprintln!("value {value}: {e}");
                format!("{},0,0,0,nan\n", fmt_f64(value))
            }
        };
        csv.push_str(&row);
    }
    let path = common.out_dir.join("sweep.csv");
    std::fs::write(&path, &csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    print!("{csv}");
    Ok(0)
}

fn run_oracle(common: &Common, tol: f64) -> Result<u8, String> {
    let (scenario, built, _) = load(common)?;
    ensure_out_dir(&common.out_dir)?;
    if !built.mesh.timescale().is_discrete() {
        return Err("oracle requires a purely discrete time scale".into());
    }
    let mut code = 0u8;
    for j in 0..scenario.alphas.len() - 1 {
        let bounds = (scenario.alphas[j], scenario.alphas[j + 1]);
        match solve_discrete(&built.problem, bounds, tol, 200) {
            Ok(sol) => {
                let path = common.out_dir.join(format!("oracle_window_{j}.csv"));
                write_solution_csv(&path, &sol.x, &sol.x_delta)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                println!(
                    "window {j}: x(0) = {:.6}, residual {:.3e}",
                    sol.x.value(0),
                    sol.residual
                );
            }
            Err(e) => {
                eprintln!("window {j}: {e}");
                code = EXIT_SOLVER;
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Check { common } => run_check(common),
        Cmd::Solve { common, force } => run_solve(common, *force),
        Cmd::Sweep { common, parameter, from, to, points, force } => {
            run_sweep(common, *parameter, *from, *to, *points, *force)
        }
        Cmd::Oracle { common, tol } => run_oracle(common, *tol),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
