//! `coagscale`: command line front end for the coagulation profile solver.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical failure.

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use coagscale::config::Config;
use coagscale::parallel::{shoot_parallel, thread_count};
use coagscale::report::{fast_checks, shoot_grid, slow_checks};
use coagscale::fmt17;
use coagscale_core::adiabatic::{sandwich_check, sigma_profile};
use coagscale_core::matching::{composite_profile, run_recursion};
use coagscale_core::peaks::PeakSolution;
use coagscale_core::regime::{a_plus_from_a_minus, period, phi, transition_length};
use coagscale_core::shooting::{shoot, ShootControls};
use coagscale_core::{Error as CoreError, ModelParams};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "coagscale", version, about = "Self-similar coagulation profiles: dispersion roots, shooting, regime diagnostics")]
struct Cli {
    /// Plain-text key = value config file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output artifacts (CSV/JSON files)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion root mu+ and derived model constants
    Dispersion(DispersionArgs),
    /// Shoot on K for the connecting profile, emitting trajectory and cycles
    Shoot(ShootArgs),
    /// Energy/period/gain and valley-map tables for the ODE regimes
    Regimes(RegimesArgs),
    /// Explicit peak-regime profiles by contour quadrature
    Peaks(PeaksArgs),
    /// Cycle recursion and composite matched profile
    Match(MatchArgs),
    /// Within-cycle sigma stations and the sandwich bound
    Adiabatic(AdiabaticArgs),
    /// Run the full cross-validation suite and emit a JSON report
    Report(ReportArgs),
}

#[derive(Args)]
struct DispersionArgs {
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct ShootArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_start: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    scan_points: Option<usize>,
}

#[derive(Args)]
struct RegimesArgs {
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated energies for the (E, T, Phi) table
    #[arg(long)]
    e_list: Option<String>,
    /// Comma-separated valley amplitudes for the (a-, a+, length) table
    #[arg(long)]
    a_list: Option<String>,
}

#[derive(Args)]
struct PeaksArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x1: Option<f64>,
    #[arg(long)]
    max_cycles: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct AdiabaticArgs {
    /// Comma-separated Omega_0 values
    #[arg(long)]
    omega0_list: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    lambda: Option<f64>,
    /// Include the end-to-end shooting checks (the long pole)
    #[arg(long)]
    slow: bool,
}

fn main() {
    // die quietly when a downstream pager closes the pipe
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own help/version paths exit 0; real usage errors exit 1
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    });
}

/// Domain/range problems exit 2, numerical failures 3, IO and the rest 3.
fn exit_code_for(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::Domain(_)) | Some(CoreError::Range(_)) => 2,
        Some(_) => 3,
        None => 3,
    }
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(dir) = &cli.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Dispersion(a) => cmd_dispersion(&cfg, out_dir, a),
        Command::Shoot(a) => cmd_shoot(&cfg, out_dir, a),
        Command::Regimes(a) => cmd_regimes(&cfg, out_dir, a),
        Command::Peaks(a) => cmd_peaks(&cfg, out_dir, a),
        Command::Match(a) => cmd_match(&cfg, out_dir, a),
        Command::Adiabatic(a) => cmd_adiabatic(&cfg, out_dir, a),
        Command::Report(a) => cmd_report(&cfg, out_dir, a),
    }
}

fn write_artifact(out_dir: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = out_dir {
        let mut f = std::fs::File::create(dir.join(name))?;
        f.write_all(contents.as_bytes())?;
    }
    Ok(())
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("bad list entry `{t}`: {e}"))
        })
        .collect()
}

fn cmd_dispersion(cfg: &Config, out_dir: Option<&Path>, a: DispersionArgs) -> Result<i32> {
    let lambda = cfg.resolve(a.lambda, "lambda", 0.1)?;
    let params = ModelParams::new(lambda)?;
    #[derive(Serialize)]
    struct Out {
        lambda: f64,
        mu_plus_re: f64,
        mu_plus_im: f64,
        alpha: f64,
        beta: f64,
        h_lambda: f64,
        k_interval_upper: f64,
    }
    let out = serde_json::to_string_pretty(&Out {
        lambda,
        mu_plus_re: params.mu_plus.re,
        mu_plus_im: params.mu_plus.im,
        alpha: params.alpha,
        beta: params.beta,
        h_lambda: params.h_lambda,
        k_interval_upper: params.k_interval_upper,
    })?;
    println!("{out}");
    write_artifact(out_dir, "dispersion.json", &out)?;
    Ok(0)
}

fn cmd_shoot(cfg: &Config, out_dir: Option<&Path>, a: ShootArgs) -> Result<i32> {
    let lambda = cfg.resolve(a.lambda, "lambda", 0.1)?;
    let params = ModelParams::new(lambda)?;
    let dx = cfg.resolve(a.dx, "dx", 0.02)?;
    let x_max = cfg.resolve(a.x_max, "x-max", 60.0)?;
    let default_grid = shoot_grid(&params, dx, x_max)?;
    let x_start = cfg.resolve(a.x_start, "x-start", default_grid.x_start)?;
    let count = ((x_max - x_start) / dx).ceil() as usize + 1;
    let grid = coagscale_core::profile::LogGrid::new(x_start, dx, count)?;
    let mut controls = ShootControls::default();
    controls.march.delta = cfg.resolve(a.delta, "delta", controls.march.delta)?;
    controls.scan_points = cfg.resolve(a.scan_points, "scan-points", controls.scan_points)?;
    let threads = thread_count();
    let (k_star, outcome) = if threads > 1 {
        shoot_parallel(&params, &grid, &controls, threads)?
    } else {
        shoot(&params, &grid, &controls)?
    };

    #[derive(Serialize)]
    struct CycleOut {
        n: usize,
        a_n: f64,
        #[serde(rename = "X_n_plus")]
        x_plus: f64,
        #[serde(rename = "X_n_0")]
        x_zero: f64,
        #[serde(rename = "X_n_minus")]
        x_minus: f64,
    }
    #[derive(Serialize)]
    struct Out {
        lambda: f64,
        #[serde(rename = "K_star")]
        k_star: f64,
        classification: String,
        cycles: Vec<CycleOut>,
        #[serde(rename = "terminal_X")]
        terminal_x: f64,
    }
    let out = serde_json::to_string_pretty(&Out {
        lambda,
        k_star,
        classification: format!("{:?}", outcome.classification),
        cycles: outcome
            .cycles
            .cycles
            .iter()
            .map(|c| CycleOut {
                n: c.n,
                a_n: c.a_n,
                x_plus: c.x_plus,
                x_zero: c.x_zero,
                x_minus: c.x_minus,
            })
            .collect(),
        terminal_x: outcome.terminal_x,
    })?;
    println!("{out}");
    write_artifact(out_dir, "shoot.json", &out)?;

    let t = &outcome.trajectory;
    let mut csv = String::from("X,H,U,V\n");
    for i in 0..t.grid.count {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(t.grid.node(i)),
            fmt17(t.h_values[i]),
            fmt17(t.u_values[i]),
            fmt17(t.v_values[i])
        ));
    }
    write_artifact(out_dir, "trajectory.csv", &csv)?;
    #[derive(Serialize)]
    struct Sidecar {
        lambda: f64,
        #[serde(rename = "K")]
        k: f64,
        x_start: f64,
        step: f64,
        count: usize,
    }
    let sidecar = serde_json::to_string_pretty(&Sidecar {
        lambda,
        k: k_star,
        x_start: t.grid.x_start,
        step: t.grid.step,
        count: t.grid.count,
    })?;
    write_artifact(out_dir, "trajectory.json", &sidecar)?;
    Ok(0)
}

fn cmd_regimes(cfg: &Config, out_dir: Option<&Path>, a: RegimesArgs) -> Result<i32> {
    let lambda = cfg.resolve(a.lambda, "lambda", 0.1)?;
    coagscale_core::ModelParams::new(lambda)?;
    let e_list = match cfg.resolve_string(a.e_list, "e-list") {
        Some(s) => parse_list(&s)?,
        None => vec![0.01, 0.1, 1.0, 10.0, 100.0],
    };
    let a_list = match cfg.resolve_string(a.a_list, "a-list") {
        Some(s) => parse_list(&s)?,
        None => vec![0.05, 0.1, 0.2, 0.4, 0.8],
    };
    let mut energy_csv = String::from("E,T,Phi\n");
    for &e in &e_list {
        energy_csv.push_str(&format!(
            "{},{},{}\n",
            fmt17(e),
            fmt17(period(e)?),
            fmt17(phi(e)?)
        ));
    }
    let mut map_csv = String::from("a_minus,a_plus,length\n");
    for &am in &a_list {
        let ap = a_plus_from_a_minus(am)?;
        map_csv.push_str(&format!(
            "{},{},{}\n",
            fmt17(am),
            fmt17(ap),
            fmt17(transition_length(lambda, am, ap)?)
        ));
    }
    print!("{energy_csv}\n{map_csv}");
    write_artifact(out_dir, "regimes_energy.csv", &energy_csv)?;
    write_artifact(out_dir, "regimes_map.csv", &map_csv)?;
    Ok(0)
}

fn cmd_peaks(cfg: &Config, out_dir: Option<&Path>, args: PeaksArgs) -> Result<i32> {
    let a = cfg.resolve(args.a, "a", 1.0)?;
    let kappa = cfg.resolve(args.kappa, "kappa", 1.0)?;
    let x_min = cfg.resolve(args.x_min, "x-min", -5.0)?;
    let x_max = cfg.resolve(args.x_max, "x-max", 5.0)?;
    let n = cfg.resolve(args.n, "n", 101)?;
    if n < 2 || !(x_max > x_min) {
        anyhow::bail!(CoreError::domain(format!(
            "need n >= 2 and x_max > x_min, got n = {n}, [{x_min}, {x_max}]"
        )));
    }
    let sol = PeakSolution::new(a, kappa)?;
    let mut csv = String::from("X,V,H,U,residual\n");
    for i in 0..n {
        let x = x_min + (x_max - x_min) * i as f64 / (n - 1) as f64;
        let residual = if x.exp() > 0.0 {
            sol.convolution_residual(x.exp())?
        } else {
            0.0
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(x),
            fmt17(sol.eval_v(x)?),
            fmt17(sol.eval_h(x)?),
            fmt17(sol.eval_u(x)?),
            fmt17(residual)
        ));
    }
    print!("{csv}");
    write_artifact(out_dir, "peaks.csv", &csv)?;
    Ok(0)
}

fn cmd_match(cfg: &Config, out_dir: Option<&Path>, args: MatchArgs) -> Result<i32> {
    let lambda = cfg.resolve(args.lambda, "lambda", 0.01)?;
    let a1 = cfg.resolve(args.a1, "a1", 0.1)?;
    let x1 = cfg.resolve(args.x1, "x1", 0.0)?;
    let max_cycles = cfg.resolve(args.max_cycles, "max-cycles", 32)?;
    let samples = cfg.resolve(args.samples, "samples", 2000)?;
    let params = ModelParams::new(lambda)?;
    let seq = run_recursion(&params, a1, x1, max_cycles)?;

    #[derive(Serialize)]
    struct CycleOut {
        n: usize,
        a_n: f64,
        #[serde(rename = "X_n_plus")]
        x_plus: f64,
        #[serde(rename = "X_n_0")]
        x_zero: f64,
        #[serde(rename = "X_n_minus")]
        x_minus: f64,
        #[serde(rename = "E_n")]
        e_n: f64,
    }
    #[derive(Serialize)]
    struct Out {
        lambda: f64,
        cycles: Vec<CycleOut>,
    }
    let out = serde_json::to_string_pretty(&Out {
        lambda,
        cycles: seq
            .cycles
            .iter()
            .map(|c| CycleOut {
                n: c.n,
                a_n: c.a_n,
                x_plus: c.x_plus,
                x_zero: c.x_zero,
                x_minus: c.x_minus,
                e_n: c.e_n,
            })
            .collect(),
    })?;
    println!("{out}");
    write_artifact(out_dir, "match.json", &out)?;

    if !seq.cycles.is_empty() {
        let x_lo = seq.cycles[0].x_plus;
        let x_hi = seq.cycles.last().unwrap().x_minus;
        let mut csv = String::from("X,H,regime\n");
        for i in 0..samples {
            let x = x_lo + (x_hi - x_lo) * i as f64 / (samples - 1).max(1) as f64;
            let (h, regime) = composite_profile(&params, &seq, x)?;
            csv.push_str(&format!("{},{},{:?}\n", fmt17(x), fmt17(h), regime));
        }
        write_artifact(out_dir, "composite.csv", &csv)?;
    }
    Ok(0)
}

fn cmd_adiabatic(cfg: &Config, out_dir: Option<&Path>, args: AdiabaticArgs) -> Result<i32> {
    let list = match cfg.resolve_string(args.omega0_list, "omega0-list") {
        Some(s) => parse_list(&s)?,
        None => vec![0.01, 0.1, 1.0, 10.0, 30.0],
    };
    let mut csv = String::from(
        "omega0,xi1,xi2,xi3,xi4,sigma1,sigma2,sigma3,sigma4,phi,margin\n",
    );
    for &omega0 in &list {
        let c = sigma_profile(omega0)?;
        let p = phi(c.e)?;
        let (_, margin) = sandwich_check(omega0, 400)?;
        csv.push_str(&fmt17(omega0));
        for k in 1..=4 {
            csv.push(',');
            csv.push_str(&fmt17(c.xi_stations[k]));
        }
        for k in 1..=4 {
            csv.push(',');
            csv.push_str(&fmt17(c.sigma_values[k]));
        }
        csv.push_str(&format!(",{},{}\n", fmt17(p), fmt17(margin)));
    }
    print!("{csv}");
    write_artifact(out_dir, "adiabatic.csv", &csv)?;
    Ok(0)
}

fn cmd_report(cfg: &Config, out_dir: Option<&Path>, args: ReportArgs) -> Result<i32> {
    let lambda = cfg.resolve(args.lambda, "lambda", 0.1)?;
    // validate up front so an out-of-range lambda is a domain error even
    // for the fast suite, whose checks pin their own parameter values
    ModelParams::new(lambda)?;
    let mut checks = fast_checks()?;
    if args.slow {
        checks.extend(slow_checks(lambda, thread_count())?);
    }
    let out = serde_json::to_string_pretty(&checks)?;
    println!("{out}");
    write_artifact(out_dir, "report.json", &out)?;
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 3 })
}
