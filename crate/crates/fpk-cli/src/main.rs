//! `fpk` — compute Laplace-domain transforms, transition densities, boundary
//! fluxes, and CIR-under-fBm densities, plus the validation suites.
//!
//! Exit codes: 0 success, 1 validation-suite failure, 2 invalid input,
//! 3 numerical failure. Machine-readable failure reasons go to stderr as a
//! single JSON line. Identical flags and seed produce byte-identical CSV and
//! JSON value fields (wall-time fields excluded).

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::io::Write;
use std::process::ExitCode;

use fpk::cir::{cir_transition_density, map_cir_to_fpk, CirParams};
use fpk::error::FpkError;
use fpk::invert::{InversionConfig, InversionMethod};
use fpk::laplace::{
    lemma2_residual, omega, pde_residual, solve_flux, uniform_grid, FluxSolverOptions, FpkParams,
    InitialDistribution,
};
use fpk::solver::{density_curve, geometric_grid, moment_check, DensityCurve, Mode, SolverOptions};
use fpk::validate::{run_suite, Suite, ValidateOptions};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "fpk", version, about = "Transition densities for square-root diffusions under fractional Brownian motion via Laplace transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the transform ω(t, s) with diagnostics.
    Omega(OmegaArgs),
    /// Compute a density curve u(t, ·; ξ) and emit CSV/JSON.
    Density(DensityArgs),
    /// Solve the boundary-flux integral equation and emit (t, f, residual).
    Flux(FluxArgs),
    /// CIR-under-fBm transition density of S_T given S_t.
    Cir(CirArgs),
    /// Run validation suites and emit a JSON report.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Diffusion scale a > 0.
    #[arg(long)]
    a: f64,
    /// Drift slope b ≥ 0.
    #[arg(long)]
    b: f64,
    /// Drift intercept c.
    #[arg(long, allow_negative_numbers = true)]
    c: f64,
    /// Exponent v > 0 (Hurst-derived).
    #[arg(long)]
    v: f64,
    /// Source point ξ > 0 of the point-mass initial data.
    #[arg(long)]
    xi: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<(FpkParams, InitialDistribution), FpkError> {
        Ok((
            FpkParams::new(self.a, self.b, self.c, self.v)?,
            InitialDistribution::point_mass(self.xi)?,
        ))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Reflecting,
    Flux,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Reflecting => Mode::Reflecting,
            ModeArg::Flux => Mode::Lemma2Flux,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Talbot,
    Stehfest,
    Both,
}

impl From<MethodArg> for InversionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Talbot => InversionMethod::Talbot,
            MethodArg::Stehfest => InversionMethod::Stehfest,
            MethodArg::Both => InversionMethod::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct OmegaArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Evaluation time t ≥ 0.
    #[arg(long)]
    t: f64,
    /// Real part of the Laplace variable.
    #[arg(long)]
    s_re: f64,
    /// Imaginary part of the Laplace variable.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s_im: f64,
    #[arg(long, value_enum, default_value = "reflecting")]
    mode: ModeArg,
    /// Quadrature absolute tolerance.
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    /// Panels of the flux grid (flux mode).
    #[arg(long, default_value_t = 64)]
    flux_n: usize,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Evaluation time t > 0.
    #[arg(long)]
    t: f64,
    /// Lowest grid point (default ξ/50).
    #[arg(long)]
    x_min: Option<f64>,
    /// Highest grid point (default 8·max(ξ, E(t))).
    #[arg(long)]
    x_max: Option<f64>,
    /// Number of grid points.
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "reflecting")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output path (stdout when omitted).
    #[arg(long)]
    output: Option<String>,
    /// Quadrature absolute tolerance.
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    /// RNG seed recorded in the output header (densities are deterministic).
    #[arg(long, default_value_t = 20240801)]
    seed: u64,
}

#[derive(Args)]
struct FluxArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid end time.
    #[arg(long)]
    t_max: f64,
    /// Number of grid panels.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    output: Option<String>,
    #[arg(long, default_value_t = 20240801)]
    seed: u64,
}

#[derive(Args)]
struct CirArgs {
    /// Hurst parameter H ∈ (0, 1).
    #[arg(long)]
    hurst: f64,
    /// Volatility σ > 0.
    #[arg(long)]
    sigma: f64,
    /// Risk-free rate r.
    #[arg(long, allow_negative_numbers = true)]
    rate: f64,
    /// Dividend intercept h.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    dividend_h: f64,
    /// Current price S_t.
    #[arg(long)]
    s_t: f64,
    /// Horizon ΔT = T − t.
    #[arg(long)]
    delta_t: f64,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "reflecting")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    output: Option<String>,
    #[arg(long, default_value_t = 20240801)]
    seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Suite to run: laplace | inversion | oracle | mc | all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Reduced grids and path counts (indicative, not the acceptance gate).
    #[arg(long)]
    fast: bool,
    #[arg(long, default_value_t = 20240801)]
    seed: u64,
    #[arg(long)]
    output: Option<String>,
}

fn exit_code_for(err: &FpkError) -> u8 {
    match err {
        FpkError::Domain(_) | FpkError::Unsupported(_) => 2,
        _ => 3,
    }
}

fn fail(err: FpkError) -> ExitCode {
    let kind = match err {
        FpkError::Domain(_) => "domain",
        FpkError::Unsupported(_) => "unsupported_regime",
        FpkError::Singularity(_) => "singularity",
        FpkError::QuadratureFailure { .. } => "quadrature_failure",
        FpkError::NonIntegrableKernel { .. } => "non_integrable_kernel",
        FpkError::IllConditioned(_) => "ill_conditioned",
        FpkError::Convergence(_) => "convergence",
        FpkError::Instability(_) => "instability",
    };
    let code = exit_code_for(&err);
    eprintln!(
        "{}",
        serde_json::json!({"error": {"kind": kind, "code": code, "message": err.to_string()}})
    );
    ExitCode::from(code)
}

fn write_output(path: &Option<String>, content: &str) -> Result<(), std::io::Error> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}

fn flags_token(flags: &[fpk::invert::InversionFlag]) -> String {
    use fpk::invert::InversionFlag::*;
    flags
        .iter()
        .map(|f| match f {
            MethodDisagreement => "method_disagreement",
            NegativeValue => "negative_value",
            MethodFailure => "method_failure",
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// `#`-prefixed metadata header shared by the CSV emitters.
fn csv_header(lines: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in lines {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out
}

fn density_csv(curve: &DensityCurve, meta: &[(&str, String)]) -> String {
    let mut out = csv_header(meta);
    out.push_str("x,u,discrepancy,flags\n");
    for i in 0..curve.x_grid.len() {
        let failure = curve.failures.iter().find(|(j, _)| *j == i);
        let flag = match failure {
            Some((_, reason)) => format!("failed:{}", reason.replace([',', '\n'], ";")),
            None => flags_token(&curve.point_flags[i]),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            curve.x_grid[i], curve.u[i], curve.discrepancies[i], flag
        ));
    }
    let d = &curve.diagnostics;
    out.push_str(&format!("# normalization={}\n", d.normalization));
    out.push_str(&format!("# raw_trapezoid={}\n", d.raw_trapezoid));
    out.push_str(&format!("# peak={}\n# min_value={}\n", d.peak, d.min_value));
    out.push_str(&format!("# max_discrepancy={}\n", d.max_discrepancy));
    if let Some(b) = d.boundary_extrapolation {
        out.push_str(&format!("# boundary_extrapolation={b}\n"));
    }
    out.push_str(&format!("# failed_points={}\n", d.failed_points));
    out
}

fn density_json(curve: &DensityCurve, meta: &[(&str, String)]) -> String {
    let meta_map: serde_json::Map<String, serde_json::Value> = meta
        .iter()
        .map(|(k, v)| ((*k).to_string(), serde_json::Value::String(v.clone())))
        .collect();
    let points: Vec<serde_json::Value> = (0..curve.x_grid.len())
        .map(|i| {
            serde_json::json!({
                "x": curve.x_grid[i],
                "u": if curve.u[i].is_finite() { serde_json::json!(curve.u[i]) } else { serde_json::Value::Null },
                "discrepancy": if curve.discrepancies[i].is_finite() { serde_json::json!(curve.discrepancies[i]) } else { serde_json::Value::Null },
                "flags": flags_token(&curve.point_flags[i]),
            })
        })
        .collect();
    let report = serde_json::json!({
        "meta": meta_map,
        "points": points,
        "diagnostics": &curve.diagnostics,
    });
    serde_json::to_string_pretty(&report).expect("serializable report") + "\n"
}

fn model_meta(args: &ModelArgs, seed: u64, tol: f64, extra: &[(&str, String)]) -> Vec<(&'static str, String)> {
    let mut meta: Vec<(&'static str, String)> = vec![
        ("version", VERSION.to_string()),
        ("a", args.a.to_string()),
        ("b", args.b.to_string()),
        ("c", args.c.to_string()),
        ("v", args.v.to_string()),
        ("xi", args.xi.to_string()),
        ("seed", seed.to_string()),
        ("quad_tol", tol.to_string()),
    ];
    for (k, v) in extra {
        // extra keys come from 'static call sites below
        let key: &'static str = match *k {
            "t" => "t",
            "mode" => "mode",
            "method" => "method",
            "n" => "n",
            "t_max" => "t_max",
            other => panic!("unknown meta key {other}"),
        };
        meta.push((key, v.clone()));
    }
    meta
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Reflecting => "reflecting",
        Mode::Lemma2Flux => "lemma2-flux",
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Talbot => "talbot",
        MethodArg::Stehfest => "stehfest",
        MethodArg::Both => "both",
    }
}

/// Display helper that collapses negative zero.
fn num(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn cmd_omega(args: OmegaArgs) -> Result<(), FpkError> {
    let (params, init) = args.model.build()?;
    let s = Complex64::new(args.s_re, args.s_im);
    let flux = match args.mode {
        ModeArg::Reflecting => None,
        // grid extends past t so the t ± h residual probes stay in range
        ModeArg::Flux => Some(solve_flux(
            &uniform_grid(args.t.max(1e-6) + 1e-3, args.flux_n),
            &init,
            &params,
            &FluxSolverOptions::default(),
        )?),
    };
    let ev = omega(args.t, s, &init, flux.as_ref(), &params, args.tol)?;
    println!("omega_re={}", num(ev.omega.re));
    println!("omega_im={}", num(ev.omega.im));
    println!("g_hat_re={}", num(ev.g_hat.re));
    println!("g_hat_im={}", num(ev.g_hat.im));
    match ev.c1 {
        Some(c1) => println!("c1_re={}\nc1_im={}", num(c1.re), num(c1.im)),
        None => println!("c1=divergent-at-b=0"),
    }
    // transform-equation residual diagnostic (real s, t away from 0)
    if args.s_im == 0.0 && args.t > 1e-3 {
        let r = pde_residual(args.t, args.s_re, &init, flux.as_ref(), &params, 1e-4, args.tol)?;
        println!("pde_residual={}", r.residual);
        println!("pde_residual_bound={}", 1e-5 * (1.0 + r.omega_norm));
    }
    Ok(())
}

fn cmd_density(args: DensityArgs) -> Result<(), FpkError> {
    let (params, init) = args.model.build()?;
    if args.n < 1 {
        return Err(FpkError::Domain("n must be >= 1".into()));
    }
    let lo = args.x_min.unwrap_or(args.model.xi / 50.0);
    let hi = args
        .x_max
        .unwrap_or_else(|| 8.0 * args.model.xi.max(params.drift_mean(args.model.xi, args.t)));
    let grid = if args.n == 1 {
        vec![lo]
    } else {
        geometric_grid(lo, hi, args.n)
    };
    let inv = InversionConfig {
        method: args.method.into(),
        ..InversionConfig::default()
    };
    let opts = SolverOptions {
        quad_tol: args.tol,
        ..SolverOptions::default()
    };
    let curve = density_curve(args.t, &grid, &init, args.mode.into(), &params, &inv, &opts)?;
    let failed_frac = curve.diagnostics.failed_points as f64 / grid.len() as f64;
    if failed_frac > 0.2 {
        return Err(FpkError::Convergence(format!(
            "{:.0}% of points failed inversion",
            failed_frac * 100.0
        )));
    }
    let mut meta = model_meta(
        &args.model,
        args.seed,
        args.tol,
        &[
            ("t", args.t.to_string()),
            ("mode", mode_name(args.mode.into()).to_string()),
            ("method", method_name(args.method).to_string()),
            ("n", args.n.to_string()),
        ],
    );
    if matches!(args.mode, ModeArg::Reflecting) {
        if let Ok(m) = moment_check(&curve, &params) {
            meta.push(("moment_mean", m.mean.to_string()));
            meta.push(("moment_expected", m.expected.to_string()));
        }
    }
    let content = match args.format {
        FormatArg::Csv => density_csv(&curve, &meta),
        FormatArg::Json => density_json(&curve, &meta),
    };
    write_output(&args.output, &content).map_err(|e| FpkError::Domain(format!("write failed: {e}")))?;
    if curve.diagnostics.failed_points > 0 {
        eprintln!(
            "warning: {} of {} points failed inversion",
            curve.diagnostics.failed_points,
            grid.len()
        );
    }
    Ok(())
}

fn cmd_flux(args: FluxArgs) -> Result<(), FpkError> {
    let (params, init) = args.model.build()?;
    let grid = uniform_grid(args.t_max, args.n);
    let flux = solve_flux(&grid, &init, &params, &FluxSolverOptions::default())?;
    let mut rows = String::new();
    for (i, &t) in grid.iter().enumerate() {
        let residual = lemma2_residual(&flux, t, &init, &params)?;
        rows.push_str(&format!("{},{},{}\n", t, flux.node_values()[i], residual));
    }
    let meta = model_meta(
        &args.model,
        args.seed,
        FluxSolverOptions::default().lavrentiev_shift,
        &[("t_max", args.t_max.to_string()), ("n", args.n.to_string())],
    );
    let d = flux.diagnostics();
    let mut content = csv_header(&meta);
    content.push_str("t,f,residual\n");
    content.push_str(&rows);
    content.push_str(&format!(
        "# beta_max={}\n# skipped_rows={}\n# lavrentiev_shift={}\n",
        d.beta_max, d.skipped_rows, d.lavrentiev_shift
    ));
    write_output(&args.output, &content).map_err(|e| FpkError::Domain(format!("write failed: {e}")))
}

fn cmd_cir(args: CirArgs) -> Result<(), FpkError> {
    let cir = CirParams::new(
        args.hurst,
        args.sigma,
        args.rate,
        args.dividend_h,
        args.s_t,
        args.delta_t,
    )?;
    let (params, xi, t) = map_cir_to_fpk(&cir)?;
    let lo = args.x_min.unwrap_or(xi / 50.0);
    let hi = args.x_max.unwrap_or_else(|| 8.0 * xi.max(params.drift_mean(xi, t)));
    let grid = if args.n == 1 { vec![lo] } else { geometric_grid(lo, hi, args.n) };
    let inv = InversionConfig {
        method: args.method.into(),
        ..InversionConfig::default()
    };
    let curve = cir_transition_density(&cir, &grid, args.mode.into(), &inv, &SolverOptions::default())?;
    let meta: Vec<(&str, String)> = vec![
        ("version", VERSION.to_string()),
        ("hurst", args.hurst.to_string()),
        ("sigma", args.sigma.to_string()),
        ("rate", args.rate.to_string()),
        ("dividend_h", args.dividend_h.to_string()),
        ("s_t", args.s_t.to_string()),
        ("delta_t", args.delta_t.to_string()),
        ("mapped_a", params.a.to_string()),
        ("mapped_b", params.b.to_string()),
        ("mapped_c", params.c.to_string()),
        ("mapped_v", params.v.to_string()),
        ("seed", args.seed.to_string()),
        ("mode", mode_name(args.mode.into()).to_string()),
        ("method", method_name(args.method).to_string()),
    ];
    let content = match args.format {
        FormatArg::Csv => density_csv(&curve, &meta),
        FormatArg::Json => density_json(&curve, &meta),
    };
    write_output(&args.output, &content).map_err(|e| FpkError::Domain(format!("write failed: {e}")))
}

fn cmd_validate(args: ValidateArgs) -> Result<bool, FpkError> {
    let suite: Suite = args
        .suite
        .parse()
        .map_err(FpkError::Domain)?;
    let opts = ValidateOptions {
        fast: args.fast,
        seed: args.seed,
    };
    let reports = run_suite(suite, &opts)?;
    let all_pass = reports.iter().all(|r| r.passed);
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        eprintln!("[{status}] {} {} ({} ms)", r.id, r.name, r.wall_ms);
        for m in &r.measurements {
            if !m.pass {
                eprintln!("       {} = {:.6e} (tol {:.3e})", m.label, m.value, m.tolerance);
            }
        }
    }
    let report = serde_json::json!({
        "version": VERSION,
        "suite": args.suite,
        "seed": args.seed,
        "fast": args.fast,
        "all_pass": all_pass,
        "criteria": reports,
    });
    let content = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_output(&args.output, &content).map_err(|e| FpkError::Domain(format!("write failed: {e}")))?;
    Ok(all_pass)
}

fn main() -> ExitCode {
    // die quietly on closed pipes instead of panicking mid-write
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    if let Ok(threads) = std::env::var("FPK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Omega(args) => cmd_omega(args).map(|_| true),
        Command::Density(args) => cmd_density(args).map(|_| true),
        Command::Flux(args) => cmd_flux(args).map(|_| true),
        Command::Cir(args) => cmd_cir(args).map(|_| true),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => fail(e),
    }
}
