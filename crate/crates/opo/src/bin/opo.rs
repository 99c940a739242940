use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use opo::analytics::{
    analyze_full_linear, bright_dark_spectra, dark_quadrature_spectrum, eigensystem, fixed_lo_spectrum_composed, fixed_lo_spectrum_with,
    optimal_detection_time, optimal_noise_frequency, poisson_brackets, projection_spectrum, to_db, DetectionMode, FixedLoForm, Projection,
};
use opo::classical::{bright_pattern, steady_state, CartesianGrid};
use opo::harness::output::{write_csv, RunOutcome};
use opo::harness::sweep::{lin_grid, log_grid};
use opo::harness::{compare_runs, compare_with_theory, preset, replay_manifest, run_ensemble, sweep, ExecOptions, RunConfig, Shard, SweepTemplate, Table, Tolerances};
use opo::params::{derived_rates, dimensionless, pump_power_for_sigma, waist_radius, Branch, PhysicalSetup};
use opo::sde::SystemKind;
use opo::validation::{all_pass, default_work_dir, report, validate, Scale, ValidationOptions};
use opo::OpoError;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "opo", version, about = "Two-transverse-mode DOPO: positive-P simulation and linearized theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Physical setup to cavity rates and model parameters.
    Params(ParamsArgs),
    /// Classical steady state and bright pattern.
    Classical(ClassicalArgs),
    /// Linear theory: eigensystem, diffusion, brackets, 6x6 check.
    Analytic(AnalyticArgs),
    /// Run a stochastic ensemble.
    Simulate(SimulateArgs),
    /// Closed-form rotating-frame spectra.
    Spectrum(SpectrumArgs),
    /// Fixed local oscillator spectrum.
    FixedLo(FixedLoArgs),
    /// Compare a run with theory or with another run.
    Compare(CompareArgs),
    /// Fixed local oscillator spectrum along an axis or a figure preset.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ParamsArgs {
    /// TOML file with a physical setup; defaults to the typical setup.
    #[arg(long)]
    setup: Option<PathBuf>,
    /// Report the pump power that gives this sigma.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct ClassicalArgs {
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    sigma: f64,
    /// Pattern orientation (rad).
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Write the bright pattern field on a grid to this CSV (x, y, re, im).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Signal waist for the pattern.
    #[arg(long, default_value_t = 1.0)]
    waist: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    /// JSON: eigensystem, diffusion, optimal time, 6x6 check.
    Eigen,
    /// CSV: rotating-frame dark quadrature spectrum at --phi.
    Spectra,
    /// CSV: fixed local oscillator spectrum at --phi, --T, --d.
    FixedLo,
    /// JSON: brackets at the steady state for --phi.
    Brackets,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = What::Eigen)]
    what: What,
    /// Frequency grid `lo:hi:n`.
    #[arg(long, default_value = "0:10:101")]
    omega_grid: String,
    /// LO phase, degrees.
    #[arg(long, default_value_t = 90.0)]
    phi: f64,
    /// Detection time; defaults to the optimum for --d.
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    d: f64,
    /// Pump decay ratio for the 6x6 check.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = FormArg::Consistent)]
    form: FormArg,
    /// CSV destination; metadata goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Full,
    Reduced,
    Adiabatic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rotating,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum FormArg {
    #[default]
    Consistent,
    Doubled,
}

impl From<FormArg> for FixedLoForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Consistent => FixedLoForm::Consistent,
            FormArg::Doubled => FixedLoForm::Doubled,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest and verify its digests.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    /// Master seed; required unless --manifest is given.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tau_end: Option<f64>,
    #[arg(long)]
    midpoint_iterations: Option<u32>,
    #[arg(long, value_enum)]
    system: Option<SystemArg>,
    #[arg(long)]
    sample_every: Option<u64>,
    #[arg(long)]
    trajectories: Option<u64>,
    #[arg(long)]
    stationary_cutoff: Option<f64>,
    #[arg(long)]
    block_size: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    divergence_threshold: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// LO phases in degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    phi_deg: Option<Vec<f64>>,
    /// Explicit frequency grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_points: Option<usize>,
    #[arg(long)]
    max_lag: Option<f64>,
    #[arg(long)]
    window_start: Option<f64>,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    no_checkpoint: bool,
    /// Run only blocks i, i+n, i+2n, ... (form i/n).
    #[arg(long)]
    shard: Option<String>,
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-3)]
    g: f64,
    #[arg(long, default_value_t = 90.0)]
    phi_deg: f64,
    #[arg(long, default_value_t = 10.0)]
    omega_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixedLoArgs {
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-10)]
    d: f64,
    #[arg(long, default_value_t = 90.0)]
    phi_deg: f64,
    /// Detection time; defaults to the optimum.
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    omega_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, value_enum, default_value_t = FormArg::Consistent)]
    form: FormArg,
    /// Also evaluate the direct correlation double sum with this step.
    #[arg(long)]
    composed_step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    run: PathBuf,
    /// Second run for a two-sample comparison.
    #[arg(long)]
    against: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    z_max: f64,
    #[arg(long, value_enum, default_value_t = FormArg::Consistent)]
    form: FormArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// phi | d | T | omega | sigma
    #[arg(long, required_unless_present = "preset")]
    axis: Option<String>,
    /// Grid `lo:hi:n`, with a `:log` suffix for logarithmic spacing.
    #[arg(long, required_unless_present = "preset")]
    grid: Option<String>,
    /// fig2 | fig2-inset | fig3a | fig3b
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-10)]
    d: f64,
    #[arg(long, default_value_t = 90.0)]
    phi_deg: f64,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, value_enum, default_value_t = FormArg::Consistent)]
    form: FormArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Criteria to run, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    /// Ten times smaller ensembles.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let diverged = e.chain().any(|c| matches!(c.downcast_ref::<OpoError>(), Some(OpoError::DivergenceThreshold { .. })));
            ExitCode::from(if diverged { EXIT_DIVERGENCE } else { EXIT_VALIDATION })
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Params(a) => params(a),
        Command::Classical(a) => classical(a),
        Command::Analytic(a) => analytic(a),
        Command::Simulate(a) => simulate(a),
        Command::Spectrum(a) => spectrum(a),
        Command::FixedLo(a) => fixed_lo(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Validate(a) => validate_cmd(a),
    }
}

fn write_stdout(text: &str) -> anyhow::Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn print_json(v: &serde_json::Value) -> anyhow::Result<ExitCode> {
    write_stdout(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn emit_table(t: &Table, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    match out {
        Some(p) => {
            let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
            write_csv(p, &cols, &t.rows)?;
            eprintln!("wrote {} rows to {}", t.rows.len(), p.display());
        }
        None => {
            let mut s = t.columns.join(",") + "\n";
            for r in &t.rows {
                s += &r.iter().map(|x| opo::harness::output::fmt17(*x)).collect::<Vec<_>>().join(",");
                s.push('\n');
            }
            return write_stdout(&s);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn params(a: ParamsArgs) -> anyhow::Result<ExitCode> {
    let setup = match &a.setup {
        Some(p) => toml::from_str::<PhysicalSetup>(&std::fs::read_to_string(p)?).map_err(|e| OpoError::Config(e.to_string()))?,
        None => PhysicalSetup::typical(),
    };
    setup.validate()?;
    let rates = derived_rates(&setup)?;
    let p = dimensionless(&setup, Some(&rates))?;
    let mut v = json!({
        "setup": setup,
        "waist_pump": waist_radius(&setup, Branch::Pump)?,
        "waist_signal": waist_radius(&setup, Branch::Signal)?,
        "rates": rates,
        "model": p,
        "d": p.d(),
        "diffusion": p.diffusion(),
    });
    if let Some(s) = a.sigma {
        v["pump_power_for_sigma"] = json!({ "sigma": s, "p_laser": pump_power_for_sigma(&setup, s)? });
    }
    print_json(&v)
}

fn classical(a: ClassicalArgs) -> anyhow::Result<ExitCode> {
    let s = steady_state(a.sigma, a.theta)?;
    if let Some(path) = &a.out {
        let grid = CartesianGrid::default_for(a.waist);
        let pts = grid.points();
        let field = bright_pattern(a.sigma, a.theta, a.waist, &pts)?;
        let rows: Vec<Vec<f64>> = pts.iter().zip(&field).map(|((x, y), e)| vec![*x, *y, e.re, e.im]).collect();
        write_csv(path, &["x", "y", "re", "im"], &rows)?;
        eprintln!("wrote {} grid points to {}", rows.len(), path.display());
    }
    print_json(&json!({ "sigma": a.sigma, "theta": a.theta, "steady_state": s }))
}

fn analytic(a: AnalyticArgs) -> anyhow::Result<ExitCode> {
    let phi = a.phi.to_radians();
    let (values, meta): (Option<Vec<(f64, f64)>>, serde_json::Value) = match a.what {
        What::Eigen => {
            let full = analyze_full_linear(a.sigma, a.kappa)?;
            let meta = json!({
                "sigma": a.sigma,
                "kappa": a.kappa,
                "d": a.d,
                "diffusion": a.d / (a.sigma - 1.0),
                "T_opt": optimal_detection_time(a.sigma, a.d)?,
                "eigensystem": eigensystem(a.sigma)?,
                "full_linear": {
                    "goldstone_residual": full.goldstone_residual,
                    "dark_phase_residual": full.dark_phase_residual,
                    "eigenvalues": full.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                },
            });
            (None, meta)
        }
        What::Brackets => {
            let rho = (a.sigma - 1.0).sqrt();
            let b = poisson_brackets(rho.into(), rho.into(), phi)?;
            (None, json!({ "sigma": a.sigma, "phi_deg": a.phi, "rho": rho, "brackets": b }))
        }
        What::Spectra => {
            let v = parse_grid(&a.omega_grid)?.into_iter().map(|w| (w, dark_quadrature_spectrum(w, phi))).collect();
            (Some(v), json!({ "what": "spectra", "sigma": a.sigma, "phi_deg": a.phi }))
        }
        What::FixedLo => {
            let t = match a.t {
                Some(t) => t,
                None => optimal_detection_time(a.sigma, a.d)?,
            };
            let form: FixedLoForm = a.form.into();
            let v = parse_grid(&a.omega_grid)?.into_iter().map(|w| (w, fixed_lo_spectrum_with(w, phi, t, a.d, a.sigma, form))).collect();
            (Some(v), json!({ "what": "fixed-lo", "sigma": a.sigma, "phi_deg": a.phi, "T": t, "d": a.d, "form": form }))
        }
    };
    let Some(values) = values else { return print_json(&meta) };
    let table = Table { columns: vec!["omega".into(), "value".into()], rows: values.into_iter().map(|(w, v)| vec![w, v]).collect() };
    match &a.out {
        Some(p) => std::fs::write(p.with_extension("json"), serde_json::to_string_pretty(&meta)?)?,
        None => eprintln!("{}", serde_json::to_string(&meta)?),
    }
    emit_table(&table, a.out.as_deref())
}

fn simulate(a: SimulateArgs) -> anyhow::Result<ExitCode> {
    let opts = ExecOptions {
        workers: a.workers,
        shard: a.shard.as_deref().map(Shard::parse).transpose()?,
        checkpoint_dir: None,
        progress: a.progress,
    };
    if let Some(m) = &a.manifest {
        let new = replay_manifest(m, a.out.clone(), &opts)?;
        eprintln!("replayed {} outputs with identical digests into {}", new.outputs.len(), new.config.output.dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    let Some(seed) = a.seed else { bail!("--seed is required unless --manifest is given") };
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::rotating_default(1000, seed),
    };
    apply_overrides(&mut c, &a, seed);
    match run_ensemble(&c, &opts)? {
        RunOutcome::Finished(m) => {
            let r = &m.results;
            eprintln!(
                "{} trajectories completed, {} diverged, {:.1} s; outputs in {}",
                r.completed,
                r.diverged,
                m.wall_time_s,
                c.output.dir.display()
            );
            if let Some(s) = &r.theta_slope {
                eprintln!("V_theta/D slope {:.5} +- {:.5}, R^2 {:.5}", s.fit.slope, s.slope_stderr, s.fit.r2);
            }
            if let Some(f) = &r.fit {
                eprintln!("phase-quadrature fit a = {:.4} +- {:.4}, b = {:.4} +- {:.4}", f.a, f.a_err, f.b, f.b_err);
            }
        }
        RunOutcome::Partial { done, total } => {
            eprintln!("{done} of {total} blocks complete; run the remaining shards, then once more without --shard to finalize");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn apply_overrides(c: &mut RunConfig, a: &SimulateArgs, seed: u64) {
    c.ensemble.master_seed = seed;
    if a.sigma.is_some() || a.kappa.is_some() || a.g.is_some() {
        let mut m = c.params().unwrap_or(opo::params::DimensionlessParams { sigma: std::f64::consts::SQRT_2, kappa: 1.0, g: 1e-3 });
        if let Some(x) = a.sigma {
            m.sigma = x;
        }
        if let Some(x) = a.kappa {
            m.kappa = x;
        }
        if let Some(x) = a.g {
            m.g = x;
        }
        c.model = Some(m);
        c.physical = None;
    }
    let i = &mut c.integrator;
    if let Some(x) = a.dt {
        i.dt = x;
    }
    if let Some(x) = a.tau_end {
        i.tau_end = x;
    }
    if let Some(x) = a.midpoint_iterations {
        i.midpoint_iterations = x;
    }
    if let Some(s) = a.system {
        i.system = match s {
            SystemArg::Full => SystemKind::Full,
            SystemArg::Reduced => SystemKind::Reduced,
            SystemArg::Adiabatic => SystemKind::Adiabatic,
        };
    }
    if let Some(x) = a.sample_every {
        i.sample_every = x;
    }
    let e = &mut c.ensemble;
    if let Some(x) = a.trajectories {
        e.trajectories = x;
    }
    if let Some(x) = a.stationary_cutoff {
        e.stationary_cutoff = x;
    }
    if let Some(x) = a.block_size {
        e.block_size = x;
    }
    if let Some(x) = a.workers {
        e.workers = x;
    }
    if let Some(x) = a.divergence_threshold {
        e.divergence_threshold = x;
    }
    let d = &mut c.detection;
    if let Some(m) = a.mode {
        d.mode = match m {
            ModeArg::Rotating => DetectionMode::Rotating,
            ModeArg::Fixed => DetectionMode::Fixed,
        };
    }
    if let Some(x) = &a.phi_deg {
        d.phi_deg = x.clone();
    }
    if let Some(x) = &a.omega {
        d.omega = x.clone();
    }
    if let Some(x) = a.omega_max {
        d.omega_max = x;
    }
    if let Some(x) = a.omega_points {
        d.omega_points = x;
    }
    if let Some(x) = a.max_lag {
        d.max_lag = x;
    }
    if let Some(x) = a.window_start {
        d.window_start = x;
    }
    if a.t.is_some() {
        d.t = a.t;
    }
    if a.theta0.is_some() {
        d.theta0 = a.theta0;
    }
    if let Some(o) = &a.out {
        c.output.dir = o.clone();
    }
    if a.no_checkpoint {
        c.output.checkpoint = false;
    }
}

fn spectrum(a: SpectrumArgs) -> anyhow::Result<ExitCode> {
    let phi = a.phi_deg.to_radians();
    let rows = lin_grid(0.0, a.omega_max, a.points)
        .into_iter()
        .map(|w| {
            let bd = bright_dark_spectra(w, a.sigma)?;
            Ok(vec![
                w,
                dark_quadrature_spectrum(w, phi),
                bd.x_bright,
                bd.y_bright,
                bd.x_dark,
                bd.y_dark,
                projection_spectrum(Projection::C1, w, a.sigma, a.g)?,
                projection_spectrum(Projection::C2, w, a.sigma, a.g)?,
                projection_spectrum(Projection::C3, w, a.sigma, a.g)?,
            ])
        })
        .collect::<opo::Result<Vec<_>>>()?;
    let t = Table {
        columns: ["omega", "v_dark_phi", "x_bright", "y_bright", "x_dark", "y_dark", "s_c1", "s_c2", "s_c3"].map(String::from).to_vec(),
        rows,
    };
    emit_table(&t, a.out.as_deref())
}

fn fixed_lo(a: FixedLoArgs) -> anyhow::Result<ExitCode> {
    let phi = a.phi_deg.to_radians();
    let t = match a.t {
        Some(t) => t,
        None => optimal_detection_time(a.sigma, a.d)?,
    };
    let form: FixedLoForm = a.form.into();
    let mut columns = vec!["omega".to_string(), "v_out".into(), "v_db".into()];
    if a.composed_step.is_some() {
        columns.push("v_composed".into());
    }
    let rows = lin_grid(0.0, a.omega_max, a.points)
        .into_iter()
        .map(|w| {
            let v = fixed_lo_spectrum_with(w, phi, t, a.d, a.sigma, form);
            let mut r = vec![w, v, to_db(v)];
            if let Some(h) = a.composed_step {
                r.push(fixed_lo_spectrum_composed(w, phi, t, a.d, a.sigma, h)?);
            }
            Ok(r)
        })
        .collect::<opo::Result<Vec<_>>>()?;
    eprintln!("T = {t:.6e}, optimal omega at this phase = {:.6}", optimal_noise_frequency(phi, a.sigma, a.d)?);
    emit_table(&Table { columns, rows }, a.out.as_deref())
}

fn compare(a: CompareArgs) -> anyhow::Result<ExitCode> {
    let tol = Tolerances { z_max: a.z_max, ..Default::default() };
    let rep = match &a.against {
        Some(b) => compare_runs(&a.run, b, &tol)?,
        None => compare_with_theory(&a.run, &tol, a.form.into())?,
    };
    if a.json {
        write_stdout(&(serde_json::to_string_pretty(&rep)? + "\n"))?;
    } else {
        write_stdout(&rep.to_text())?;
    }
    Ok(if rep.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VALIDATION) })
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        bail!("grid '{s}' must look like lo:hi:n or lo:hi:n:log");
    }
    let lo: f64 = parts[0].parse()?;
    let hi: f64 = parts[1].parse()?;
    let n: usize = parts[2].parse()?;
    match parts.get(3) {
        Some(&"log") => {
            if !(lo > 0.0 && hi > 0.0) {
                bail!("logarithmic grids need positive bounds");
            }
            Ok(log_grid(lo, hi, n))
        }
        Some(other) => bail!("unknown grid spacing '{other}'"),
        None => Ok(lin_grid(lo, hi, n)),
    }
}

fn sweep_cmd(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let form: FixedLoForm = a.form.into();
    let table = match &a.preset {
        Some(p) => preset(p.parse()?, form)?,
        None => {
            let axis = a.axis.as_deref().unwrap_or_default().parse()?;
            let grid = parse_grid(a.grid.as_deref().unwrap_or_default())?;
            let tpl = SweepTemplate { sigma: a.sigma, d: a.d, phi_deg: a.phi_deg, t: a.t, omega: a.omega, form };
            sweep(&tpl, axis, &grid)?
        }
    };
    emit_table(&table, a.out.as_deref())
}

fn validate_cmd(a: ValidateArgs) -> anyhow::Result<ExitCode> {
    let opts = ValidationOptions {
        scale: if a.quick { Scale::Quick } else { Scale::Full },
        work_dir: a.work_dir.unwrap_or_else(default_work_dir),
        workers: a.workers,
        progress: a.verbose,
    };
    let results = validate(&a.criteria, opts);
    write_stdout(&report(&results, a.verbose))?;
    Ok(if all_pass(&results) { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VALIDATION) })
}
