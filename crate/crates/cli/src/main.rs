//! `delaywave`: batch front end for simulation, spectra, resolvent sweeps and
//! the verification suite.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use delaywave_core::diagnostics::{check_dissipation, write_snapshot_csv, DISSIPATION_TOL};
use delaywave_core::discretize::build_mesh;
use delaywave_core::evolve::{simulate, Scheme};
use delaywave_core::generator::{assemble_generator, SemiDiscreteSystem};
use delaywave_core::model::{build_initial_state, validate_params, InitialPreset, ModelParams};
use delaywave_core::spectral::{
    eigenvalues, eigenvalues_near, fit_growth_exponent, linear_grid, log_grid, resolvent_sweep, write_resolvent_csv,
    Complex64,
};
use delaywave_core::verify;

#[derive(Parser)]
#[command(
    name = "delaywave",
    version,
    about = "Coupled wave system with Kelvin-Voigt damping and internal delay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the semi-discrete system and write the energy trace.
    Simulate(SimulateArgs),
    /// Eigenvalues of the semi-discrete generator.
    Spectrum(SpectrumArgs),
    /// Energy-norm resolvent along the imaginary axis and its growth exponent.
    Resolvent(ResolventArgs),
    /// Run the acceptance property suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// key=value parameter file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 200)]
    nx: usize,
    #[arg(long, default_value_t = 16)]
    nrho: usize,
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 50.0)]
    t_end: f64,
    /// backward_euler (be) or crank_nicolson (cn).
    #[arg(long, default_value = "backward_euler")]
    scheme: String,
    /// zero, smooth, sine_velocity or bump.
    #[arg(long, default_value = "smooth")]
    preset: String,
    /// Write `snapshot_<step>.csv` every k steps (and at step 0).
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 50)]
    nx: usize,
    #[arg(long, default_value_t = 8)]
    nrho: usize,
    /// Only the `count` eigenvalues nearest `i * shift_im` (shift-invert Arnoldi).
    #[arg(long, requires = "count")]
    shift_im: Option<f64>,
    #[arg(long, requires = "shift_im")]
    count: Option<usize>,
}

#[derive(Args)]
struct ResolventArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100)]
    nx: usize,
    #[arg(long, default_value_t = 16)]
    nrho: usize,
    #[arg(long, default_value_t = 1.0)]
    lmin: f64,
    /// Defaults to, and is clipped at, the mesh resolution limit.
    #[arg(long)]
    lmax: Option<f64>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write `verify.json` here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Usage or configuration problem (exit 2) vs. runtime failure.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<delaywave_core::Error> for Failure {
    fn from(e: delaywave_core::Error) -> Self {
        use delaywave_core::Error as E;
        match e {
            E::Parameter(_)
            | E::Geometry(_)
            | E::Hypothesis { .. }
            | E::Resolution(_)
            | E::Alignment { .. }
            | E::Config { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: ModelParams,
    config_text: String,
    sizes: BTreeMap<String, usize>,
    settings: serde_json::Value,
    started_unix: f64,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
    warnings: Vec<String>,
    checks: BTreeMap<String, bool>,
    pass: bool,
}

struct Run {
    command: &'static str,
    params: ModelParams,
    out_dir: PathBuf,
    started: Instant,
    started_unix: f64,
    sizes: BTreeMap<String, usize>,
    settings: serde_json::Value,
    outputs: Vec<String>,
    warnings: Vec<String>,
    checks: BTreeMap<String, bool>,
}

impl Run {
    fn new(command: &'static str, params: ModelParams, out_dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(out_dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Self {
            command,
            params,
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
            sizes: BTreeMap::new(),
            settings: json!({}),
            outputs: Vec::new(),
            warnings: Vec::new(),
            checks: BTreeMap::new(),
        })
    }

    fn record_system(&mut self, sys: &SemiDiscreteSystem) {
        self.sizes.insert("n_cells".into(), sys.mesh.n_cells());
        self.sizes.insert("n_interior".into(), sys.mesh.n_int);
        self.sizes.insert("n_eta_nodes".into(), sys.mesh.m_eta);
        self.sizes.insert("nrho".into(), sys.nrho());
        self.sizes.insert("state_dim".into(), sys.dim());
    }

    fn write(&mut self, name: &str, fill: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        fill(BufWriter::new(File::create(&path)?))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        self.write(name, |mut w| {
            serde_json::to_writer_pretty(&mut w, value)?;
            std::io::Write::write_all(&mut w, b"\n")
        })
    }

    /// Writes `manifest.json` and returns the overall verdict.
    fn finish(self) -> Result<bool, Failure> {
        let pass = self.checks.values().all(|&ok| ok);
        let manifest = RunManifest {
            command: self.command.into(),
            config: self.params,
            config_text: self.params.to_config_string(),
            sizes: self.sizes,
            settings: self.settings,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            warnings: self.warnings,
            checks: self.checks,
            pass,
        };
        let file = File::create(self.out_dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
        Ok(pass)
    }
}

fn load_params(path: Option<&Path>) -> Result<ModelParams, Failure> {
    let params = match path {
        None => ModelParams::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            ModelParams::from_config_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
    };
    let validated = validate_params(params)?;
    if validated.hypothesis_warning {
        eprintln!(
            "warning: kappa1 = {}, |kappa2| = {} violate 0 < |kappa2| < kappa1; dissipativity is not guaranteed",
            params.kappa1,
            params.kappa2.abs()
        );
    }
    Ok(params)
}

fn system(p: &ModelParams, nx: usize, nrho: usize) -> Result<SemiDiscreteSystem, Failure> {
    Ok(assemble_generator(p, &build_mesh(p, nx)?, nrho)?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<bool, Failure> {
    let params = load_params(args.common.config.as_deref())?;
    let scheme: Scheme = args.scheme.parse()?;
    let preset = InitialPreset::named(&args.preset, &params)
        .ok_or_else(|| Failure::Usage(format!("unknown preset `{}`", args.preset)))?;
    if args.snapshot_every == Some(0) {
        return Err(Failure::Usage("--snapshot-every must be positive".into()));
    }
    let sys = system(&params, args.nx, args.nrho)?;
    let u0 = build_initial_state(&params, &sys.mesh, &preset, args.nrho)?;
    let mut run = Run::new("simulate", params, &args.common.out_dir)?;
    run.record_system(&sys);
    run.settings = json!({
        "nx": args.nx, "dt": args.dt, "T": args.t_end,
        "scheme": scheme.to_string(), "preset": args.preset, "snapshot_every": args.snapshot_every,
    });
    let sim = simulate(&sys, &u0, args.dt, args.t_end, scheme, args.snapshot_every)?;
    run.write("energy.csv", |w| sim.trace.write_csv(w))?;
    let step_digits = (sim.trace.rows.len().max(2) - 1).to_string().len();
    for snap in &sim.snapshots {
        let step = (snap.t / args.dt).round() as usize;
        run.write(&format!("snapshot_{step:0step_digits$}.csv"), |w| {
            write_snapshot_csv(w, &sys, &snap.state)
        })?;
    }
    if scheme == Scheme::BackwardEuler {
        let report = check_dissipation(&sim.trace, DISSIPATION_TOL)?;
        if !report.pass {
            run.warnings.push(format!(
                "energy law violated at step {:?} (margin {:e})",
                report.worst_step, report.margin
            ));
        }
        run.checks.insert("energy_law".into(), report.pass);
        run.write_json("dissipation.json", &report)?;
    }
    run.finish()
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<bool, Failure> {
    let params = load_params(args.common.config.as_deref())?;
    let sys = system(&params, args.nx, args.nrho)?;
    let mut run = Run::new("spectrum", params, &args.common.out_dir)?;
    run.record_system(&sys);
    let (spec, method) = match (args.shift_im, args.count) {
        (Some(im), Some(count)) => (
            eigenvalues_near(&sys, Complex64::new(0.0, im), count)?,
            "shift_invert_arnoldi",
        ),
        _ => (eigenvalues(&sys)?, "dense_schur"),
    };
    run.settings = json!({ "nx": args.nx, "method": method, "shift_im": args.shift_im, "count": args.count });
    run.write("spectrum.csv", |w| spec.write_csv(w))?;
    run.write_json(
        "spectrum_summary.json",
        &json!({
            "method": method,
            "count": spec.eigenvalues.len(),
            "spectral_abscissa": spec.spectral_abscissa,
            "min_axis_distance": spec.min_axis_distance,
        }),
    )?;
    if params.satisfies_hypothesis() {
        run.checks
            .insert("spectral_abscissa_negative".into(), spec.spectral_abscissa < 0.0);
    }
    run.finish()
}

const GROWTH_BOUND: f64 = 2.3;

fn cmd_resolvent(args: &ResolventArgs) -> Result<bool, Failure> {
    let params = load_params(args.common.config.as_deref())?;
    if args.samples == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    let sys = system(&params, args.nx, args.nrho)?;
    let limit = sys.mesh.lambda_max();
    let mut run = Run::new("resolvent", params, &args.common.out_dir)?;
    run.record_system(&sys);
    let mut lmax = args.lmax.unwrap_or(limit);
    if lmax > limit {
        run.warnings.push(format!(
            "lmax {lmax} exceeds the mesh resolution limit {limit}; sweep clipped"
        ));
        lmax = limit;
    }
    if !(args.lmin >= 0.0 && lmax >= args.lmin) {
        return Err(Failure::Usage(format!(
            "need 0 <= lmin <= lmax, got [{}, {lmax}]",
            args.lmin
        )));
    }
    let grid = if args.samples == 1 {
        vec![args.lmin]
    } else if args.lmin > 0.0 {
        log_grid(args.lmin, lmax, args.samples)?
    } else {
        linear_grid(0.0, lmax, args.samples)
    };
    run.settings = json!({
        "nx": args.nx, "lmin": args.lmin, "lmax": lmax, "resolution_limit": limit, "samples": args.samples,
        "grid": if args.lmin > 0.0 { "log" } else { "linear" },
    });
    let samples = resolvent_sweep(&sys, &grid)?;
    run.write("resolvent.csv", |w| write_resolvent_csv(w, &samples))?;
    let lambda_floor = if args.lmin > 0.0 { args.lmin } else { 1.0 };
    let fit = match fit_growth_exponent(&samples, lambda_floor) {
        Ok(fit) => {
            run.checks
                .insert("growth_slope_bound".into(), fit.slope <= GROWTH_BOUND);
            json!({ "slope": fit.slope, "C": fit.c, "lambda_min": fit.lambda_min,
                    "samples_used": fit.samples_used, "bound": GROWTH_BOUND })
        }
        Err(e) => {
            run.warnings.push(format!("growth exponent not fitted: {e}"));
            json!({ "slope": null, "reason": e.to_string() })
        }
    };
    run.write_json("growth_fit.json", &fit)?;
    run.checks.insert(
        "finite_resolvent".into(),
        samples.iter().all(|s| s.res_norm.is_finite()),
    );
    run.finish()
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let params = load_params(args.config.as_deref())?;
    let reports = verify::run_all(&params);
    for r in &reports {
        println!("{}", r.line());
    }
    let pass = reports.iter().all(|r| r.pass);
    if let Some(dir) = &args.out_dir {
        let mut run = Run::new("verify", params, dir)?;
        run.settings = json!({ "criteria": reports.len() });
        for r in &reports {
            run.checks.insert(format!("criterion_{}", r.id), r.pass);
        }
        run.write_json("verify.json", &reports)?;
        run.finish()?;
    }
    if !pass {
        let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| r.id.to_string()).collect();
        eprintln!("failing criteria: {}", failed.join(", "));
    }
    Ok(pass)
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("DELAYWAVE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("DELAYWAVE_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Resolvent(a) => cmd_resolvent(a),
        Command::Verify(a) => cmd_verify(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
