use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use crowd_core::dynamics::{read_trajectory, write_trajectory};
use crowd_core::harness::{
    emit_plot_svg, figure_series, read_results, run_sweep, write_results, Figure, RunManifest, SweepOptions,
};
use crowd_core::metrics::RunSummary;
use crowd_core::observers::{
    classification_rows, fit_linear_classifier, write_classification_dump, FitConfig, WindowedFeatures,
};
use crowd_core::{run_simulation, ObserverConfig, SimParams};
use log::info;
use serde_json::Value;

/// Environment variable that sets the sweep worker count when `--parallel` is absent.
const PARALLEL_ENV: &str = "CROWDOBS_PARALLEL";

#[derive(Parser)]
#[command(name = "crowdobs", version = crowd_core::TOOL_VERSION, about = "Counterflow crowd simulation and observer analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trajectory, classification dump and summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded parameter sweep; finished points are cached under `<out>/points`.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `runs_per_point` from the manifest.
        #[arg(long)]
        runs: Option<usize>,
        /// Worker threads.
        #[arg(long, env = PARALLEL_ENV)]
        parallel: Option<usize>,
    },
    /// Classify every window of a stored trajectory.
    Classify {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, value_enum)]
        observer: ObserverKind,
        #[arg(long)]
        out: PathBuf,
        /// Window length in frames.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Fixed scale for the neighborhood observer.
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Render one figure from a results file.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        figure: Figure,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObserverKind {
    Agent,
    Neighborhood,
    Fitted,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 1,
            error: error.into(),
        }
    }
}

impl From<crowd_core::Error> for Failure {
    fn from(e: crowd_core::Error) -> Self {
        Failure {
            code: if e.is_config() { 1 } else { 2 },
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::config)
}

fn object_keys(v: &Value) -> BTreeSet<String> {
    v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
}

/// A simulation config is one flat object holding any SimParams and
/// ObserverConfig fields; missing fields take their defaults.
fn load_sim_config(path: &Path) -> CliResult<(SimParams, ObserverConfig)> {
    let value = read_json(path)?;
    if !value.is_object() {
        return Err(Failure::config(anyhow!("{}: expected a JSON object", path.display())));
    }
    let mut known = object_keys(&serde_json::to_value(SimParams::default()).map_err(|e| anyhow!(e))?);
    known.extend(object_keys(&serde_json::to_value(ObserverConfig::default()).map_err(|e| anyhow!(e))?));
    if let Some(unknown) = object_keys(&value).into_iter().find(|k| !known.contains(k)) {
        return Err(Failure::config(anyhow!("{}: unknown field `{unknown}`", path.display())));
    }
    let parse = |what| move |e: serde_json::Error| Failure::config(anyhow!("{}: {what}: {e}", path.display()));
    let params: SimParams = serde_json::from_value(value.clone()).map_err(parse("simulation parameters"))?;
    let observer: ObserverConfig = serde_json::from_value(value).map_err(parse("observer settings"))?;
    params.validate()?;
    observer.validate()?;
    Ok((params, observer))
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::from)
}

fn simulate(config: &Path, out: &Path) -> CliResult {
    let (params, observer) = load_sim_config(config)?;
    let mu = observer.resolve_mu(params.density, params.number_ratio)?;
    create_dir(out)?;
    let traj = run_simulation(&params)?;
    write_trajectory(&traj, &out.join("trajectory.csv"))?;
    let features = WindowedFeatures::from_trajectory(&traj, &observer)?;
    let rows = classification_rows(&features, &traj.labels, mu)?;
    write_classification_dump(&rows, &out.join("classification.csv"))?;
    let summary = RunSummary::measure(&traj, &features, mu, params.seed)?;
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&serde_json::json!({ "mu": mu, "summary": summary }))
        .map_err(|e| anyhow!(e))?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {} frames to {}", traj.frames.len(), out.display());
    Ok(())
}

fn sweep(manifest_path: &Path, out: &Path, runs: Option<usize>, parallel: Option<usize>) -> CliResult {
    let value = read_json(manifest_path)?;
    let mut manifest: RunManifest = serde_json::from_value(value)
        .with_context(|| format!("parsing {}", manifest_path.display()))
        .map_err(Failure::config)?;
    if let Some(k) = runs {
        manifest.runs_per_point = k;
    }
    if parallel == Some(0) {
        return Err(Failure::config(anyhow!("--parallel must be at least 1")));
    }
    if manifest.timestamp.is_empty() {
        manifest.timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    }
    manifest.validate()?;
    create_dir(out)?;
    let options = SweepOptions {
        cache_dir: Some(out.join("points")),
        threads: parallel,
    };
    info!(
        "sweeping {} points x {} runs",
        manifest.grid.len(),
        manifest.runs_per_point
    );
    let records = run_sweep(&manifest, &options)?;
    write_results(&records, Some(&manifest), &out.join("results.csv"))?;
    Ok(())
}

fn classify(
    trajectory: &Path,
    kind: ObserverKind,
    out: &Path,
    window: Option<usize>,
    epsilon: Option<f64>,
    mu: Option<f64>,
) -> CliResult {
    let defaults = ObserverConfig::default();
    let config = ObserverConfig {
        window: window.unwrap_or(defaults.window),
        epsilon: epsilon.unwrap_or(defaults.epsilon),
        mu,
        ..defaults
    };
    config.validate()?;
    let traj = read_trajectory(trajectory)?;
    let features = WindowedFeatures::from_trajectory(&traj, &config)?;
    let rows = match kind {
        ObserverKind::Agent => classification_rows(&features, &traj.labels, 0.0)?,
        ObserverKind::Neighborhood => {
            let mu = config.resolve_mu(traj.params.density, traj.params.number_ratio)?;
            classification_rows(&features, &traj.labels, mu)?
        }
        ObserverKind::Fitted => {
            let samples = features.samples(&traj.labels, 1);
            let fit = fit_linear_classifier(&samples, &FitConfig::default())?;
            info!(
                "fitted mu_hat {:.6}, training error {:.6}",
                fit.mu_hat, fit.training_error
            );
            let mut rows = classification_rows(&features, &traj.labels, 0.0)?;
            for r in &mut rows {
                r.pred_neighborhood = fit.predict(r.v_w, r.phi_bar_w);
            }
            rows
        }
    };
    write_classification_dump(&rows, out)?;
    Ok(())
}

fn report(results: &Path, figure: Figure, out: &Path) -> CliResult {
    let (records, _) = read_results(results)?;
    let (series, axes) = figure_series(&records, figure)?;
    emit_plot_svg(&series, &axes, out)?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Sweep {
            manifest,
            out,
            runs,
            parallel,
        } => sweep(&manifest, &out, runs, parallel),
        Command::Classify {
            trajectory,
            observer,
            out,
            window,
            epsilon,
            mu,
        } => classify(&trajectory, observer, &out, window, epsilon, mu),
        Command::Report { results, figure, out } => report(&results, figure, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut message = String::new();
            for cause in f.error.chain().map(|c| c.to_string()) {
                if !message.contains(&cause) {
                    message = if message.is_empty() { cause } else { format!("{message}: {cause}") };
                }
            }
            eprintln!("error: {message}");
            ExitCode::from(f.code)
        }
    }
}
