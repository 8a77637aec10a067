//! Executes one analysis and writes its CSV and `summary.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use softmax_analog::analysis::{self, MismatchSpec};
use softmax_analog::network::{LoadSpec, Technology};
use softmax_analog::noise::{self, SHOT};
use softmax_analog::report::{self, format_number, Summary};
use softmax_analog::transient::{self, TransientConfig, Waveform};

use crate::config::{load_config, parse_config, LoadedConfig};
use crate::error::CliError;
use crate::presets::Preset;

/// Total power quoted for the NMOS processor, watts.
pub const PUBLISHED_NMOS_POWER: f64 = 1.08e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Sweep,
    Transient,
    Noise,
    Montecarlo,
    Margins,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Transient => "transient",
            Command::Noise => "noise",
            Command::Montecarlo => "montecarlo",
            Command::Margins => "margins",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub points: Option<usize>,
    pub trials: Option<usize>,
    pub sigma: Option<f64>,
    pub noise: Option<bool>,
}

impl RunManifest {
    pub fn new(command: Command, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config_path: None,
            preset: None,
            output_dir: output_dir.into(),
            seed: 0,
            points: None,
            trials: None,
            sigma: None,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn load(manifest: &RunManifest) -> Result<(LoadedConfig, String), CliError> {
    match (&manifest.config_path, manifest.preset) {
        (Some(path), None) => Ok((load_config(path)?, path.display().to_string())),
        (None, Some(p)) => Ok((parse_config(p.text(), p.name())?, format!("preset {}", p.name()))),
        (Some(_), Some(_)) => Err(CliError::Usage("give either --config or --preset, not both".into())),
        (None, None) => Err(CliError::Usage("one of --config or --preset is required".into())),
    }
}

fn missing(section: &str, origin: &str) -> CliError {
    CliError::Usage(format!("{origin} has no [{section}] section"))
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    files.push(path);
    Ok(())
}

fn power_lines(cfg: &LoadedConfig, s: &mut Summary) {
    let net = &cfg.network;
    let supply = net.v_supply_high - net.v_supply_low;
    let core = supply * net.tail.nominal_current;
    let copies = match net.load {
        LoadSpec::Mirrored { width_ratio, .. } => width_ratio,
        _ => 0.0,
    };
    let total = core * (1.0 + cfg.reference_paths as f64 + copies);
    s.line("power_core_w", format_number(core));
    s.line(
        "power_total_w",
        format!(
            "{} (core + {} reference path(s) + {} output copy)",
            format_number(total),
            cfg.reference_paths,
            copies
        ),
    );
    if net.technology == Technology::Nmos {
        s.line(
            "power_vs_published_1.08uW",
            format!("{} (approximate: block breakdown unpublished)", format_number(total / PUBLISHED_NMOS_POWER)),
        );
    }
}

/// Runs the manifest's command, writing outputs into `output_dir`.
pub fn run(manifest: &RunManifest) -> Result<RunOutcome, CliError> {
    let (cfg, origin) = load(manifest)?;
    let dir = &manifest.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut files = Vec::new();
    let mut s = Summary::new(&format!("softmax-analog {}", manifest.command.name()));
    s.line("config", &origin);
    s.line("seed", manifest.seed);

    match manifest.command {
        Command::Sweep => sweep(manifest, &cfg, &origin, &mut s, dir, &mut files)?,
        Command::Transient => transient(manifest, &cfg, &origin, &mut s, dir, &mut files)?,
        Command::Noise => noise_budget(&cfg, &origin, &mut s, dir, &mut files)?,
        Command::Montecarlo => montecarlo(manifest, &cfg, &origin, &mut s, dir, &mut files)?,
        Command::Margins => margins(&cfg, &origin, &mut s)?,
    }
    power_lines(&cfg, &mut s);
    let summary = s.into_string();
    write(dir, "summary.txt", &summary, &mut files)?;
    Ok(RunOutcome { files, summary })
}

fn sweep(
    m: &RunManifest,
    cfg: &LoadedConfig,
    origin: &str,
    s: &mut Summary,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let sec = cfg.sweep.as_ref().ok_or_else(|| missing("sweep", origin))?;
    let points = m.points.unwrap_or(sec.points);
    let r = analysis::sigmoid_sweep(&cfg.network, sec.branch, (sec.start, sec.stop), points, sec.bias)
        .map_err(CliError::analysis("sweep"))?;
    write(dir, "sweep.csv", &report::sweep_csv(&r), files)?;
    s.line("points", points);
    s.line("swept_branch", sec.branch);
    s.line("max_abs_error_pct", format_number(r.max_abs_error_pct));
    Ok(())
}

/// Transient setup described by the `[transient]` section: the output branch
/// is driven by the pulse, every other input sits at `bias`.
pub fn transient_config(
    cfg: &LoadedConfig,
    origin: &str,
    noise: Option<bool>,
    seed: u64,
) -> Result<TransientConfig<f64>, CliError> {
    let sec = cfg.transient.as_ref().ok_or_else(|| missing("transient", origin))?;
    let cap = cfg.load_capacitance.ok_or_else(|| missing("load.capacitance", origin))?;
    let duration = sec.duration.unwrap_or(2.0 / sec.frequency);
    let mut waves = vec![Waveform::constant(sec.bias); cfg.network.class_size];
    waves[sec.output_branch] = Waveform::pulse(sec.low, sec.high, sec.frequency, sec.duty, duration)
        .map_err(CliError::analysis("transient"))?;
    let mut tc = TransientConfig::new(cfg.network.clone(), cap, waves).map_err(CliError::analysis("transient"))?;
    tc.duration = duration;
    if let Some(h) = sec.time_step {
        tc.time_step = h;
    }
    if let Some(bw) = sec.noise_bandwidth {
        tc.noise_bandwidth = bw;
    }
    tc.noise_enabled = noise.unwrap_or(sec.noise);
    tc.rng_seed = seed;
    tc.output_branch = sec.output_branch;
    Ok(tc)
}

fn transient(
    m: &RunManifest,
    cfg: &LoadedConfig,
    origin: &str,
    s: &mut Summary,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let tc = transient_config(cfg, origin, m.noise, m.seed)?;
    let r = transient::run_transient(&tc).map_err(CliError::analysis("transient"))?;
    write(dir, "transient.csv", &report::transient_csv(&r), files)?;
    let ns = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), |t| format_number(t * 1e9));
    s.line("noise", if tc.noise_enabled { "on" } else { "off" });
    s.line("time_constant_ns", format_number(tc.time_constant().map_err(CliError::analysis("transient"))? * 1e9));
    s.line("rise_time_1090_ns", ns(r.rise_time_1090));
    s.line("fall_time_9010_ns", ns(r.fall_time_9010));
    s.line("settle_time_998_ns", ns(r.settle_time_998));
    s.line("snr_db", format_number(r.snr_db));
    s.line("noise_error_pct", format_number(r.noise_error_pct));
    Ok(())
}

fn noise_budget(
    cfg: &LoadedConfig,
    origin: &str,
    s: &mut Summary,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let sec = cfg.noise.as_ref().ok_or_else(|| missing("noise", origin))?;
    let env = &cfg.network.env;
    let budget = noise::branch_noise_budget(
        sec.resistance,
        sec.current,
        sec.bandwidth,
        sec.flicker_constant,
        sec.frequency,
        env,
    )
    .map_err(CliError::analysis("noise"))?;
    write(dir, "noise.csv", &report::noise_csv(&budget), files)?;
    s.line("total_rms_v", format_number(budget.total_rms));
    s.line("total_rss_v", format_number(budget.total_rss));
    for term in &budget.terms {
        s.line(&format!("fraction_{}_pct", term.label), format_number(100.0 * term.fraction));
    }
    if sec.compare_low_noise {
        let linear = noise::branch_noise_sources(
            sec.resistance,
            sec.current,
            sec.bandwidth,
            sec.flicker_constant,
            sec.frequency,
        );
        let low_noise: Vec<_> = linear.iter().filter(|src| src.label == SHOT).cloned().collect();
        let cmp = noise::compare_load_budgets(&linear, &low_noise, env).map_err(CliError::analysis("noise"))?;
        write(dir, "noise_low_noise.csv", &report::noise_csv(&cmp.budget_b), files)?;
        s.line("low_noise_total_rms_v", format_number(cmp.budget_b.total_rms));
        s.line("snr_gain_low_noise_db", format_number(cmp.snr_delta_db));
    }
    Ok(())
}

fn montecarlo(
    m: &RunManifest,
    cfg: &LoadedConfig,
    origin: &str,
    s: &mut Summary,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let sec = cfg.montecarlo.as_ref().ok_or_else(|| missing("montecarlo", origin))?;
    let inputs = match (&sec.inputs, &cfg.sweep) {
        (Some(x), _) => x.clone(),
        (None, Some(sw)) => vec![sw.bias; cfg.network.class_size],
        (None, None) => return Err(missing("montecarlo.inputs", origin)),
    };
    let spec = MismatchSpec {
        sigma_rel: m.sigma.unwrap_or(sec.sigma),
        trials: m.trials.unwrap_or(sec.trials),
        rng_seed: m.seed,
    };
    let r = analysis::mismatch_monte_carlo(&cfg.network, &inputs, &spec).map_err(CliError::analysis("montecarlo"))?;
    write(dir, "montecarlo.csv", &report::montecarlo_csv(&r), files)?;
    s.line("sigma_rel", format_number(spec.sigma_rel));
    s.line("trials", spec.trials);
    s.line("rejected_trials", r.rejected);
    s.line("mean_max_rel_error", format_number(r.mean_max_error));
    s.line("median_max_rel_error", format_number(r.median_max_error));
    s.line("p95_max_rel_error", format_number(r.p95_max_error));
    s.line("median_branch_rel_error", format_number(r.median_branch_error));
    s.line("p95_branch_rel_error", format_number(r.p95_branch_error));
    if spec.sigma_rel > 0.0 && spec.sigma_rel < 1.0 {
        let first = analysis::mismatch_first_order_error(spec.sigma_rel, &inputs, &cfg.network, 0)
            .map_err(CliError::analysis("montecarlo"))?;
        let exact = analysis::mismatch_exact_error(spec.sigma_rel, &inputs, &cfg.network, 0)
            .map_err(CliError::analysis("montecarlo"))?;
        s.line("first_order_error_at_sigma", format_number(first));
        s.line("exact_single_branch_error_at_sigma", format_number(exact));
    }
    Ok(())
}

fn margins(cfg: &LoadedConfig, origin: &str, s: &mut Summary) -> Result<(), CliError> {
    let sec = cfg.margins.as_ref().ok_or_else(|| missing("margins", origin))?;
    let supply = cfg.network.v_supply_high - cfg.network.v_supply_low;
    let r = analysis::supply_margin_report(sec.threshold_voltage, sec.swing, sec.stacked_mirrors, supply, sec.overdrive)
        .map_err(CliError::analysis("margins"))?;
    s.line("stacked_mirrors", sec.stacked_mirrors);
    s.line("supply_margin_v", format_number(r.margin));
    s.line("supply_v", format_number(r.supply));
    s.line(
        "margin_status",
        if r.exceeds_supply {
            "EXCEEDS SUPPLY"
        } else {
            "within supply"
        },
    );
    s.line("saturation_source_min_v", format_number(r.saturation_source_min));
    Ok(())
}
