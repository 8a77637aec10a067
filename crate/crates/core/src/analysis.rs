//! Evaluation procedures: sigmoid-sweep accuracy, compute-regime
//! classification, device-mismatch analysis and supply headroom.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::devices::TailSourceSpec;
use crate::error::{Error, Result};
use crate::network::{self, NetworkConfig};
use crate::oracle;
use crate::scalar::{lit, Scalar};

/// Solver tolerance for sweeps and mismatch solves, relative to tail current.
pub const ANALYSIS_TOL_FRACTION: f64 = 1e-12;
/// Default single-dominant threshold on the largest share.
pub const DOMINANT_THRESHOLD: f64 = 0.9;
/// Default well-matched threshold: largest share at most `factor / N`.
pub const MATCHED_FACTOR: f64 = 2.0;
/// Headroom floor added by the supply-margin estimate, volts.
pub const MARGIN_FLOOR: f64 = 0.2;

fn analysis_tol<T: Scalar>(config: &NetworkConfig<T>) -> T {
    config.tail.nominal_current * lit(ANALYSIS_TOL_FRACTION)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub swept_input: Vec<T>,
    /// Branch output divided by the ideal full scale `I_tail R_effective`.
    pub measured_fraction: Vec<T>,
    pub ideal_fraction: Vec<T>,
    /// `measured - ideal`.
    pub error: Vec<T>,
    pub max_abs_error_pct: T,
}

/// Sweeps input `branch_index` over `sweep_range` with every other input at
/// `dc_bias` and scores the branch output against the collapsed sigmoid.
pub fn sigmoid_sweep<T: Scalar>(
    config: &NetworkConfig<T>,
    branch_index: usize,
    sweep_range: (T, T),
    points: usize,
    dc_bias: T,
) -> Result<SweepResult<T>> {
    config.validate()?;
    let n = config.class_size;
    if branch_index >= n {
        return Err(Error::domain(format!("branch_index {branch_index} out of range for {n} branches")));
    }
    if points < 3 {
        return Err(Error::domain("a sweep needs at least 3 points"));
    }
    let (lo, hi) = sweep_range;
    if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
        return Err(Error::domain("sweep range must be finite and increasing"));
    }
    if lo < config.v_supply_low || hi > config.v_supply_high {
        return Err(Error::domain("sweep range must lie within the supply rails"));
    }
    let full_scale = config.full_scale_output()?;
    let scale = config.exponent_scale();
    let tol = analysis_tol(config);

    let mut out = SweepResult {
        swept_input: Vec::with_capacity(points),
        measured_fraction: Vec::with_capacity(points),
        ideal_fraction: Vec::with_capacity(points),
        error: Vec::with_capacity(points),
        max_abs_error_pct: T::zero(),
    };
    let mut inputs = vec![dc_bias; n];
    let mut worst = T::zero();
    for p in 0..points {
        let x = lo + (hi - lo) * lit::<T>(p as f64) / lit::<T>((points - 1) as f64);
        inputs[branch_index] = x;
        let op = network::solve_operating_point(config, &inputs, tol)
            .map_err(|e| e.at(format!("sweep point {:.6} V", x.as_f64())))?;
        let measured = op.output_voltages[branch_index] / full_scale;
        let ideal = oracle::sigmoid_reference(x, dc_bias, scale, n)?;
        let err = measured - ideal;
        worst = worst.max(err.abs());
        out.swept_input.push(x);
        out.measured_fraction.push(measured);
        out.ideal_fraction.push(ideal);
        out.error.push(err);
    }
    out.max_abs_error_pct = lit::<T>(100.0) * worst;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComputeRegime {
    WellMatched,
    SingleDominant,
    Intermediate,
}

impl ComputeRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            ComputeRegime::WellMatched => "well_matched",
            ComputeRegime::SingleDominant => "single_dominant",
            ComputeRegime::Intermediate => "intermediate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    pub dominant: f64,
    pub matched_factor: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            dominant: DOMINANT_THRESHOLD,
            matched_factor: MATCHED_FACTOR,
        }
    }
}

/// Classifies an input vector by its largest Softmax share.
pub fn classify_compute<T: Scalar>(inputs: &[T], scale: T) -> Result<ComputeRegime> {
    classify_compute_with(inputs, scale, RegimeThresholds::default())
}

pub fn classify_compute_with<T: Scalar>(
    inputs: &[T],
    scale: T,
    thresholds: RegimeThresholds,
) -> Result<ComputeRegime> {
    let p = oracle::softmax(inputs, scale)?;
    let peak = p.max().1.as_f64();
    let matched = thresholds.matched_factor / p.len() as f64;
    Ok(if peak >= thresholds.dominant {
        ComputeRegime::SingleDominant
    } else if peak <= matched {
        ComputeRegime::WellMatched
    } else {
        ComputeRegime::Intermediate
    })
}

fn check_delta<T: Scalar>(delta_c_rel: T) -> Result<()> {
    if !delta_c_rel.is_finite() || !(delta_c_rel.abs() < T::one()) {
        return Err(Error::domain("relative mismatch must satisfy |delta| < 1"));
    }
    Ok(())
}

/// First-order relative error of branch `branch_index` for a prefactor
/// mismatch `delta_c_rel` on that branch: simply `delta_c_rel`.
pub fn mismatch_first_order_error<T: Scalar>(
    delta_c_rel: T,
    inputs: &[T],
    config: &NetworkConfig<T>,
    branch_index: usize,
) -> Result<T> {
    check_delta(delta_c_rel)?;
    config.validate()?;
    if inputs.len() != config.class_size || branch_index >= config.class_size {
        return Err(Error::domain("inputs or branch_index inconsistent with class_size"));
    }
    Ok(delta_c_rel)
}

/// Exact relative error of branch `branch_index` when only that branch's
/// prefactor is scaled by `1 + delta_c_rel`, from two full network solves.
pub fn mismatch_exact_error<T: Scalar>(
    delta_c_rel: T,
    inputs: &[T],
    config: &NetworkConfig<T>,
    branch_index: usize,
) -> Result<T> {
    check_delta(delta_c_rel)?;
    if branch_index >= config.class_size {
        return Err(Error::domain("branch_index out of range"));
    }
    let mut factors = vec![T::one(); config.class_size];
    factors[branch_index] = T::one() + delta_c_rel;
    let tol = analysis_tol(config);
    let nominal = network::solve_operating_point(config, inputs, tol)?;
    let skewed = network::solve_operating_point(&config.with_prefactor_scaling(&factors)?, inputs, tol)?;
    let i0 = nominal.branch_currents[branch_index];
    Ok((skewed.branch_currents[branch_index] - i0) / i0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec<T> {
    /// Standard deviation of `delta_c / C`.
    pub sigma_rel: T,
    pub trials: usize,
    pub rng_seed: u64,
}

impl<T: Scalar> MismatchSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_rel >= T::zero()) || !self.sigma_rel.is_finite() {
            return Err(Error::domain("sigma_rel must be finite and non-negative"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult<T> {
    /// Index of each accepted trial, ascending.
    pub trial_index: Vec<usize>,
    /// Max over branches of `|I_k - I_k,nominal| / I_k,nominal`, per accepted trial.
    pub max_rel_error: Vec<T>,
    /// Trials discarded because a draw made a prefactor non-positive.
    pub rejected: usize,
    pub mean_max_error: T,
    pub median_max_error: T,
    pub p95_max_error: T,
    /// Statistics of every branch error of every accepted trial.
    pub median_branch_error: T,
    pub p95_branch_error: T,
}

/// Nearest-rank percentile of sorted data, `q` in (0, 1].
fn percentile<T: Scalar>(sorted: &[T], q: f64) -> T {
    if sorted.is_empty() {
        return T::nan();
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn median<T: Scalar>(sorted: &[T]) -> T {
    let n = sorted.len();
    match n {
        0 => T::nan(),
        _ if n % 2 == 1 => sorted[n / 2],
        _ => (sorted[n / 2 - 1] + sorted[n / 2]) * lit(0.5),
    }
}

fn sorted<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    v
}

enum Trial<T> {
    Accepted(Vec<T>),
    Rejected,
}

fn run_trial<T: Scalar>(
    config: &NetworkConfig<T>,
    inputs: &[T],
    spec: &MismatchSpec<T>,
    nominal: &[T],
    trial: usize,
) -> Result<Trial<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    rng.set_stream(trial as u64);
    let factors: Vec<T> = (0..config.class_size)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            T::one() + spec.sigma_rel * lit(z)
        })
        .collect();
    if factors.iter().any(|&f| !(f > T::zero())) {
        return Ok(Trial::Rejected);
    }
    let skewed = config.with_prefactor_scaling(&factors)?;
    let op = network::solve_operating_point(&skewed, inputs, analysis_tol(config))
        .map_err(|e| e.at(format!("Monte-Carlo trial {trial}")))?;
    Ok(Trial::Accepted(
        op.branch_currents
            .iter()
            .zip(nominal)
            .map(|(&i, &i0)| ((i - i0) / i0).abs())
            .collect(),
    ))
}

/// Draws `delta_c_k / C ~ N(0, sigma_rel)` per branch and trial, solves the
/// full network and records the worst branch error. Trial `t` uses stream
/// `t` of `rng_seed`, so results do not depend on how trials are scheduled.
pub fn mismatch_monte_carlo<T: Scalar>(
    config: &NetworkConfig<T>,
    inputs: &[T],
    spec: &MismatchSpec<T>,
) -> Result<MonteCarloResult<T>> {
    spec.validate()?;
    let nominal = network::solve_operating_point(config, inputs, analysis_tol(config))?.branch_currents;

    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(spec.trials);
    let chunk = spec.trials.div_ceil(workers);
    let outcomes: Vec<Result<Trial<T>>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let nominal = &nominal;
                s.spawn(move || {
                    let end = ((w + 1) * chunk).min(spec.trials);
                    (w * chunk..end)
                        .map(|t| run_trial(config, inputs, spec, nominal, t))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("Monte-Carlo worker panicked"))
            .collect()
    });

    let mut trial_index = Vec::new();
    let mut max_rel_error = Vec::new();
    let mut pooled = Vec::new();
    let mut rejected = 0;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Trial::Accepted(errs) => {
                trial_index.push(t);
                max_rel_error.push(errs.iter().copied().fold(T::zero(), T::max));
                pooled.extend(errs);
            }
            Trial::Rejected => rejected += 1,
        }
    }
    let count = lit::<T>(max_rel_error.len() as f64);
    let mean = if max_rel_error.is_empty() {
        T::nan()
    } else {
        max_rel_error.iter().fold(T::zero(), |a, &b| a + b) / count
    };
    let by_max = sorted(max_rel_error.clone());
    let pooled = sorted(pooled);
    Ok(MonteCarloResult {
        trial_index,
        mean_max_error: mean,
        median_max_error: median(&by_max),
        p95_max_error: percentile(&by_max, 0.95),
        median_branch_error: median(&pooled),
        p95_branch_error: percentile(&pooled, 0.95),
        max_rel_error,
        rejected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSweep<T> {
    pub sigmas: Vec<T>,
    pub mean_max_error: Vec<T>,
    /// Least-squares slope of a line through the origin.
    pub slope: T,
    /// Coefficient of determination of that line against the mean of the data.
    pub r_squared: T,
}

/// Runs [`mismatch_monte_carlo`] at each sigma and fits `error = slope * sigma`.
pub fn mismatch_sigma_sweep<T: Scalar>(
    config: &NetworkConfig<T>,
    inputs: &[T],
    sigmas: &[T],
    trials: usize,
    rng_seed: u64,
) -> Result<SigmaSweep<T>> {
    if sigmas.len() < 2 {
        return Err(Error::domain("a sigma sweep needs at least two sigmas"));
    }
    let mut means = Vec::with_capacity(sigmas.len());
    for &sigma_rel in sigmas {
        let spec = MismatchSpec {
            sigma_rel,
            trials,
            rng_seed,
        };
        means.push(mismatch_monte_carlo(config, inputs, &spec)?.mean_max_error);
    }
    let (slope, r_squared) = fit_through_origin(sigmas, &means);
    Ok(SigmaSweep {
        sigmas: sigmas.to_vec(),
        mean_max_error: means,
        slope,
        r_squared,
    })
}

/// Slope and R^2 of `y = slope * x`.
pub fn fit_through_origin<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let sxy = x.iter().zip(y).fold(T::zero(), |a, (&u, &v)| a + u * v);
    let sxx = x.iter().fold(T::zero(), |a, &u| a + u * u);
    let slope = sxy / sxx;
    let n = lit::<T>(y.len() as f64);
    let y_mean = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let ss_res = x
        .iter()
        .zip(y)
        .fold(T::zero(), |a, (&u, &v)| a + (v - slope * u) * (v - slope * u));
    let ss_tot = y.iter().fold(T::zero(), |a, &v| a + (v - y_mean) * (v - y_mean));
    (slope, T::one() - ss_res / ss_tot)
}

/// Minimum supply for the subthreshold network: `2 V_TH,sub + V_swing + 0.2 V`
/// with the tail mirror alone, plus two more thresholds with a cascode load.
pub fn supply_margin<T: Scalar>(v_th_sub: T, v_swing: T, stacked_mirrors: usize) -> Result<T> {
    if !(v_th_sub >= T::zero()) || !(v_swing >= T::zero()) {
        return Err(Error::domain("supply margin inputs must be non-negative"));
    }
    let thresholds = match stacked_mirrors {
        1 => 2.0,
        2 => 4.0,
        other => {
            return Err(Error::domain(format!("stacked_mirrors must be 1 or 2, got {other}")));
        }
    };
    Ok(lit::<T>(thresholds) * v_th_sub + v_swing + lit(MARGIN_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyMarginReport<T> {
    pub margin: T,
    pub supply: T,
    pub exceeds_supply: bool,
    /// Source-node minimum in saturation, `V_TH + 2 V_OV`.
    pub saturation_source_min: T,
}

pub fn supply_margin_report<T: Scalar>(
    v_th_sub: T,
    v_swing: T,
    stacked_mirrors: usize,
    supply: T,
    overdrive: T,
) -> Result<SupplyMarginReport<T>> {
    let margin = supply_margin(v_th_sub, v_swing, stacked_mirrors)?;
    if !(overdrive >= T::zero()) {
        return Err(Error::domain("overdrive must be non-negative"));
    }
    Ok(SupplyMarginReport {
        margin,
        supply,
        exceeds_supply: margin > supply,
        saturation_source_min: v_th_sub + lit::<T>(2.0) * overdrive,
    })
}

/// Spread of the tail current while the shared node moves over `node_range`.
pub fn tail_systematic_gain_error<T: Scalar>(tail: &TailSourceSpec<T>, node_range: (T, T)) -> T {
    (tail.current(node_range.1) - tail.current(node_range.0)).abs()
}
