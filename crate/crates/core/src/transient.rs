//! Time-domain response of one branch into its RC output node.
//!
//! The differential core is treated as quasi-static: at every instant the
//! branch currents are the DC operating point for the instantaneous inputs.
//! Only the output node integrates, through the exact exponential update
//! `V(t+h) = V_f + (V(t) - V_f) exp(-h / RC)`, so results do not depend on the
//! time step. Input transitions falling inside a step split that step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::network::{self, LoadSpec, NetworkConfig, OperatingPoint};
use crate::noise;
use crate::scalar::{lit, Scalar};

/// Default input pulse frequency, Hz.
pub const DEFAULT_PULSE_FREQUENCY: f64 = 250e3;
/// Settling band: within 0.2% of the step size.
pub const SETTLE_FRACTION: f64 = 0.998;
/// The default SNR window opens this many time constants after the last edge.
pub const SNR_SETTLE_TAUS: f64 = 10.0;
/// Solver tolerance used at each distinct input vector, relative to tail current.
pub const TRANSIENT_TOL_FRACTION: f64 = 1e-10;

/// Piecewise-constant input schedule. The value at `t` is the last point
/// with `time <= t`; before the first point it is the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    points: Vec<(T, T)>,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("waveform has no points"));
        }
        for (k, &(t, v)) in points.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::domain(format!("waveform point {k} is not finite")));
            }
            if k > 0 && !(t > points[k - 1].0) {
                return Err(Error::domain("waveform times must be strictly increasing"));
            }
        }
        Ok(Self { points })
    }

    pub fn constant(value: T) -> Self {
        Self {
            points: vec![(T::zero(), value)],
        }
    }

    /// Square wave starting at `low`, switching to `high` after
    /// `(1 - duty) * period`, repeated until `until`.
    pub fn pulse(low: T, high: T, frequency: T, duty: T, until: T) -> Result<Self> {
        if !(frequency > T::zero()) || !(duty > T::zero() && duty < T::one()) {
            return Err(Error::domain("pulse needs positive frequency and duty in (0, 1)"));
        }
        let period = T::one() / frequency;
        let mut points = vec![(T::zero(), low)];
        let mut cycle = 0usize;
        loop {
            let start = lit::<T>(cycle as f64) * period;
            let rise = start + (T::one() - duty) * period;
            if rise > until {
                break;
            }
            points.push((rise, high));
            let fall = start + period;
            if fall > until {
                break;
            }
            points.push((fall, low));
            cycle += 1;
        }
        Self::new(points)
    }

    pub fn value(&self, t: T) -> T {
        let idx = self.points.partition_point(|&(tp, _)| tp <= t);
        self.points[idx.saturating_sub(1)].1
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig<T> {
    pub network: NetworkConfig<T>,
    pub load_capacitance: T,
    pub input_waveforms: Vec<Waveform<T>>,
    pub time_step: T,
    pub duration: T,
    /// Inject the branch's white output noise (shot + thermal) into the RC
    /// node. The settled output then has variance `PSD * noise_bandwidth`.
    pub noise_enabled: bool,
    pub noise_bandwidth: T,
    pub rng_seed: u64,
    /// Branch whose (mirrored) current drives the output node.
    pub output_branch: usize,
    /// Output voltage at `t = 0`; `None` starts settled at the initial inputs.
    pub initial_output: Option<T>,
    /// Standard deviation of white noise added to each recorded output
    /// sample (measurement noise, not filtered by the RC node). Zero disables it.
    pub measurement_noise_sigma: T,
}

impl<T: Scalar> TransientConfig<T> {
    /// Defaults: step `tau / 100`, two periods at 250 kHz, noise off,
    /// observing branch 0.
    pub fn new(network: NetworkConfig<T>, load_capacitance: T, input_waveforms: Vec<Waveform<T>>) -> Result<Self> {
        let (r_node, _) = output_node(&network)?;
        let tau = r_node * load_capacitance;
        Ok(Self {
            network,
            load_capacitance,
            input_waveforms,
            time_step: tau / lit(100.0),
            duration: lit::<T>(2.0 / DEFAULT_PULSE_FREQUENCY),
            noise_enabled: false,
            noise_bandwidth: T::one() / (lit::<T>(4.0) * tau),
            rng_seed: 0,
            output_branch: 0,
            initial_output: None,
            measurement_noise_sigma: T::zero(),
        })
    }

    pub fn time_constant(&self) -> Result<T> {
        Ok(output_node(&self.network)?.0 * self.load_capacitance)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if !(self.time_step > T::zero()) || !self.time_step.is_finite() {
            return Err(Error::config("time_step must be positive"));
        }
        if !(self.duration >= lit::<T>(10.0) * self.time_step) {
            return Err(Error::config("duration must be at least 10 time steps"));
        }
        if !(self.load_capacitance > T::zero()) {
            return Err(Error::config("load_capacitance must be positive"));
        }
        if self.input_waveforms.len() != self.network.class_size {
            return Err(Error::config(format!(
                "{} input waveforms for {} branches",
                self.input_waveforms.len(),
                self.network.class_size
            )));
        }
        if self.output_branch >= self.network.class_size {
            return Err(Error::config("output_branch out of range"));
        }
        if self.noise_enabled && !(self.noise_bandwidth > T::zero()) {
            return Err(Error::config("noise_bandwidth must be positive when noise is enabled"));
        }
        if !(self.measurement_noise_sigma >= T::zero()) {
            return Err(Error::config("measurement_noise_sigma must be non-negative"));
        }
        Ok(())
    }
}

/// Output node resistance and current gain into it.
fn output_node<T: Scalar>(network: &NetworkConfig<T>) -> Result<(T, T)> {
    match network.load {
        LoadSpec::Mirrored {
            load_resistance,
            width_ratio,
        } => Ok((load_resistance, width_ratio)),
        _ => Ok((network.branch_drop_resistance()?, T::one())),
    }
}

/// One input transition seen by the output node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub time: T,
    pub start: T,
    /// Noise-free final value of the interval that begins at `time`.
    pub target: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult<T> {
    pub times: Vec<T>,
    pub output_voltage: Vec<T>,
    pub branch_current: Vec<T>,
    pub edges: Vec<Edge<T>>,
    /// From the first edge until the output reaches 99.8% of its step.
    pub settle_time_998: Option<T>,
    /// 10%-90% on the first rising edge.
    pub rise_time_1090: Option<T>,
    /// 90%-10% on the first falling edge.
    pub fall_time_9010: Option<T>,
    /// From `SNR_SETTLE_TAUS` time constants after the last edge to the end
    /// (second half of the last interval when that is shorter).
    pub snr_db: T,
    pub noise_error_pct: T,
}

/// Counter-based standard normal draw: sample `counter` of stream `seed`.
fn normal_at<T: Scalar>(seed: u64, stream: u64, counter: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(counter) * 4);
    let z: f64 = rng.sample(StandardNormal);
    lit(z)
}

const STREAM_NODE_NOISE: u64 = 1;
const STREAM_MEASUREMENT: u64 = 2;

struct Drive<T> {
    inputs: Vec<T>,
    op: OperatingPoint<T>,
}

/// Integrates the output node over `[0, duration]`.
pub fn run_transient<T: Scalar>(config: &TransientConfig<T>) -> Result<TransientResult<T>> {
    config.validate()?;
    let net = &config.network;
    let (r_node, gain) = output_node(net)?;
    let tau = r_node * config.load_capacitance;
    let tol = net.tail.nominal_current * lit(TRANSIENT_TOL_FRACTION);
    let k = config.output_branch;
    let env = net.env;

    let mut breakpoints: Vec<T> = config
        .input_waveforms
        .iter()
        .flat_map(|w| w.points().iter().map(|&(t, _)| t))
        .filter(|&t| t > T::zero() && t <= config.duration)
        .collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    breakpoints.dedup();

    let inputs_at = |t: T| -> Vec<T> { config.input_waveforms.iter().map(|w| w.value(t)).collect() };
    let mut cache: Option<Drive<T>> = None;
    let mut solve = |t: T| -> Result<T> {
        let inputs = inputs_at(t);
        if let Some(d) = &cache {
            if d.inputs == inputs {
                return Ok(d.op.branch_currents[k]);
            }
        }
        let op = network::solve_operating_point(net, &inputs, tol)
            .map_err(|e| e.at(format!("operating point at t = {:e} s", t.as_f64())))?;
        let i = op.branch_currents[k];
        cache = Some(Drive { inputs, op });
        Ok(i)
    };

    // Per-step draw on V_f sized so the filtered node settles to a stationary
    // variance of PSD * noise_bandwidth whatever the step.
    let decay = (-config.time_step / tau).exp();
    let step_gain = ((T::one() + decay) / (T::one() - decay)).sqrt();
    let node_noise_sigma = |current: T| -> Result<T> {
        let mut psd = noise::thermal_psd_resistive(r_node, &env)?;
        let copied = current * gain;
        if copied > T::zero() {
            psd = psd + noise::shot_psd(copied)? * r_node * r_node;
        }
        Ok((psd * config.noise_bandwidth).sqrt() * step_gain)
    };

    let steps = (config.duration / config.time_step).round().to_usize().unwrap_or(0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut output = Vec::with_capacity(steps + 1);
    let mut currents = Vec::with_capacity(steps + 1);
    let mut edges = Vec::new();

    let i0 = solve(T::zero())?;
    let mut v = config.initial_output.unwrap_or(i0 * gain * r_node);
    times.push(T::zero());
    output.push(v);
    currents.push(i0);

    let mut next_bp = 0usize;
    for step in 0..steps {
        let t0 = lit::<T>(step as f64) * config.time_step;
        let t1 = lit::<T>((step + 1) as f64) * config.time_step;
        let noise_draw = if config.noise_enabled {
            Some(normal_at::<T>(config.rng_seed, STREAM_NODE_NOISE, step as u64))
        } else {
            None
        };
        let mut a = t0;
        loop {
            let seg_end = match breakpoints.get(next_bp) {
                Some(&bp) if bp <= a => {
                    // Transition exactly at the segment start.
                    let i = solve(bp)?;
                    edges.push(Edge {
                        time: bp,
                        start: v,
                        target: i * gain * r_node,
                    });
                    next_bp += 1;
                    continue;
                }
                Some(&bp) if bp < t1 => bp,
                _ => t1,
            };
            let i = solve(a)?;
            let mut v_final = i * gain * r_node;
            if let Some(z) = noise_draw {
                v_final = v_final + z * node_noise_sigma(i)?;
            }
            v = v_final + (v - v_final) * (-(seg_end - a) / tau).exp();
            a = seg_end;
            if a >= t1 {
                break;
            }
        }
        let i1 = solve(t1)?;
        times.push(t1);
        output.push(v);
        currents.push(i1);
    }

    if config.measurement_noise_sigma > T::zero() {
        for (n, sample) in output.iter_mut().enumerate() {
            let z: T = normal_at(config.rng_seed, STREAM_MEASUREMENT, n as u64);
            *sample = *sample + z * config.measurement_noise_sigma;
        }
    }

    let mut result = TransientResult {
        times,
        output_voltage: output,
        branch_current: currents,
        edges,
        settle_time_998: None,
        rise_time_1090: None,
        fall_time_9010: None,
        snr_db: T::zero(),
        noise_error_pct: T::zero(),
    };
    measure_edges(&mut result);

    let last_edge = result.edges.last().map_or(T::zero(), |e| e.time);
    let settled = last_edge + lit::<T>(SNR_SETTLE_TAUS) * tau;
    let window_start = if settled < config.duration {
        settled
    } else {
        lit::<T>(0.5) * (last_edge + config.duration)
    };
    let snr = measure_snr(&result, window_start, config.duration)?;
    result.snr_db = snr.snr_db;
    result.noise_error_pct = snr.noise_error_pct;
    Ok(result)
}

/// Time at which the normalised step progress first reaches `level`,
/// interpolating linearly between samples.
fn crossing<T: Scalar>(result: &TransientResult<T>, edge: &Edge<T>, end: T, level: T) -> Option<T> {
    let span = edge.target - edge.start;
    let progress = |v: T| (v - edge.start) / span;
    let mut prev_t = edge.time;
    let mut prev_p = T::zero();
    let first = result.times.partition_point(|&t| t <= edge.time);
    for n in first..result.times.len() {
        let t = result.times[n];
        if t > end {
            break;
        }
        let p = progress(result.output_voltage[n]);
        if p >= level {
            let frac = if p > prev_p { (level - prev_p) / (p - prev_p) } else { T::zero() };
            return Some(prev_t + frac * (t - prev_t));
        }
        prev_t = t;
        prev_p = p;
    }
    None
}

fn measure_edges<T: Scalar>(result: &mut TransientResult<T>) {
    let end_of = |n: usize, r: &TransientResult<T>| {
        r.edges
            .get(n + 1)
            .map_or(*r.times.last().expect("non-empty"), |e| e.time)
    };
    let scale = result
        .output_voltage
        .iter()
        .fold(T::zero(), |a, &b| a.max(b.abs()))
        .max(T::TINY);
    let mut settle = None;
    let mut rise = None;
    let mut fall = None;
    for (n, edge) in result.edges.iter().enumerate() {
        let span = edge.target - edge.start;
        if span.abs() <= lit::<T>(1e-9) * scale {
            continue;
        }
        let end = end_of(n, result);
        if settle.is_none() {
            settle = crossing(result, edge, end, lit(SETTLE_FRACTION)).map(|t| t - edge.time);
        }
        let ten = crossing(result, edge, end, lit(0.1));
        let ninety = crossing(result, edge, end, lit(0.9));
        let width = match (ten, ninety) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        if span > T::zero() && rise.is_none() {
            rise = width;
        } else if span < T::zero() && fall.is_none() {
            fall = width;
        }
    }
    result.settle_time_998 = settle;
    result.rise_time_1090 = rise;
    result.fall_time_9010 = fall;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrMeasurement<T> {
    /// `20 log10(mean|V| / stddev(V))`; `+inf` for a noiseless window.
    pub snr_db: T,
    /// `100 (max - min) / (2 mean)`.
    pub noise_error_pct: T,
    pub samples: usize,
}

/// Signal-to-noise ratio of the output over `[window_start, window_end]`.
pub fn measure_snr<T: Scalar>(
    result: &TransientResult<T>,
    window_start: T,
    window_end: T,
) -> Result<SnrMeasurement<T>> {
    let values: Vec<T> = result
        .times
        .iter()
        .zip(&result.output_voltage)
        .filter(|(&t, _)| t >= window_start && t <= window_end)
        .map(|(_, &v)| v)
        .collect();
    if values.is_empty() {
        return Err(Error::domain(format!(
            "no samples in window [{:e}, {:e}] s",
            window_start.as_f64(),
            window_end.as_f64()
        )));
    }
    let n = lit::<T>(values.len() as f64);
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mean_abs = values.iter().fold(T::zero(), |a, &v| a + v.abs()) / n;
    let var = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
        / n;
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let std = if max > min { var.sqrt() } else { T::zero() };
    let snr_db = if std > T::zero() {
        lit::<T>(20.0) * (mean_abs / std).log10()
    } else {
        T::infinity()
    };
    let noise_error_pct = lit::<T>(100.0) * (max - min) / (lit::<T>(2.0) * mean);
    Ok(SnrMeasurement {
        snr_db,
        noise_error_pct,
        samples: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{NmosParams, TailSourceSpec};
    use crate::network::BranchDevice;

    fn network() -> NetworkConfig<f64> {
        NetworkConfig::uniform(
            4,
            BranchDevice::Nmos(NmosParams {
                wl_ratio: 4.0,
                threshold_current: 0.5e-6,
                threshold_voltage: 0.46,
                subthreshold_swing: 1.71,
                clm_coefficient: 0.0,
            }),
            LoadSpec::Mirrored {
                load_resistance: 3.5e6,
                width_ratio: 1.0,
            },
            TailSourceSpec::cascode(200e-9),
            1.8,
            0.0,
        )
    }

    fn step_config() -> TransientConfig<f64> {
        let mut waves = vec![Waveform::constant(0.6); 4];
        waves[0] = Waveform::new(vec![(0.0, 0.6), (1e-6, 0.9)]).unwrap();
        let mut cfg = TransientConfig::new(network(), 50e-15, waves).unwrap();
        cfg.duration = 4e-6;
        cfg
    }

    #[test]
    fn waveform_lookup() {
        let w = Waveform::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(w.value(-1.0), 1.0);
        assert_eq!(w.value(1.999), 1.0);
        assert_eq!(w.value(2.0), 3.0);
        assert!(Waveform::new(vec![(0.0, f64::NAN)]).is_err());
        assert!(Waveform::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        let p = Waveform::pulse(0.6, 0.9, 250e3, 0.5, 8e-6).unwrap();
        assert_eq!(p.value(1e-6), 0.6);
        assert_eq!(p.value(3e-6), 0.9);
        assert_eq!(p.value(5e-6), 0.6);
        assert_eq!(p.value(7e-6), 0.9);
    }

    #[test]
    fn constant_inputs_settle_from_zero() {
        let mut cfg = TransientConfig::new(network(), 50e-15, vec![Waveform::constant(0.6); 4]).unwrap();
        cfg.initial_output = Some(0.0);
        cfg.duration = 20.0 * 175e-9;
        let r = run_transient(&cfg).unwrap();
        let v_f = r.branch_current[0] * 3.5e6;
        assert!((r.output_voltage.last().unwrap() - v_f).abs() < 1e-9);
        assert!(r.edges.is_empty());
        assert!(r.snr_db > 80.0);
        cfg.initial_output = None;
        let settled = run_transient(&cfg).unwrap();
        assert!(settled.snr_db.is_infinite() && settled.snr_db > 0.0);
        assert_eq!(settled.noise_error_pct, 0.0);
    }

    #[test]
    fn step_matches_closed_form_exponential() {
        let cfg = step_config();
        let r = run_transient(&cfg).unwrap();
        let tau = cfg.time_constant().unwrap();
        let edge = r.edges[0];
        assert_eq!(edge.time, 1e-6);
        for (&t, &v) in r.times.iter().zip(&r.output_voltage) {
            let expected = if t < edge.time {
                edge.start
            } else {
                edge.target + (edge.start - edge.target) * (-(t - edge.time) / tau).exp()
            };
            assert!((v - expected).abs() < 1e-9, "t = {t}");
        }
        let rise = r.rise_time_1090.unwrap();
        assert!((rise / (9f64.ln() * tau) - 1.0).abs() < 0.01);
        let settle = r.settle_time_998.unwrap();
        assert!((settle / (500f64.ln() * tau) - 1.0).abs() < 0.01);
        assert!(r.fall_time_9010.is_none());
    }

    #[test]
    fn halving_step_leaves_samples_unchanged() {
        let mut a = step_config();
        a.time_step = 1.3e-9;
        let mut b = a.clone();
        b.time_step = a.time_step / 2.0;
        let ra = run_transient(&a).unwrap();
        let rb = run_transient(&b).unwrap();
        for (n, &v) in ra.output_voltage.iter().enumerate() {
            assert!((v - rb.output_voltage[2 * n]).abs() < 1e-12, "sample {n}");
        }
    }

    #[test]
    fn noisy_runs_are_deterministic() {
        let mut cfg = step_config();
        cfg.noise_enabled = true;
        cfg.rng_seed = 42;
        let a = run_transient(&cfg).unwrap();
        let b = run_transient(&cfg).unwrap();
        assert_eq!(a, b);
        cfg.rng_seed = 43;
        let c = run_transient(&cfg).unwrap();
        assert_ne!(a.output_voltage, c.output_voltage);
        assert!(a.snr_db.is_finite());
    }

    #[test]
    fn snr_of_settled_window_is_high() {
        let r = run_transient(&step_config()).unwrap();
        let m = measure_snr(&r, 3e-6, 4e-6).unwrap();
        assert!(m.snr_db > 80.0);
        assert!(m.noise_error_pct < 1e-3);
        assert!(measure_snr(&r, 5e-6, 6e-6).is_err());
    }

    #[test]
    fn falling_edge_measured() {
        let mut waves = vec![Waveform::constant(0.6); 4];
        waves[0] = Waveform::pulse(0.6, 0.9, 250e3, 0.5, 8e-6).unwrap();
        let mut cfg = TransientConfig::new(network(), 50e-15, waves).unwrap();
        cfg.duration = 8e-6;
        let r = run_transient(&cfg).unwrap();
        let tau = 175e-9;
        assert!((r.fall_time_9010.unwrap() / (9f64.ln() * tau) - 1.0).abs() < 0.01);
        assert!((r.rise_time_1090.unwrap() / (9f64.ln() * tau) - 1.0).abs() < 0.01);
        assert_eq!(r.edges.len(), 3);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = step_config();
        cfg.duration = 5.0 * cfg.time_step;
        assert!(run_transient(&cfg).is_err());
        let mut cfg = step_config();
        cfg.load_capacitance = 0.0;
        assert!(run_transient(&cfg).is_err());
        let mut cfg = step_config();
        cfg.input_waveforms.pop();
        assert!(run_transient(&cfg).is_err());
    }
    #[test]
    fn injected_noise_variance_is_step_independent() {
        let stds: Vec<f64> = [1.75e-9, 17.5e-9]
            .iter()
            .map(|&h| {
                let mut cfg =
                    TransientConfig::new(network(), 50e-15, vec![Waveform::constant(0.6); 4]).unwrap();
                cfg.time_step = h;
                cfg.duration = 20_000.0 * 17.5e-9;
                cfg.noise_enabled = true;
                cfg.rng_seed = 5;
                let r = run_transient(&cfg).unwrap();
                let v = &r.output_voltage;
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            })
            .collect();
        let env = crate::devices::EnvParams::<f64>::default();
        let i = 50e-9;
        let psd = noise::thermal_psd_resistive(3.5e6, &env).unwrap()
            + noise::shot_psd(i).unwrap() * 3.5e6 * 3.5e6;
        let expected = (psd / (4.0 * 175e-9)).sqrt();
        for s in &stds {
            assert!((s / expected - 1.0).abs() < 0.1, "{s} vs {expected}");
        }
    }
}
