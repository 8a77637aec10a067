//! TOML run configuration. Every physical value carries an SI unit suffix and
//! every failure reports the line it came from.

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use softmax_analog::devices::{EnvParams, NmosParams, NpnParams, PmosLinearParams, TailSourceSpec};
use softmax_analog::network::{BranchDevice, LoadSpec, NetworkConfig, Technology};
use toml::Spanned;

use crate::error::CliError;
use crate::units::{parse_quantity, Unit};

type Q = Spanned<String>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    network: RawNetwork,
    device: RawDevice,
    #[serde(default)]
    branch: Vec<RawDevice>,
    load: RawLoad,
    tail: RawTail,
    sweep: Option<RawSweep>,
    transient: Option<RawTransient>,
    noise: Option<RawNoise>,
    montecarlo: Option<RawMonteCarlo>,
    margins: Option<RawMargins>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    class_size: Spanned<i64>,
    technology: Spanned<String>,
    v_supply_high: Q,
    v_supply_low: Q,
    temperature: Option<Q>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    index: Option<Spanned<i64>>,
    saturation_current: Option<Q>,
    early_voltage: Option<Q>,
    beta: Option<Spanned<f64>>,
    wl_ratio: Option<Spanned<f64>>,
    threshold_current: Option<Q>,
    threshold_voltage: Option<Q>,
    subthreshold_swing: Option<Spanned<f64>>,
    clm_coefficient: Option<Q>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoad {
    kind: Spanned<String>,
    resistance: Option<Q>,
    width_ratio: Option<Spanned<f64>>,
    capacitance: Option<Q>,
    wl_ratio: Option<Spanned<f64>>,
    process_gain: Option<Q>,
    threshold_voltage: Option<Q>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTail {
    kind: Spanned<String>,
    current: Q,
    output_resistance: Option<Q>,
    reference_node_voltage: Option<Q>,
    reference_paths: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    branch: Option<Spanned<i64>>,
    start: Q,
    stop: Q,
    bias: Q,
    points: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransient {
    low: Q,
    high: Q,
    bias: Option<Q>,
    frequency: Option<Q>,
    duty: Option<Spanned<f64>>,
    duration: Option<Q>,
    time_step: Option<Q>,
    noise: Option<Spanned<bool>>,
    noise_bandwidth: Option<Q>,
    output_branch: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    resistance: Q,
    current: Q,
    bandwidth: Q,
    flicker_constant: Option<Q>,
    frequency: Option<Q>,
    compare_low_noise: Option<Spanned<bool>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    sigma: Option<Spanned<f64>>,
    trials: Option<Spanned<i64>>,
    inputs: Option<Spanned<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMargins {
    threshold_voltage: Q,
    swing: Q,
    stacked_mirrors: Spanned<i64>,
    overdrive: Option<Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub branch: usize,
    pub start: f64,
    pub stop: f64,
    pub bias: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientSection {
    pub low: f64,
    pub high: f64,
    pub bias: f64,
    pub frequency: f64,
    pub duty: f64,
    pub duration: Option<f64>,
    pub time_step: Option<f64>,
    pub noise: bool,
    pub noise_bandwidth: Option<f64>,
    pub output_branch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSection {
    pub resistance: f64,
    pub current: f64,
    pub bandwidth: f64,
    pub flicker_constant: f64,
    pub frequency: f64,
    /// Also budget a shot-only low-noise branch and report the SNR gain.
    pub compare_low_noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSection {
    pub sigma: f64,
    pub trials: usize,
    pub inputs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginsSection {
    pub threshold_voltage: f64,
    pub swing: f64,
    pub stacked_mirrors: usize,
    pub overdrive: f64,
}

/// Fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub network: NetworkConfig<f64>,
    pub load_capacitance: Option<f64>,
    /// Bias paths drawing a copy of the tail current, for power accounting.
    pub reference_paths: usize,
    pub sweep: Option<SweepSection>,
    pub transient: Option<TransientSection>,
    pub noise: Option<NoiseSection>,
    pub montecarlo: Option<MonteCarloSection>,
    pub margins: Option<MarginsSection>,
}

/// Maps byte offsets to 1-based line numbers.
struct Source<'a> {
    name: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn invariant<T>(&self, span: Range<usize>, key: &str, message: impl Into<String>) -> Result<T, CliError> {
        Err(CliError::Invariant {
            source_name: self.name.to_owned(),
            line: self.line(span),
            key: key.to_owned(),
            message: message.into(),
        })
    }

    fn quantity(&self, q: &Q, key: &str, unit: Unit) -> Result<f64, CliError> {
        parse_quantity(q.get_ref(), unit, false).or_else(|m| self.invariant(q.span(), key, m))
    }

    fn quantity_inf(&self, q: &Q, key: &str, unit: Unit) -> Result<f64, CliError> {
        parse_quantity(q.get_ref(), unit, true).or_else(|m| self.invariant(q.span(), key, m))
    }

    fn positive(&self, q: &Q, key: &str, unit: Unit) -> Result<f64, CliError> {
        let v = self.quantity(q, key, unit)?;
        if v > 0.0 {
            Ok(v)
        } else {
            self.invariant(q.span(), key, format!("must be positive, got {}", q.get_ref()))
        }
    }

    fn count(&self, v: &Spanned<i64>, key: &str, min: i64) -> Result<usize, CliError> {
        if *v.get_ref() < min {
            return self.invariant(v.span(), key, format!("must be at least {min}, got {}", v.get_ref()));
        }
        Ok(*v.get_ref() as usize)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Parses configuration text; `source_name` labels error messages.
pub fn parse_config(text: &str, source_name: &str) -> Result<LoadedConfig, CliError> {
    let src = Source { name: source_name, text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| src.line(s));
        let message = e.message().to_owned();
        if message.contains("unknown field") {
            CliError::UnknownKey {
                source_name: source_name.to_owned(),
                line,
                message,
            }
        } else {
            CliError::Parse {
                source_name: source_name.to_owned(),
                line,
                message,
            }
        }
    })?;
    build(&src, raw)
}

fn build(src: &Source, raw: RawConfig) -> Result<LoadedConfig, CliError> {
    let net = &raw.network;
    let class_size = src.count(&net.class_size, "network.class_size", 2)?;
    let technology = match net.technology.get_ref().as_str() {
        "bipolar" => Technology::Bipolar,
        "nmos" => Technology::Nmos,
        other => {
            return src.invariant(
                net.technology.span(),
                "network.technology",
                format!("must be \"bipolar\" or \"nmos\", got \"{other}\""),
            )
        }
    };
    let v_high = src.quantity(&net.v_supply_high, "network.v_supply_high", Unit::Volt)?;
    let v_low = src.quantity(&net.v_supply_low, "network.v_supply_low", Unit::Volt)?;
    if !(v_high > v_low) {
        return src.invariant(
            net.v_supply_high.span(),
            "network.v_supply_high",
            "must exceed network.v_supply_low",
        );
    }
    let env = match &net.temperature {
        Some(q) => {
            let t = src.positive(q, "network.temperature", Unit::Kelvin)?;
            EnvParams::new(t).or_else(|e| src.invariant(q.span(), "network.temperature", e.to_string()))?
        }
        None => EnvParams::default(),
    };

    if raw.device.index.is_some() {
        let span = raw.device.index.as_ref().map(Spanned::span).unwrap_or_default();
        return src.invariant(span, "device.index", "only [[branch]] overrides take an index");
    }
    let base = device(src, technology, &raw.device, None, "device")?;
    let mut devices = vec![base; class_size];
    for b in &raw.branch {
        let Some(idx) = &b.index else {
            return src.invariant(first_span(b), "branch.index", "every [[branch]] needs an index");
        };
        let k = *idx.get_ref();
        if k < 0 || k as usize >= class_size {
            return src.invariant(idx.span(), "branch.index", format!("must be in 0..{class_size}, got {k}"));
        }
        devices[k as usize] = device(src, technology, b, Some(base), "branch")?;
    }

    let (load, load_capacitance) = load(src, &raw.load, v_high, v_low)?;
    let (tail, reference_paths) = tail(src, &raw.tail)?;

    let network = NetworkConfig {
        class_size,
        technology,
        branch_devices: devices,
        load,
        tail,
        v_supply_high: v_high,
        v_supply_low: v_low,
        env,
    };
    network
        .validate()
        .or_else(|e| src.invariant(net.class_size.span(), "network", e.to_string()))?;

    let sweep = raw.sweep.as_ref().map(|s| sweep_section(src, s, class_size)).transpose()?;
    let transient = raw
        .transient
        .as_ref()
        .map(|t| transient_section(src, t, class_size))
        .transpose()?;
    let noise = raw.noise.as_ref().map(|n| noise_section(src, n)).transpose()?;
    let montecarlo = raw
        .montecarlo
        .as_ref()
        .map(|m| montecarlo_section(src, m, class_size))
        .transpose()?;
    let margins = raw.margins.as_ref().map(|m| margins_section(src, m)).transpose()?;
    if transient.is_some() && load_capacitance.is_none() {
        return src.invariant(
            raw.load.kind.span(),
            "load.capacitance",
            "required when a [transient] section is present",
        );
    }

    Ok(LoadedConfig {
        network,
        load_capacitance,
        reference_paths,
        sweep,
        transient,
        noise,
        montecarlo,
        margins,
    })
}

fn first_span(d: &RawDevice) -> Range<usize> {
    [
        d.saturation_current.as_ref().map(Spanned::span),
        d.early_voltage.as_ref().map(Spanned::span),
        d.beta.as_ref().map(Spanned::span),
        d.wl_ratio.as_ref().map(Spanned::span),
        d.threshold_current.as_ref().map(Spanned::span),
        d.threshold_voltage.as_ref().map(Spanned::span),
        d.subthreshold_swing.as_ref().map(Spanned::span),
        d.clm_coefficient.as_ref().map(Spanned::span),
    ]
    .into_iter()
    .flatten()
    .min_by_key(|s| s.start)
    .unwrap_or_default()
}

fn device(
    src: &Source,
    technology: Technology,
    d: &RawDevice,
    base: Option<BranchDevice<f64>>,
    section: &str,
) -> Result<BranchDevice<f64>, CliError> {
    let key = |name: &str| format!("{section}.{name}");
    let missing = |name: &str| -> Result<BranchDevice<f64>, CliError> {
        src.invariant(first_span(d), &key(name), format!("required for {technology:?} devices"))
    };
    let foreign = |span: Option<Range<usize>>, name: &str| -> Result<(), CliError> {
        match span {
            Some(s) => src.invariant(s, &key(name), format!("not a parameter of {technology:?} devices")),
            None => Ok(()),
        }
    };
    let dev = match technology {
        Technology::Bipolar => {
            foreign(d.wl_ratio.as_ref().map(Spanned::span), "wl_ratio")?;
            foreign(d.threshold_current.as_ref().map(Spanned::span), "threshold_current")?;
            foreign(d.threshold_voltage.as_ref().map(Spanned::span), "threshold_voltage")?;
            foreign(d.subthreshold_swing.as_ref().map(Spanned::span), "subthreshold_swing")?;
            foreign(d.clm_coefficient.as_ref().map(Spanned::span), "clm_coefficient")?;
            let mut p = match base {
                Some(BranchDevice::Npn(p)) => p,
                _ => NpnParams::ideal(f64::NAN),
            };
            match &d.saturation_current {
                Some(q) => p.saturation_current = src.positive(q, &key("saturation_current"), Unit::Ampere)?,
                None if base.is_none() => return missing("saturation_current"),
                None => {}
            }
            if let Some(q) = &d.early_voltage {
                p.early_voltage = src.quantity_inf(q, &key("early_voltage"), Unit::Volt)?;
            }
            if let Some(b) = &d.beta {
                p.beta = *b.get_ref();
            }
            p.validate()
                .or_else(|e| src.invariant(first_span(d), section, e.to_string()))?;
            BranchDevice::Npn(p)
        }
        Technology::Nmos => {
            foreign(d.saturation_current.as_ref().map(Spanned::span), "saturation_current")?;
            foreign(d.early_voltage.as_ref().map(Spanned::span), "early_voltage")?;
            foreign(d.beta.as_ref().map(Spanned::span), "beta")?;
            let mut p = match base {
                Some(BranchDevice::Nmos(p)) => p,
                _ => NmosParams {
                    wl_ratio: f64::NAN,
                    threshold_current: f64::NAN,
                    threshold_voltage: f64::NAN,
                    subthreshold_swing: f64::NAN,
                    clm_coefficient: 0.0,
                },
            };
            let fresh = base.is_none();
            match &d.wl_ratio {
                Some(v) => p.wl_ratio = *v.get_ref(),
                None if fresh => return missing("wl_ratio"),
                None => {}
            }
            match &d.threshold_current {
                Some(q) => p.threshold_current = src.positive(q, &key("threshold_current"), Unit::Ampere)?,
                None if fresh => return missing("threshold_current"),
                None => {}
            }
            match &d.threshold_voltage {
                Some(q) => p.threshold_voltage = src.quantity(q, &key("threshold_voltage"), Unit::Volt)?,
                None if fresh => return missing("threshold_voltage"),
                None => {}
            }
            match &d.subthreshold_swing {
                Some(v) => p.subthreshold_swing = *v.get_ref(),
                None if fresh => return missing("subthreshold_swing"),
                None => {}
            }
            if let Some(q) = &d.clm_coefficient {
                p.clm_coefficient = src.quantity(q, &key("clm_coefficient"), Unit::PerVolt)?;
            }
            p.validate()
                .or_else(|e| src.invariant(first_span(d), section, e.to_string()))?;
            BranchDevice::Nmos(p)
        }
    };
    Ok(dev)
}

fn load(src: &Source, l: &RawLoad, v_high: f64, v_low: f64) -> Result<(LoadSpec<f64>, Option<f64>), CliError> {
    let kind_span = l.kind.span();
    let need = |q: &Option<Q>, name: &str| -> Result<Q, CliError> {
        q.clone().map_or_else(
            || src.invariant(kind_span.clone(), &format!("load.{name}"), format!("required for load kind \"{}\"", l.kind.get_ref())),
            Ok,
        )
    };
    let spec = match l.kind.get_ref().as_str() {
        "resistor" => LoadSpec::Resistor(src.positive(&need(&l.resistance, "resistance")?, "load.resistance", Unit::Ohm)?),
        "mirrored" => {
            let r = src.positive(&need(&l.resistance, "resistance")?, "load.resistance", Unit::Ohm)?;
            let ratio = l.width_ratio.as_ref().map_or(1.0, |v| *v.get_ref());
            if !(ratio > 0.0) {
                let span = l.width_ratio.as_ref().map(Spanned::span).unwrap_or(kind_span);
                return src.invariant(span, "load.width_ratio", "must be positive");
            }
            LoadSpec::Mirrored {
                load_resistance: r,
                width_ratio: ratio,
            }
        }
        "pmos_linear" => {
            let Some(wl) = &l.wl_ratio else {
                return src.invariant(kind_span, "load.wl_ratio", "required for load kind \"pmos_linear\"");
            };
            let p = PmosLinearParams {
                wl_ratio: *wl.get_ref(),
                process_gain: src.positive(
                    &need(&l.process_gain, "process_gain")?,
                    "load.process_gain",
                    Unit::AmperePerVoltSquared,
                )?,
                threshold_voltage_mag: src.positive(
                    &need(&l.threshold_voltage, "threshold_voltage")?,
                    "load.threshold_voltage",
                    Unit::Volt,
                )?,
            };
            p.validate()
                .and_then(|_| p.resistance(v_high, v_low))
                .or_else(|e| src.invariant(kind_span.clone(), "load", e.to_string()))?;
            LoadSpec::PmosLinear(p)
        }
        other => {
            return src.invariant(
                kind_span,
                "load.kind",
                format!("must be \"resistor\", \"mirrored\" or \"pmos_linear\", got \"{other}\""),
            )
        }
    };
    let cap = l
        .capacitance
        .as_ref()
        .map(|q| src.positive(q, "load.capacitance", Unit::Farad))
        .transpose()?;
    Ok((spec, cap))
}

fn tail(src: &Source, t: &RawTail) -> Result<(TailSourceSpec<f64>, usize), CliError> {
    let current = src.positive(&t.current, "tail.current", Unit::Ampere)?;
    let spec = match t.kind.get_ref().as_str() {
        "ideal" => TailSourceSpec::ideal(current),
        "cascode" => TailSourceSpec::cascode(current),
        "finite_impedance" => {
            let (Some(r), Some(v)) = (&t.output_resistance, &t.reference_node_voltage) else {
                return src.invariant(
                    t.kind.span(),
                    "tail.output_resistance",
                    "finite_impedance needs output_resistance and reference_node_voltage",
                );
            };
            TailSourceSpec::finite_impedance(
                current,
                src.positive(r, "tail.output_resistance", Unit::Ohm)?,
                src.quantity(v, "tail.reference_node_voltage", Unit::Volt)?,
            )
        }
        other => {
            return src.invariant(
                t.kind.span(),
                "tail.kind",
                format!("must be \"ideal\", \"cascode\" or \"finite_impedance\", got \"{other}\""),
            )
        }
    };
    let paths = match &t.reference_paths {
        Some(p) => src.count(p, "tail.reference_paths", 0)?,
        None => 0,
    };
    Ok((spec, paths))
}

fn branch_index(src: &Source, v: &Option<Spanned<i64>>, key: &str, n: usize) -> Result<usize, CliError> {
    match v {
        None => Ok(0),
        Some(s) => {
            let k = *s.get_ref();
            if k < 0 || k as usize >= n {
                src.invariant(s.span(), key, format!("must be in 0..{n}, got {k}"))
            } else {
                Ok(k as usize)
            }
        }
    }
}

fn sweep_section(src: &Source, s: &RawSweep, n: usize) -> Result<SweepSection, CliError> {
    let start = src.quantity(&s.start, "sweep.start", Unit::Volt)?;
    let stop = src.quantity(&s.stop, "sweep.stop", Unit::Volt)?;
    if !(stop > start) {
        return src.invariant(s.stop.span(), "sweep.stop", "must exceed sweep.start");
    }
    Ok(SweepSection {
        branch: branch_index(src, &s.branch, "sweep.branch", n)?,
        start,
        stop,
        bias: src.quantity(&s.bias, "sweep.bias", Unit::Volt)?,
        points: match &s.points {
            Some(p) => src.count(p, "sweep.points", 3)?,
            None => 101,
        },
    })
}

fn transient_section(src: &Source, t: &RawTransient, n: usize) -> Result<TransientSection, CliError> {
    let low = src.quantity(&t.low, "transient.low", Unit::Volt)?;
    let duty = t.duty.as_ref().map_or(0.5, |d| *d.get_ref());
    if !(duty > 0.0 && duty < 1.0) {
        let span = t.duty.as_ref().map(Spanned::span).unwrap_or_default();
        return src.invariant(span, "transient.duty", "must lie strictly between 0 and 1");
    }
    let opt = |q: &Option<Q>, key: &str, unit: Unit| -> Result<Option<f64>, CliError> {
        q.as_ref().map(|q| src.positive(q, key, unit)).transpose()
    };
    Ok(TransientSection {
        low,
        high: src.quantity(&t.high, "transient.high", Unit::Volt)?,
        bias: match &t.bias {
            Some(q) => src.quantity(q, "transient.bias", Unit::Volt)?,
            None => low,
        },
        frequency: opt(&t.frequency, "transient.frequency", Unit::Hertz)?
            .unwrap_or(softmax_analog::transient::DEFAULT_PULSE_FREQUENCY),
        duty,
        duration: opt(&t.duration, "transient.duration", Unit::Second)?,
        time_step: opt(&t.time_step, "transient.time_step", Unit::Second)?,
        noise: t.noise.as_ref().is_some_and(|b| *b.get_ref()),
        noise_bandwidth: opt(&t.noise_bandwidth, "transient.noise_bandwidth", Unit::Hertz)?,
        output_branch: branch_index(src, &t.output_branch, "transient.output_branch", n)?,
    })
}

fn noise_section(src: &Source, s: &RawNoise) -> Result<NoiseSection, CliError> {
    Ok(NoiseSection {
        resistance: src.positive(&s.resistance, "noise.resistance", Unit::Ohm)?,
        current: src.positive(&s.current, "noise.current", Unit::Ampere)?,
        bandwidth: src.positive(&s.bandwidth, "noise.bandwidth", Unit::Hertz)?,
        flicker_constant: match &s.flicker_constant {
            Some(q) => {
                let k = src.quantity(q, "noise.flicker_constant", Unit::Ampere)?;
                if k < 0.0 {
                    return src.invariant(q.span(), "noise.flicker_constant", "must be non-negative");
                }
                k
            }
            None => 0.0,
        },
        frequency: match &s.frequency {
            Some(q) => src.positive(q, "noise.frequency", Unit::Hertz)?,
            None => 1e3,
        },
        compare_low_noise: s.compare_low_noise.as_ref().is_some_and(|b| *b.get_ref()),
    })
}

fn montecarlo_section(src: &Source, m: &RawMonteCarlo, n: usize) -> Result<MonteCarloSection, CliError> {
    let sigma = m.sigma.as_ref().map_or(0.01, |s| *s.get_ref());
    if !(sigma >= 0.0) || !sigma.is_finite() {
        let span = m.sigma.as_ref().map(Spanned::span).unwrap_or_default();
        return src.invariant(span, "montecarlo.sigma", "must be finite and non-negative");
    }
    let inputs = match &m.inputs {
        Some(list) => {
            if list.get_ref().len() != n {
                return src.invariant(
                    list.span(),
                    "montecarlo.inputs",
                    format!("needs {n} entries, got {}", list.get_ref().len()),
                );
            }
            let parsed = list
                .get_ref()
                .iter()
                .map(|s| parse_quantity(s, Unit::Volt, false))
                .collect::<Result<Vec<_>, _>>()
                .or_else(|e| src.invariant(list.span(), "montecarlo.inputs", e))?;
            Some(parsed)
        }
        None => None,
    };
    Ok(MonteCarloSection {
        sigma,
        trials: match &m.trials {
            Some(t) => src.count(t, "montecarlo.trials", 1)?,
            None => 10_000,
        },
        inputs,
    })
}

fn margins_section(src: &Source, m: &RawMargins) -> Result<MarginsSection, CliError> {
    let nonneg = |q: &Q, key: &str| -> Result<f64, CliError> {
        let v = src.quantity(q, key, Unit::Volt)?;
        if v < 0.0 {
            return src.invariant(q.span(), key, "must be non-negative");
        }
        Ok(v)
    };
    let stacked = *m.stacked_mirrors.get_ref();
    if !(1..=2).contains(&stacked) {
        return src.invariant(m.stacked_mirrors.span(), "margins.stacked_mirrors", "must be 1 or 2");
    }
    Ok(MarginsSection {
        threshold_voltage: nonneg(&m.threshold_voltage, "margins.threshold_voltage")?,
        swing: nonneg(&m.swing, "margins.swing")?,
        stacked_mirrors: stacked as usize,
        overdrive: match &m.overdrive {
            Some(q) => nonneg(q, "margins.overdrive")?,
            None => 0.0,
        },
    })
}
