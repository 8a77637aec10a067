//! Analytic noise budgets for one output branch.
//!
//! Sources are described by their spectral density; each is referred to the
//! output node (current sources through the branch transimpedance) and
//! integrated over a brick-wall bandwidth. Totals follow the linear RMS
//! composition `V_noise = I_shot R + V_thermal`; the root-sum-of-squares
//! figure for uncorrelated sources is reported alongside it.

use crate::devices::{EnvParams, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

fn positive<T: Scalar>(value: T, what: &str) -> Result<()> {
    if value > T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be positive, got {value}")))
    }
}

/// Johnson noise of a resistance as a voltage density `4 k_B T R`, V^2/Hz.
pub fn thermal_psd_resistive<T: Scalar>(resistance: T, env: &EnvParams<T>) -> Result<T> {
    positive(resistance, "resistance")?;
    Ok(lit::<T>(4.0) * env.kt() * resistance)
}

/// Shot noise current density `2 q I_D`, A^2/Hz.
pub fn shot_psd<T: Scalar>(drain_current: T) -> Result<T> {
    positive(drain_current, "drain current")?;
    Ok(lit::<T>(2.0 * ELEMENTARY_CHARGE) * drain_current)
}

/// Flicker current density `K_1 I_D / f`.
///
/// `K_1` is taken in amperes so that the result is in A^2/Hz.
pub fn flicker_psd<T: Scalar>(flicker_constant: T, drain_current: T, frequency: T) -> Result<T> {
    positive(frequency, "frequency")?;
    Ok(flicker_constant * drain_current / frequency)
}

/// Channel thermal noise of a saturated MOSFET, `4 k_B T g_m / 3`, A^2/Hz.
pub fn thermal_psd_saturation<T: Scalar>(transconductance: T, env: &EnvParams<T>) -> Result<T> {
    positive(transconductance, "transconductance")?;
    Ok(lit::<T>(4.0) * env.kt() * transconductance / lit(3.0))
}

/// Physical origin and magnitude of one noise source.
///
/// Current-type sources carry the `transimpedance` (ohms) that refers them
/// to the output node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSource<T> {
    ThermalResistive {
        resistance: T,
    },
    ThermalSaturation {
        transconductance: T,
        transimpedance: T,
    },
    Flicker {
        flicker_constant: T,
        drain_current: T,
        frequency: T,
        transimpedance: T,
    },
    Shot {
        drain_current: T,
        transimpedance: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSourceSpec<T> {
    pub label: String,
    pub source: NoiseSource<T>,
    /// Measurement bandwidth, Hz.
    pub bandwidth: T,
}

impl<T: Scalar> NoiseSourceSpec<T> {
    pub fn new(label: impl Into<String>, source: NoiseSource<T>, bandwidth: T) -> Self {
        Self {
            label: label.into(),
            source,
            bandwidth,
        }
    }

    /// Density referred to the output node, V^2/Hz.
    pub fn output_psd(&self, env: &EnvParams<T>) -> Result<T> {
        let square = |r: T| -> Result<T> {
            positive(r, "transimpedance")?;
            Ok(r * r)
        };
        match self.source {
            NoiseSource::ThermalResistive { resistance } => thermal_psd_resistive(resistance, env),
            NoiseSource::ThermalSaturation {
                transconductance,
                transimpedance,
            } => Ok(thermal_psd_saturation(transconductance, env)? * square(transimpedance)?),
            NoiseSource::Flicker {
                flicker_constant,
                drain_current,
                frequency,
                transimpedance,
            } => Ok(flicker_psd(flicker_constant, drain_current, frequency)? * square(transimpedance)?),
            NoiseSource::Shot {
                drain_current,
                transimpedance,
            } => Ok(shot_psd(drain_current)? * square(transimpedance)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTerm<T> {
    pub label: String,
    /// Output-referred density, V^2/Hz.
    pub psd: T,
    /// `sqrt(psd * bandwidth)`, volts.
    pub rms: T,
    /// Share of the linear RMS total.
    pub fraction: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget<T> {
    pub terms: Vec<NoiseTerm<T>>,
    /// Linear sum of per-source RMS values.
    pub total_rms: T,
    /// Root-sum-of-squares of per-source RMS values.
    pub total_rss: T,
}

impl<T: Scalar> NoiseBudget<T> {
    pub fn from_sources(sources: &[NoiseSourceSpec<T>], env: &EnvParams<T>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::domain("noise budget needs at least one source"));
        }
        let mut terms = Vec::with_capacity(sources.len());
        for spec in sources {
            positive(spec.bandwidth, "bandwidth")?;
            let psd = spec.output_psd(env)?;
            terms.push(NoiseTerm {
                label: spec.label.clone(),
                psd,
                rms: (psd * spec.bandwidth).sqrt(),
                fraction: T::zero(),
            });
        }
        let total_rms = terms.iter().fold(T::zero(), |a, t| a + t.rms);
        let total_rss = terms.iter().fold(T::zero(), |a, t| a + t.rms * t.rms).sqrt();
        if total_rms > T::zero() {
            for t in &mut terms {
                t.fraction = t.rms / total_rms;
            }
        }
        Ok(Self {
            terms,
            total_rms,
            total_rss,
        })
    }

    pub fn per_source_psd(&self) -> Vec<(&str, T)> {
        self.terms.iter().map(|t| (t.label.as_str(), t.psd)).collect()
    }

    pub fn per_source_rms(&self) -> Vec<(&str, T)> {
        self.terms.iter().map(|t| (t.label.as_str(), t.rms)).collect()
    }

    pub fn fractional_contributions(&self) -> Vec<(&str, T)> {
        self.terms.iter().map(|t| (t.label.as_str(), t.fraction)).collect()
    }

    pub fn term(&self, label: &str) -> Option<&NoiseTerm<T>> {
        self.terms.iter().find(|t| t.label == label)
    }

    /// Sum of output densities, V^2/Hz.
    pub fn total_psd(&self) -> T {
        self.terms.iter().fold(T::zero(), |a, t| a + t.psd)
    }
}

pub const SHOT: &str = "shot";
pub const THERMAL: &str = "thermal";
pub const FLICKER: &str = "flicker";

/// Sources of a single branch: drain shot noise and (when `flicker_constant`
/// is nonzero) flicker noise through the load, plus the load's own Johnson
/// noise.
pub fn branch_noise_sources<T: Scalar>(
    load_resistance: T,
    drain_current: T,
    bandwidth: T,
    flicker_constant: T,
    eval_frequency: T,
) -> Vec<NoiseSourceSpec<T>> {
    let mut sources = vec![
        NoiseSourceSpec::new(
            SHOT,
            NoiseSource::Shot {
                drain_current,
                transimpedance: load_resistance,
            },
            bandwidth,
        ),
        NoiseSourceSpec::new(
            THERMAL,
            NoiseSource::ThermalResistive {
                resistance: load_resistance,
            },
            bandwidth,
        ),
    ];
    if flicker_constant != T::zero() {
        sources.push(NoiseSourceSpec::new(
            FLICKER,
            NoiseSource::Flicker {
                flicker_constant,
                drain_current,
                frequency: eval_frequency,
                transimpedance: load_resistance,
            },
            bandwidth,
        ));
    }
    sources
}

/// Output noise budget of one branch driving `load_resistance`.
pub fn branch_noise_budget<T: Scalar>(
    load_resistance: T,
    drain_current: T,
    bandwidth: T,
    flicker_constant: T,
    eval_frequency: T,
    env: &EnvParams<T>,
) -> Result<NoiseBudget<T>> {
    positive(load_resistance, "load resistance")?;
    positive(drain_current, "drain current")?;
    positive(bandwidth, "bandwidth")?;
    if flicker_constant < T::zero() {
        return Err(Error::domain("flicker constant must be non-negative"));
    }
    positive(eval_frequency, "evaluation frequency")?;
    let sources = branch_noise_sources(
        load_resistance,
        drain_current,
        bandwidth,
        flicker_constant,
        eval_frequency,
    );
    NoiseBudget::from_sources(&sources, env)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadComparison<T> {
    pub budget_a: NoiseBudget<T>,
    pub budget_b: NoiseBudget<T>,
    /// SNR improvement of `b` over `a` at equal signal, `20 log10(rms_a / rms_b)`.
    pub snr_delta_db: T,
}

/// Compares two load configurations driven by the same signal.
pub fn compare_load_budgets<T: Scalar>(
    load_a: &[NoiseSourceSpec<T>],
    load_b: &[NoiseSourceSpec<T>],
    env: &EnvParams<T>,
) -> Result<LoadComparison<T>> {
    let budget_a = NoiseBudget::from_sources(load_a, env)?;
    let budget_b = NoiseBudget::from_sources(load_b, env)?;
    let snr_delta_db = lit::<T>(20.0) * (budget_a.total_rms / budget_b.total_rms).log10();
    Ok(LoadComparison {
        budget_a,
        budget_b,
        snr_delta_db,
    })
}
