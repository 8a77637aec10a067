//! Compact current-voltage models for the devices in the network: forward
//! active NPN, subthreshold NMOS, triode PMOS load and the tail current source.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Default ambient temperature, K.
pub const ROOM_TEMPERATURE: f64 = 300.0;

/// Operating environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams<T> {
    /// Absolute temperature in kelvin.
    pub temperature: T,
}

impl<T: Scalar> EnvParams<T> {
    pub fn new(temperature: T) -> Result<Self> {
        if !(temperature > T::zero()) || !temperature.is_finite() {
            return Err(Error::config(format!(
                "temperature must be positive, got {temperature} K"
            )));
        }
        Ok(Self { temperature })
    }

    /// `k_B T / q` in volts.
    pub fn thermal_voltage(&self) -> T {
        lit::<T>(BOLTZMANN) * self.temperature / lit(ELEMENTARY_CHARGE)
    }

    /// `k_B T` in joules.
    pub fn kt(&self) -> T {
        lit::<T>(BOLTZMANN) * self.temperature
    }
}

impl<T: Scalar> Default for EnvParams<T> {
    fn default() -> Self {
        Self {
            temperature: lit(ROOM_TEMPERATURE),
        }
    }
}

/// Forward-active NPN parameters. `early_voltage` and `beta` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpnParams<T> {
    pub saturation_current: T,
    pub early_voltage: T,
    pub beta: T,
}

impl<T: Scalar> NpnParams<T> {
    /// Ideal transistor: infinite Early voltage and current gain.
    pub fn ideal(saturation_current: T) -> Self {
        Self {
            saturation_current,
            early_voltage: T::infinity(),
            beta: T::infinity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.saturation_current > T::zero()) || !self.saturation_current.is_finite() {
            return Err(Error::config("NPN saturation_current must be positive"));
        }
        if !(self.early_voltage > T::zero()) {
            return Err(Error::config("NPN early_voltage must be positive or infinite"));
        }
        if !(self.beta > T::zero()) {
            return Err(Error::config("NPN beta must be positive or infinite"));
        }
        Ok(())
    }

    /// `I_S exp(v_be / V_T) (1 + v_ce / V_A)`; the Early factor is dropped
    /// when `V_A` is infinite.
    pub fn collector_current(&self, env: &EnvParams<T>, v_be: T, v_ce: T) -> T {
        let core = self.saturation_current * (v_be / env.thermal_voltage()).exp();
        if self.early_voltage.is_infinite() {
            core
        } else {
            core * (T::one() + v_ce / self.early_voltage)
        }
    }

    /// Base current `I_C / beta`. Reported only; never fed back into KCL.
    pub fn base_current(&self, collector_current: T) -> T {
        if self.beta.is_infinite() {
            T::zero()
        } else {
            collector_current / self.beta
        }
    }
}

/// Weak-inversion NMOS parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmosParams<T> {
    pub wl_ratio: T,
    /// Drain current at threshold, `I_t`.
    pub threshold_current: T,
    pub threshold_voltage: T,
    /// Subthreshold slope factor `n`.
    pub subthreshold_swing: T,
    /// Channel-length modulation, 1/V.
    pub clm_coefficient: T,
}

impl<T: Scalar> NmosParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.wl_ratio > T::zero()) {
            return Err(Error::config("NMOS wl_ratio must be positive"));
        }
        if !(self.threshold_current > T::zero()) {
            return Err(Error::config("NMOS threshold_current must be positive"));
        }
        if !self.threshold_voltage.is_finite() {
            return Err(Error::config("NMOS threshold_voltage must be finite"));
        }
        if !(self.subthreshold_swing >= T::one()) {
            return Err(Error::config("NMOS subthreshold_swing must be >= 1"));
        }
        if !(self.clm_coefficient >= T::zero()) {
            return Err(Error::config("NMOS clm_coefficient must be >= 0"));
        }
        Ok(())
    }

    /// `(W/L) I_t`: the drain current at which weak inversion ends.
    pub fn subthreshold_limit(&self) -> T {
        self.wl_ratio * self.threshold_current
    }

    /// Exponent scale `n V_T`.
    pub fn slope_voltage(&self, env: &EnvParams<T>) -> T {
        self.subthreshold_swing * env.thermal_voltage()
    }

    /// Drain-source leakage factor `1 - exp(-v_ds / V_T)`.
    pub fn leakage_factor(env: &EnvParams<T>, v_ds: T) -> T {
        T::one() - (-v_ds / env.thermal_voltage()).exp()
    }

    /// `(W/L) I_t exp((v_gs - V_TH)/(n V_T)) (1 - exp(-v_ds/V_T)) (1 + lambda v_ds)`.
    pub fn drain_current(&self, env: &EnvParams<T>, v_gs: T, v_ds: T) -> T {
        let exponent = (v_gs - self.threshold_voltage) / self.slope_voltage(env);
        let mut id = self.subthreshold_limit() * exponent.exp() * Self::leakage_factor(env, v_ds);
        if self.clm_coefficient > T::zero() {
            id = id * (T::one() + self.clm_coefficient * v_ds);
        }
        id
    }
}

/// Triode PMOS load with its gate tied to the low rail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmosLinearParams<T> {
    pub wl_ratio: T,
    /// `mu_p C_ox`, A/V^2.
    pub process_gain: T,
    /// `|V_TH,P|`.
    pub threshold_voltage_mag: T,
}

impl<T: Scalar> PmosLinearParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.wl_ratio > T::zero())
            || !(self.process_gain > T::zero())
            || !(self.threshold_voltage_mag > T::zero())
        {
            return Err(Error::config("PMOS load parameters must all be positive"));
        }
        Ok(())
    }

    /// Small-signal channel resistance `1 / ((W/L) mu_p C_ox (V_DD - V_SS - |V_TH,P|))`.
    pub fn resistance(&self, v_dd: T, v_ss: T) -> Result<T> {
        let overdrive = v_dd - v_ss - self.threshold_voltage_mag;
        if !(overdrive > T::zero()) {
            return Err(Error::domain(format!(
                "load not in strong inversion: overdrive {overdrive} V"
            )));
        }
        Ok(T::one() / (self.wl_ratio * self.process_gain * overdrive))
    }
}

/// How the tail current depends on the shared-node voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailKind<T> {
    Ideal,
    /// Simple mirror with finite output resistance; exact at `reference_node_voltage`.
    FiniteImpedance {
        output_resistance: T,
        reference_node_voltage: T,
    },
    /// Cascode mirror, modelled as a perfect source. Headroom is checked by the
    /// supply-margin calculator instead.
    Cascode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSourceSpec<T> {
    pub kind: TailKind<T>,
    pub nominal_current: T,
}

impl<T: Scalar> TailSourceSpec<T> {
    pub fn ideal(nominal_current: T) -> Self {
        Self {
            kind: TailKind::Ideal,
            nominal_current,
        }
    }

    pub fn cascode(nominal_current: T) -> Self {
        Self {
            kind: TailKind::Cascode,
            nominal_current,
        }
    }

    pub fn finite_impedance(nominal_current: T, output_resistance: T, reference_node_voltage: T) -> Self {
        Self {
            kind: TailKind::FiniteImpedance {
                output_resistance,
                reference_node_voltage,
            },
            nominal_current,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_current > T::zero()) || !self.nominal_current.is_finite() {
            return Err(Error::config("tail nominal_current must be positive"));
        }
        if let TailKind::FiniteImpedance {
            output_resistance,
            reference_node_voltage,
        } = self.kind
        {
            if !(output_resistance > T::zero()) {
                return Err(Error::config("tail output_resistance must be positive"));
            }
            if !reference_node_voltage.is_finite() {
                return Err(Error::config("tail reference_node_voltage must be finite"));
            }
        }
        Ok(())
    }

    /// Current drawn from the shared node at voltage `v_node`.
    pub fn current(&self, v_node: T) -> T {
        match self.kind {
            TailKind::Ideal | TailKind::Cascode => self.nominal_current,
            TailKind::FiniteImpedance {
                output_resistance,
                reference_node_voltage,
            } => self.nominal_current + (v_node - reference_node_voltage) / output_resistance,
        }
    }

    /// `d I_tail / d v_node`.
    pub fn conductance(&self) -> T {
        match self.kind {
            TailKind::FiniteImpedance {
                output_resistance, ..
            } => T::one() / output_resistance,
            _ => T::zero(),
        }
    }
}

/// Free-function form of [`NpnParams::collector_current`].
pub fn npn_collector_current<T: Scalar>(params: &NpnParams<T>, env: &EnvParams<T>, v_be: T, v_ce: T) -> T {
    params.collector_current(env, v_be, v_ce)
}

/// Free-function form of [`NmosParams::drain_current`].
pub fn nmos_subthreshold_current<T: Scalar>(params: &NmosParams<T>, env: &EnvParams<T>, v_gs: T, v_ds: T) -> T {
    params.drain_current(env, v_gs, v_ds)
}

/// Free-function form of [`PmosLinearParams::resistance`].
pub fn pmos_linear_resistance<T: Scalar>(params: &PmosLinearParams<T>, v_dd: T, v_ss: T) -> Result<T> {
    params.resistance(v_dd, v_ss)
}

/// Free-function form of [`TailSourceSpec::current`].
pub fn tail_current<T: Scalar>(spec: &TailSourceSpec<T>, v_node: T) -> T {
    spec.current(v_node)
}
