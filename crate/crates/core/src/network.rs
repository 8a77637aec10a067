//! The N-branch differential network and its DC operating point.
//!
//! All branches share one node (emitter for NPN, source for NMOS) that is
//! pulled down by a tail current source. The operating point is the shared
//! node voltage `v*` at which the branch currents sum to the tail current.
//! Each branch current is itself the solution of a scalar fixed point because
//! the load drop feeds back into the collector/drain voltage.

use crate::devices::{EnvParams, NmosParams, NpnParams, PmosLinearParams, TailSourceSpec};
use crate::error::{Error, Result};
use crate::oracle::{self, ProbabilityVector};
use crate::scalar::{lit, Scalar};

/// Default solver tolerance as a fraction of the nominal tail current.
pub const DEFAULT_TOL_FRACTION: f64 = 1e-6;
/// The bracket extends this far below the smallest input.
pub const BRACKET_BELOW_MIN_INPUT: f64 = 1.0;

const OUTER_MAX_ITER: usize = 200;
const INNER_MAX_ITER: usize = 200;
const INNER_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Technology {
    Bipolar,
    Nmos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchDevice<T> {
    Npn(NpnParams<T>),
    Nmos(NmosParams<T>),
}

impl<T: Scalar> BranchDevice<T> {
    pub fn technology(&self) -> Technology {
        match self {
            BranchDevice::Npn(_) => Technology::Bipolar,
            BranchDevice::Nmos(_) => Technology::Nmos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BranchDevice::Npn(p) => p.validate(),
            BranchDevice::Nmos(p) => p.validate(),
        }
    }

    /// Current for control voltage `v_ctrl` (base/gate to shared node) and
    /// output voltage `v_out` (collector/drain to shared node).
    pub fn current(&self, env: &EnvParams<T>, v_ctrl: T, v_out: T) -> T {
        match self {
            BranchDevice::Npn(p) => p.collector_current(env, v_ctrl, v_out),
            BranchDevice::Nmos(p) => p.drain_current(env, v_ctrl, v_out),
        }
    }

    /// Voltage scale of the exponential: `V_T` or `n V_T`.
    pub fn exponent_scale(&self, env: &EnvParams<T>) -> T {
        match self {
            BranchDevice::Npn(_) => env.thermal_voltage(),
            BranchDevice::Nmos(p) => p.slope_voltage(env),
        }
    }

    /// Input offset such that the ideal current is
    /// `exp((x - v + offset) / scale)`.
    fn ideal_offset(&self, env: &EnvParams<T>) -> T {
        let s = self.exponent_scale(env);
        match self {
            BranchDevice::Npn(p) => s * p.saturation_current.ln(),
            BranchDevice::Nmos(p) => s * p.subthreshold_limit().ln() - p.threshold_voltage,
        }
    }

    /// Multiplies the current prefactor (`I_S`, or `W/L` for NMOS) by `factor`.
    pub fn scale_prefactor(&self, factor: T) -> Self {
        match *self {
            BranchDevice::Npn(p) => BranchDevice::Npn(NpnParams {
                saturation_current: p.saturation_current * factor,
                ..p
            }),
            BranchDevice::Nmos(p) => BranchDevice::Nmos(NmosParams {
                wl_ratio: p.wl_ratio * factor,
                ..p
            }),
        }
    }
}

/// Branch load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadSpec<T> {
    Resistor(T),
    PmosLinear(PmosLinearParams<T>),
    /// Cascode mirror copying `width_ratio * I` into a shared resistor; the
    /// branch drain sits at the high rail.
    Mirrored { load_resistance: T, width_ratio: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig<T> {
    pub class_size: usize,
    pub technology: Technology,
    pub branch_devices: Vec<BranchDevice<T>>,
    pub load: LoadSpec<T>,
    pub tail: TailSourceSpec<T>,
    pub v_supply_high: T,
    pub v_supply_low: T,
    pub env: EnvParams<T>,
}

impl<T: Scalar> NetworkConfig<T> {
    /// Network of `class_size` identical branches.
    pub fn uniform(
        class_size: usize,
        device: BranchDevice<T>,
        load: LoadSpec<T>,
        tail: TailSourceSpec<T>,
        v_supply_high: T,
        v_supply_low: T,
    ) -> Self {
        Self {
            class_size,
            technology: device.technology(),
            branch_devices: vec![device; class_size],
            load,
            tail,
            v_supply_high,
            v_supply_low,
            env: EnvParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_size < 2 {
            return Err(Error::config(format!(
                "class_size must be at least 2, got {}",
                self.class_size
            )));
        }
        if self.branch_devices.len() != self.class_size {
            return Err(Error::config(format!(
                "branch_devices has {} entries but class_size is {}",
                self.branch_devices.len(),
                self.class_size
            )));
        }
        if !(self.v_supply_high > self.v_supply_low) {
            return Err(Error::config("v_supply_high must exceed v_supply_low"));
        }
        EnvParams::new(self.env.temperature)?;
        for (k, dev) in self.branch_devices.iter().enumerate() {
            if dev.technology() != self.technology {
                return Err(Error::config(format!(
                    "branch {k} device is {:?} but network technology is {:?}",
                    dev.technology(),
                    self.technology
                )));
            }
            dev.validate().map_err(|e| e.at(format!("branch {k}")))?;
        }
        self.tail.validate()?;
        match self.load {
            LoadSpec::Resistor(r) => {
                if !(r > T::zero()) {
                    return Err(Error::config("load resistance must be positive"));
                }
            }
            LoadSpec::PmosLinear(p) => {
                p.validate()?;
                p.resistance(self.v_supply_high, self.v_supply_low)
                    .map_err(|e| Error::config(e.to_string()))?;
            }
            LoadSpec::Mirrored {
                load_resistance,
                width_ratio,
            } => {
                if !(load_resistance > T::zero()) || !(width_ratio > T::zero()) {
                    return Err(Error::config(
                        "mirrored load resistance and width ratio must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_inputs(&self, inputs: &[T]) -> Result<()> {
        oracle::check_real_vector(inputs)?;
        if inputs.len() != self.class_size {
            return Err(Error::domain(format!(
                "expected {} inputs, got {}",
                self.class_size,
                inputs.len()
            )));
        }
        Ok(())
    }

    /// Resistance between the high rail and each branch collector/drain.
    pub fn branch_drop_resistance(&self) -> Result<T> {
        match self.load {
            LoadSpec::Resistor(r) => Ok(r),
            LoadSpec::PmosLinear(p) => p.resistance(self.v_supply_high, self.v_supply_low),
            LoadSpec::Mirrored { .. } => Ok(T::zero()),
        }
    }

    /// Transimpedance from branch current to reported output voltage.
    pub fn output_transimpedance(&self) -> Result<T> {
        match self.load {
            LoadSpec::Resistor(r) => Ok(r),
            LoadSpec::PmosLinear(p) => p.resistance(self.v_supply_high, self.v_supply_low),
            LoadSpec::Mirrored {
                load_resistance,
                width_ratio,
            } => Ok(load_resistance * width_ratio),
        }
    }

    /// Ideal full-scale output `I_tail R_effective`.
    pub fn full_scale_output(&self) -> Result<T> {
        Ok(self.tail.nominal_current * self.output_transimpedance()?)
    }

    /// Exponent scale of branch 0 (`V_T` or `n V_T`).
    pub fn exponent_scale(&self) -> T {
        self.branch_devices[0].exponent_scale(&self.env)
    }

    /// Copy with each branch prefactor multiplied by `factors[k]`.
    pub fn with_prefactor_scaling(&self, factors: &[T]) -> Result<Self> {
        if factors.len() != self.class_size {
            return Err(Error::domain("one scaling factor per branch required"));
        }
        let mut out = self.clone();
        for (dev, &f) in out.branch_devices.iter_mut().zip(factors) {
            *dev = dev.scale_prefactor(f);
        }
        Ok(out)
    }

    /// Default solver tolerance, `1e-6` of the nominal tail current.
    pub fn default_tolerance(&self) -> T {
        self.tail.nominal_current * lit(DEFAULT_TOL_FRACTION)
    }
}

/// Non-fatal conditions found while solving.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Branch current above `(W/L) I_t`; the device is leaving weak inversion.
    AboveSubthreshold { branch: usize, current: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint<T> {
    pub shared_node_voltage: T,
    pub branch_currents: Vec<T>,
    pub output_voltages: Vec<T>,
    /// `sum(I_k) - I_tail(v*)`.
    pub kcl_residual: T,
    pub iterations: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T: Scalar> OperatingPoint<T> {
    /// Base currents of NPN branches (`I_C / beta`); zero for NMOS.
    pub fn base_currents(&self, config: &NetworkConfig<T>) -> Vec<T> {
        self.branch_currents
            .iter()
            .zip(&config.branch_devices)
            .map(|(&i, dev)| match dev {
                BranchDevice::Npn(p) => p.base_current(i),
                BranchDevice::Nmos(_) => T::zero(),
            })
            .collect()
    }

    /// Branch currents as fractions of their sum.
    pub fn fractions(&self) -> Vec<T> {
        let total = self.branch_currents.iter().copied().fold(T::zero(), |a, b| a + b);
        self.branch_currents.iter().map(|&i| i / total).collect()
    }
}

/// Ideal-model branch shares: Softmax with scale `V_T` (bipolar) or `n V_T` (NMOS).
pub fn closed_form_fractions<T: Scalar>(
    config: &NetworkConfig<T>,
    inputs: &[T],
) -> Result<ProbabilityVector<T>> {
    config.validate()?;
    config.check_inputs(inputs)?;
    oracle::softmax(inputs, config.exponent_scale())
}

/// Ideal-model branch currents: [`closed_form_fractions`] times the nominal tail current.
pub fn closed_form_currents<T: Scalar>(config: &NetworkConfig<T>, inputs: &[T]) -> Result<Vec<T>> {
    let p = closed_form_fractions(config, inputs)?;
    Ok(p.iter().map(|&f| f * config.tail.nominal_current).collect())
}

/// Per-branch evaluation with the load fixed point resolved.
struct Evaluator<'a, T> {
    config: &'a NetworkConfig<T>,
    inputs: &'a [T],
    drop_resistance: T,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(config: &'a NetworkConfig<T>, inputs: &'a [T]) -> Result<Self> {
        Ok(Self {
            config,
            inputs,
            drop_resistance: config.branch_drop_resistance()?,
        })
    }

    /// Branch `k` current at shared-node voltage `v`: the root of
    /// `I = f(x_k - v, V_high - I R - v)`.
    fn branch_current(&self, k: usize, v: T) -> Result<T> {
        let dev = &self.config.branch_devices[k];
        let env = &self.config.env;
        let ctrl = self.inputs[k] - v;
        let top = self.config.v_supply_high - v;
        let r = self.drop_resistance;
        let f = |i: T| dev.current(env, ctrl, top - i * r);

        let f0 = f(T::zero());
        if r == T::zero() || !(f0 > T::zero()) {
            return Ok(f0.max(T::zero()));
        }

        // g(I) = I - f(I) is increasing because f falls as the load drop grows;
        // the root lies in [0, f(0)].
        let g = |i: T| i - f(i);
        let (mut lo, mut hi) = (T::zero(), f0);
        let (mut g_lo, mut g_hi) = (-f0, g(f0));
        if g_hi == T::zero() {
            return Ok(hi);
        }
        let tol = lit::<T>(INNER_REL_TOL);
        let half = lit::<T>(0.5);
        // Illinois-weighted false position, falling back to bisection.
        let mut side = 0i8;
        let mut prev = hi;
        for _ in 0..INNER_MAX_ITER {
            let mut c = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if !c.is_finite() || c <= lo || c >= hi {
                c = half * (lo + hi);
            }
            let gc = g(c);
            if gc == T::zero() || (c - prev).abs() <= tol * c || (hi - lo) <= tol * c {
                return Ok(c);
            }
            prev = c;
            if gc < T::zero() || gc.is_nan() {
                lo = c;
                g_lo = gc;
                if side == -1 {
                    g_hi = g_hi * half;
                }
                side = -1;
            } else {
                hi = c;
                g_hi = gc;
                if side == 1 {
                    g_lo = g_lo * half;
                }
                side = 1;
            }
        }
        Err(Error::InnerNotConverged {
            branch: k,
            iterations: INNER_MAX_ITER,
        })
    }

    fn currents(&self, v: T) -> Result<Vec<T>> {
        (0..self.inputs.len()).map(|k| self.branch_current(k, v)).collect()
    }

    fn residual_from(&self, currents: &[T], v: T) -> T {
        let total = currents.iter().copied().fold(T::zero(), |a, b| a + b);
        total - self.config.tail.current(v)
    }
}

/// `sum_k I_k(v_shared) - I_tail(v_shared)` with each branch's load fixed
/// point resolved. Strictly decreasing in `v_shared`.
pub fn kcl_residual<T: Scalar>(config: &NetworkConfig<T>, inputs: &[T], v_shared: T) -> Result<T> {
    config.validate()?;
    config.check_inputs(inputs)?;
    let ev = Evaluator::new(config, inputs)?;
    let currents = ev.currents(v_shared)?;
    Ok(ev.residual_from(&currents, v_shared))
}

/// Solves for the shared-node voltage where KCL holds to within `tol` amperes.
///
/// The root is bracketed in `[min(x) - 1 V, max(x)]` and found by Newton
/// steps on `ln(sum I_k) - ln(I_tail)` (nearly linear in `v`), with
/// bisection whenever a step leaves the bracket.
pub fn solve_operating_point<T: Scalar>(
    config: &NetworkConfig<T>,
    inputs: &[T],
    tol: T,
) -> Result<OperatingPoint<T>> {
    config.validate()?;
    config.check_inputs(inputs)?;
    if !(tol > T::zero()) {
        return Err(Error::domain("solver tolerance must be positive"));
    }
    let ev = Evaluator::new(config, inputs)?;

    let x_min = inputs.iter().copied().fold(T::infinity(), T::min);
    let x_max = inputs.iter().copied().fold(T::neg_infinity(), T::max);
    let mut lo = x_min - lit(BRACKET_BELOW_MIN_INPUT);
    let mut hi = x_max;
    let r_lo = ev.residual_from(&ev.currents(lo)?, lo);
    let r_hi = ev.residual_from(&ev.currents(hi)?, hi);
    if !(r_lo >= T::zero() && r_hi <= T::zero()) {
        return Err(Error::NoSignChange {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            residual_lo: r_lo.as_f64(),
            residual_hi: r_hi.as_f64(),
        });
    }

    let mut v = initial_guess(config, inputs).unwrap_or(hi);
    if !(v > lo && v < hi) {
        v = lit::<T>(0.5) * (lo + hi);
    }

    let slopes: Vec<T> = config
        .branch_devices
        .iter()
        .map(|d| T::one() / d.exponent_scale(&config.env))
        .collect();
    let g_tail = config.tail.conductance();

    for iter in 1..=OUTER_MAX_ITER {
        let currents = ev.currents(v)?;
        let residual = ev.residual_from(&currents, v);
        if residual.abs() <= tol {
            return Ok(finish(config, v, currents, residual, iter));
        }
        if residual > T::zero() {
            lo = v;
        } else {
            hi = v;
        }

        let total = currents.iter().copied().fold(T::zero(), |a, b| a + b);
        let i_tail = config.tail.current(v);
        let mut next = T::nan();
        if total > T::zero() && i_tail > T::zero() {
            let d_total = currents
                .iter()
                .zip(&slopes)
                .map(|(&i, &s)| i * s)
                .fold(T::zero(), |a, b| a + b);
            let phi = total.ln() - i_tail.ln();
            let dphi = -d_total / total - g_tail / i_tail;
            if dphi < T::zero() {
                next = v - phi / dphi;
            }
        }
        if !(next > lo && next < hi) {
            next = lit::<T>(0.5) * (lo + hi);
        }
        if next == v || hi - lo <= T::epsilon() * v.abs().max(T::one()) {
            // Bracket exhausted at machine precision.
            let currents = ev.currents(next)?;
            let residual = ev.residual_from(&currents, next);
            if residual.abs() <= tol {
                return Ok(finish(config, next, currents, residual, iter));
            }
            return Err(Error::OuterNotConverged {
                iterations: iter,
                residual: residual.abs().as_f64(),
            });
        }
        v = next;
    }
    let currents = ev.currents(v)?;
    let residual = ev.residual_from(&currents, v);
    Err(Error::OuterNotConverged {
        iterations: OUTER_MAX_ITER,
        residual: residual.abs().as_f64(),
    })
}

/// Solve with [`NetworkConfig::default_tolerance`].
pub fn solve_operating_point_default<T: Scalar>(
    config: &NetworkConfig<T>,
    inputs: &[T],
) -> Result<OperatingPoint<T>> {
    solve_operating_point(config, inputs, config.default_tolerance())
}

/// Shared-node voltage of the idealised network (no load feedback, exact
/// tail), used as the starting point.
fn initial_guess<T: Scalar>(config: &NetworkConfig<T>, inputs: &[T]) -> Option<T> {
    let s = config.exponent_scale();
    let shifted: Vec<T> = inputs
        .iter()
        .zip(&config.branch_devices)
        .map(|(&x, d)| x + d.ideal_offset(&config.env))
        .collect();
    let lse = oracle::log_sum_exp(&shifted, s).ok()?;
    let v = lse - s * config.tail.nominal_current.ln();
    v.is_finite().then_some(v)
}

fn finish<T: Scalar>(
    config: &NetworkConfig<T>,
    v: T,
    currents: Vec<T>,
    residual: T,
    iterations: usize,
) -> OperatingPoint<T> {
    let transimpedance = config
        .output_transimpedance()
        .expect("load validated before solving");
    let output_voltages = currents.iter().map(|&i| i * transimpedance).collect();
    let mut diagnostics = Vec::new();
    for (k, (dev, &i)) in config.branch_devices.iter().zip(&currents).enumerate() {
        if let BranchDevice::Nmos(p) = dev {
            let limit = p.subthreshold_limit();
            if i > limit {
                diagnostics.push(Diagnostic::AboveSubthreshold {
                    branch: k,
                    current: i.as_f64(),
                    limit: limit.as_f64(),
                });
            }
        }
    }
    OperatingPoint {
        shared_node_voltage: v,
        branch_currents: currents,
        output_voltages,
        kcl_residual: residual,
        iterations,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{NmosParams, NpnParams};

    fn bipolar(n: usize, early: f64) -> NetworkConfig<f64> {
        let dev = BranchDevice::Npn(NpnParams {
            saturation_current: 1e-14,
            early_voltage: early,
            beta: f64::INFINITY,
        });
        NetworkConfig::uniform(
            n,
            dev,
            LoadSpec::Resistor(20.0),
            TailSourceSpec::ideal(50e-3),
            5.0,
            0.0,
        )
    }

    fn nmos(n: usize, lambda: f64) -> NetworkConfig<f64> {
        let dev = BranchDevice::Nmos(NmosParams {
            wl_ratio: 4.0,
            threshold_current: 0.5e-6,
            threshold_voltage: 0.46,
            subthreshold_swing: 1.71,
            clm_coefficient: lambda,
        });
        NetworkConfig::uniform(
            n,
            dev,
            LoadSpec::Resistor(5e3),
            TailSourceSpec::ideal(200e-9),
            1.8,
            0.0,
        )
    }

    #[test]
    fn closed_form_symmetric() {
        let p = closed_form_fractions(&bipolar(4, f64::INFINITY), &[2.5; 4]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn closed_form_ratio_one_to_three() {
        let cfg = bipolar(2, f64::INFINITY);
        let vt = cfg.env.thermal_voltage();
        let p = closed_form_fractions(&cfg, &[2.5, 2.5 + vt * 3f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-14 && (p[1] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn closed_form_nmos_uses_slope_factor() {
        let cfg = nmos(4, 0.0);
        let x = [0.4, 0.55, 0.72, 0.9];
        let p = closed_form_fractions(&cfg, &x).unwrap();
        let q = oracle::softmax(&x, 1.71 * cfg.env.thermal_voltage()).unwrap();
        for (a, b) in p.iter().zip(q.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn technology_mismatch_is_config_error() {
        let mut cfg = bipolar(3, f64::INFINITY);
        cfg.technology = Technology::Nmos;
        assert!(matches!(
            closed_form_fractions(&cfg, &[1.0, 1.0, 1.0]),
            Err(Error::Config(_))
        ));
        let mut cfg = bipolar(3, f64::INFINITY);
        cfg.branch_devices[1] = nmos(2, 0.0).branch_devices[0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ideal_solve_matches_closed_form() {
        let cfg = nmos(4, 0.0);
        let x = [0.45, 0.6, 0.6, 0.8];
        let op = solve_operating_point(&cfg, &x, 1e-12 * 200e-9).unwrap();
        let ideal = closed_form_currents(&cfg, &x).unwrap();
        for (a, b) in op.branch_currents.iter().zip(&ideal) {
            assert!((a / b - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_pair_splits_evenly_with_nonidealities() {
        for cfg in [bipolar(2, 30.0), nmos(2, 0.2)] {
            let tol = cfg.default_tolerance();
            let x = if cfg.technology == Technology::Bipolar { [2.5, 2.5] } else { [0.6, 0.6] };
            let op = solve_operating_point(&cfg, &x, tol).unwrap();
            let half = cfg.tail.nominal_current / 2.0;
            for &i in &op.branch_currents {
                assert!((i - half).abs() <= tol);
            }
        }
    }

    #[test]
    fn bipolar_outputs_sum_to_one_volt() {
        let cfg = bipolar(4, f64::INFINITY);
        let op = solve_operating_point_default(&cfg, &[2.5; 4]).unwrap();
        let total: f64 = op.output_voltages.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!(op.kcl_residual.abs() <= cfg.default_tolerance());
    }

    #[test]
    fn residual_limits_and_root() {
        let cfg = nmos(4, 0.05);
        let x = [0.5, 0.6, 0.7, 0.6];
        let far = kcl_residual(&cfg, &x, 5.0).unwrap();
        assert!((far + 200e-9).abs() < 1e-15);
        let tol = 1e-15;
        let op = solve_operating_point(&cfg, &x, tol).unwrap();
        let r = kcl_residual(&cfg, &x, op.shared_node_voltage).unwrap();
        assert!(r.abs() <= tol);
    }

    #[test]
    fn residual_strictly_decreasing_across_bracket() {
        for cfg in [bipolar(4, 50.0), nmos(4, 0.1)] {
            let x: Vec<f64> = if cfg.technology == Technology::Bipolar {
                vec![2.4, 2.5, 2.55, 2.7]
            } else {
                vec![0.4, 0.6, 0.65, 0.9]
            };
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut prev = f64::INFINITY;
            for k in 0..100 {
                let v = lo + (hi - lo) * k as f64 / 99.0;
                let r = kcl_residual(&cfg, &x, v).unwrap();
                assert!(r < prev, "not decreasing at v = {v}");
                prev = r;
            }
        }
    }

    #[test]
    fn ideal_bipolar_node_matches_analytic_inversion() {
        let cfg = bipolar(4, f64::INFINITY);
        let x = [2.45, 2.5, 2.58, 2.52];
        let vt = cfg.env.thermal_voltage();
        // I_EE = I_S e^{-V_E/V_T} sum e^{x_k/V_T}
        let m = 2.58;
        let s: f64 = x.iter().map(|&xk| ((xk - m) / vt).exp()).sum();
        let analytic = m + vt * (s * 1e-14 / 50e-3).ln();
        let op = solve_operating_point(&cfg, &x, 1e-15).unwrap();
        assert!((op.shared_node_voltage - analytic).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_reports_bracket() {
        let mut cfg = nmos(2, 0.0);
        cfg.tail = TailSourceSpec::ideal(1.0);
        let err = solve_operating_point_default(&cfg, &[0.6, 0.6]).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
        assert!(err.is_convergence());
    }

    #[test]
    fn subthreshold_guard_flags_strong_inversion() {
        let mut cfg = nmos(2, 0.0);
        cfg.tail = TailSourceSpec::ideal(5e-6);
        let op = solve_operating_point_default(&cfg, &[0.9, 0.4]).unwrap();
        assert!(matches!(
            op.diagnostics.as_slice(),
            [Diagnostic::AboveSubthreshold { branch: 0, .. }]
        ));
        let op = solve_operating_point_default(&nmos(2, 0.0), &[0.9, 0.4]).unwrap();
        assert!(op.diagnostics.is_empty());
    }

    #[test]
    fn mirrored_output_scaling() {
        let mut cfg = nmos(4, 0.0);
        cfg.load = LoadSpec::Mirrored {
            load_resistance: 3.5e6,
            width_ratio: 2.0,
        };
        let op = solve_operating_point(&cfg, &[0.6; 4], 1e-18).unwrap();
        for &v in &op.output_voltages {
            assert!((v - 2.0 * 50e-9 * 3.5e6).abs() < 1e-9);
        }
        assert!((cfg.full_scale_output().unwrap() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn base_currents_reported() {
        let mut cfg = bipolar(2, f64::INFINITY);
        for d in &mut cfg.branch_devices {
            if let BranchDevice::Npn(p) = d {
                p.beta = 100.0;
            }
        }
        let op = solve_operating_point_default(&cfg, &[2.5, 2.5]).unwrap();
        for &ib in &op.base_currents(&cfg) {
            assert!((ib - 25e-3 / 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_tail_impedance_changes_total() {
        let mut cfg = nmos(4, 0.0);
        cfg.tail = TailSourceSpec::finite_impedance(200e-9, 1e6, 0.3);
        let op = solve_operating_point(&cfg, &[0.6; 4], 1e-18).unwrap();
        let total: f64 = op.branch_currents.iter().sum();
        let expected = 200e-9 + (op.shared_node_voltage - 0.3) / 1e6;
        assert!((total - expected).abs() < 1e-17);
    }

    #[test]
    fn inputs_length_checked() {
        let cfg = nmos(4, 0.0);
        assert!(solve_operating_point_default(&cfg, &[0.6; 3]).is_err());
        assert!(solve_operating_point(&cfg, &[0.6; 4], 0.0).is_err());
    }
}
