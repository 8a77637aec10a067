//! CSV rendering with fixed headers and number format.
//!
//! Numbers use 12 significant digits in scientific notation and rows end in
//! `\n`, so identical results always serialise to identical bytes.

use std::fmt::Write;

use crate::analysis::{MonteCarloResult, SweepResult};
use crate::noise::NoiseBudget;
use crate::scalar::Scalar;
use crate::transient::TransientResult;

pub const SWEEP_HEADER: &str = "sweep_v,measured_frac,ideal_frac,error_frac";
pub const TRANSIENT_HEADER: &str = "t_s,vout_v,ibranch_a";
pub const NOISE_HEADER: &str = "label,psd,rms_v,fraction";
pub const MONTECARLO_HEADER: &str = "trial,max_rel_error";

/// `1.23456789012e-7` style: 12 significant digits.
pub fn format_number<T: Scalar>(value: T) -> String {
    let v = value.as_f64();
    if v.is_nan() {
        "nan".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{v:.11e}")
    }
}

fn table<'a>(header: &str, rows: impl Iterator<Item = Vec<String>> + 'a) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep_csv<T: Scalar>(r: &SweepResult<T>) -> String {
    table(
        SWEEP_HEADER,
        (0..r.swept_input.len()).map(|i| {
            vec![
                format_number(r.swept_input[i]),
                format_number(r.measured_fraction[i]),
                format_number(r.ideal_fraction[i]),
                format_number(r.error[i]),
            ]
        }),
    )
}

pub fn transient_csv<T: Scalar>(r: &TransientResult<T>) -> String {
    table(
        TRANSIENT_HEADER,
        (0..r.times.len()).map(|i| {
            vec![
                format_number(r.times[i]),
                format_number(r.output_voltage[i]),
                format_number(r.branch_current[i]),
            ]
        }),
    )
}

/// Labels are written verbatim; commas and quotes are replaced by `_`.
pub fn noise_csv<T: Scalar>(b: &NoiseBudget<T>) -> String {
    table(
        NOISE_HEADER,
        b.terms.iter().map(|t| {
            let label: String = t
                .label
                .chars()
                .map(|c| if matches!(c, ',' | '"' | '\n' | '\r') { '_' } else { c })
                .collect();
            vec![label, format_number(t.psd), format_number(t.rms), format_number(t.fraction)]
        }),
    )
}

/// One row per accepted trial.
pub fn montecarlo_csv<T: Scalar>(r: &MonteCarloResult<T>) -> String {
    table(
        MONTECARLO_HEADER,
        r.trial_index
            .iter()
            .zip(&r.max_rel_error)
            .map(|(&t, &e)| vec![t.to_string(), format_number(e)]),
    )
}

/// Plain `key: value` lines for human-readable summaries.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new(title: &str) -> Self {
        Self {
            text: format!("{title}\n"),
        }
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {value}");
        self
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
