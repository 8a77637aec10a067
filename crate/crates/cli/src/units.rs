//! SI quantities written as strings: `"200nA"`, `"3.5Mohm"`, `"0.01/V"`.

/// Physical unit expected by a configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Ampere,
    Volt,
    Ohm,
    Farad,
    Hertz,
    Second,
    Kelvin,
    PerVolt,
    AmperePerVoltSquared,
}

impl Unit {
    fn symbols(self) -> &'static [&'static str] {
        match self {
            Unit::Ampere => &["A"],
            Unit::Volt => &["V"],
            Unit::Ohm => &["ohm", "Ohm", "Ω"],
            Unit::Farad => &["F"],
            Unit::Hertz => &["Hz"],
            Unit::Second => &["s"],
            Unit::Kelvin => &["K"],
            Unit::PerVolt => &["/V"],
            Unit::AmperePerVoltSquared => &["A/V^2", "A/V2"],
        }
    }

    pub fn symbol(self) -> &'static str {
        self.symbols()[0]
    }
}

fn prefix_exponent(prefix: &str) -> Option<i32> {
    Some(match prefix {
        "" => 0,
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" | "µ" | "μ" => -6,
        "m" => -3,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        "T" => 12,
        _ => return None,
    })
}

/// Parses `<number><prefix><unit>`, optionally space separated. `"inf"`
/// (with or without the unit) is accepted only when `allow_infinite` is set.
pub fn parse_quantity(text: &str, unit: Unit, allow_infinite: bool) -> Result<f64, String> {
    let trimmed = text.trim();
    let body = unit
        .symbols()
        .iter()
        .find_map(|sym| trimmed.strip_suffix(sym))
        .map(str::trim_end);
    let body = match body {
        Some(b) => b,
        None if allow_infinite && trimmed == "inf" => "inf",
        None => {
            return Err(format!(
                "'{text}' is missing its unit (expected a value such as \"1.5{}\")",
                unit.symbol()
            ))
        }
    };
    if body == "inf" || body == "+inf" {
        return if allow_infinite {
            Ok(f64::INFINITY)
        } else {
            Err(format!("'{text}' must be finite"))
        };
    }
    let split = body
        .char_indices()
        .rev()
        .find(|&(_, c)| c.is_ascii_digit() || c == '.')
        .map_or(0, |(i, c)| i + c.len_utf8());
    let (number, prefix) = body.split_at(split);
    let exponent = prefix_exponent(prefix.trim())
        .ok_or_else(|| format!("'{text}' has unknown SI prefix '{}'", prefix.trim()))?;
    let number = number.trim();
    number
        .parse::<f64>()
        .map_err(|_| format!("'{text}' does not start with a number"))?;
    // Shift the decimal exponent so "200n" parses as exactly 2e-7.
    let (mantissa, own_exp) = match number.find(['e', 'E']) {
        Some(i) => (&number[..i], number[i + 1..].parse::<i32>().unwrap_or(0)),
        None => (number, 0),
    };
    let v: f64 = format!("{mantissa}e{}", own_exp + exponent)
        .parse()
        .map_err(|_| format!("'{text}' does not start with a number"))?;
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v)
}
