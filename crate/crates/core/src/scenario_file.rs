//! `key = value` scenario files.
//!
//! `frequency_ghz` is required; every other key falls back to the default of
//! [`Scenario::at_frequency`]. Unknown keys are rejected so that typos do not
//! silently change a run.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::propagation::Scenario;

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut frequency = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(n, format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "frequency_ghz" {
            frequency = Some(number(n, key, value)?);
        } else {
            entries.push((n, key, value));
        }
    }
    let frequency = frequency.ok_or_else(|| Error::parse(1, "missing required key `frequency_ghz`"))?;
    let mut s = Scenario::at_frequency(frequency);
    for (n, key, value) in entries {
        match key {
            "p_t_dbw_m2" => s.p_t_dbw_per_m2 = number(n, key, value)?,
            "p_th_dbw_m2" => s.p_th_dbw_per_m2 = number(n, key, value)?,
            "noise_dbw" => s.noise_dbw = number(n, key, value)?,
            "n_los" => s.n_los = number(n, key, value)?,
            "n_nlos" => s.n_nlos = number(n, key, value)?,
            "height_m" => s.antenna_height_m = number(n, key, value)?,
            "r_min_m" => s.r_min_m = number(n, key, value)?,
            "r_max_m" => s.r_max_m = number(n, key, value)?,
            "gamma_ground" => s.ground_reflection_coeff = number(n, key, value)?,
            "two_ray" => s.two_ray = value.parse().map_err(|e: String| Error::parse(n, e))?,
            other => return Err(Error::parse(n, format!("unknown key `{other}`"))),
        }
    }
    s.validate().map_err(|e| Error::parse(1, e.to_string()))?;
    Ok(s)
}

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("`{key}`: `{value}` is not a number")))
}

/// Writes every key; parsing the output yields an identical scenario.
pub fn format_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "frequency_ghz = {}", s.frequency_ghz);
    let _ = writeln!(out, "p_t_dbw_m2 = {}", s.p_t_dbw_per_m2);
    let _ = writeln!(out, "p_th_dbw_m2 = {}", s.p_th_dbw_per_m2);
    let _ = writeln!(out, "noise_dbw = {}", s.noise_dbw);
    let _ = writeln!(out, "n_los = {}", s.n_los);
    let _ = writeln!(out, "n_nlos = {}", s.n_nlos);
    let _ = writeln!(out, "height_m = {}", s.antenna_height_m);
    let _ = writeln!(out, "r_min_m = {}", s.r_min_m);
    let _ = writeln!(out, "r_max_m = {}", s.r_max_m);
    let _ = writeln!(out, "gamma_ground = {}", s.ground_reflection_coeff);
    let _ = writeln!(out, "two_ray = {}", s.two_ray.as_str());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::TwoRayForm;

    #[test]
    fn defaults_fill_missing_keys() {
        let s = parse_scenario("frequency_ghz = 28\n").unwrap();
        assert_eq!(s, Scenario::at_frequency(28.0));
        assert_eq!(s.noise_dbw, f64::NEG_INFINITY);
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# band\nfrequency_ghz = 6 # GHz\nnoise_dbw = -inf\nr_max_m = 600\ntwo_ray = coherent\ngamma_ground = -0.5\n";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.r_max_m, 600.0);
        assert_eq!(s.two_ray, TwoRayForm::Coherent);
        assert_eq!(s.ground_reflection_coeff, -0.5);
    }

    #[test]
    fn round_trip() {
        let mut s = Scenario::at_frequency(27.5);
        s.noise_dbw = -95.25;
        s.two_ray = TwoRayForm::Coherent;
        assert_eq!(parse_scenario(&format_scenario(&s)).unwrap(), s);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_scenario("frequency_ghz = 6\nn_los = abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_scenario("frequency_ghz = 6\ncolour = red\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_scenario("n_los = 2\n").is_err());
        assert!(parse_scenario("frequency_ghz = 200\n").is_err());
    }
}
