//! Grid shorthand: single values, comma lists, `start:stop:step` ranges and
//! `1e2:1e6` decade ranges.

use crate::error::CliError;

/// Tolerance, in units of the step, for including the end of a range.
const RANGE_SLACK: f64 = 1e-9;

/// Largest number of points a range may expand to.
const MAX_POINTS: usize = 1_000_000;

pub fn parse_number(key: &str, text: &str) -> Result<f64, CliError> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--{key}: malformed number '{text}'")))?;
    if !value.is_finite() {
        return Err(CliError::Config(format!("--{key}: '{text}' is not finite")));
    }
    Ok(value)
}

/// Accepts plain integers and integral scientific notation such as `1e3`.
pub fn parse_count(key: &str, text: &str) -> Result<u32, CliError> {
    let value = parse_number(key, text)?;
    if value < 0.0 || value.fract() != 0.0 || value > f64::from(u32::MAX) {
        return Err(CliError::Config(format!("--{key}: '{text}' is not a nonnegative integer")));
    }
    Ok(value as u32)
}

pub fn parse_int(key: &str, text: &str) -> Result<i32, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--{key}: malformed integer '{text}'")))
}

/// Snaps `x` to twelve decimals so that `0:1:0.01` yields the doubles
/// nearest to the decimal values.
fn snap(x: f64) -> f64 {
    let scaled = (x * 1e12).round();
    if scaled.abs() < 9e15 {
        scaled / 1e12
    } else {
        x
    }
}

fn linear_range(key: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) {
        return Err(CliError::Config(format!("--{key}: step must be positive, got {step}")));
    }
    if stop < start {
        return Err(CliError::Config(format!("--{key}: range end {stop} is below its start {start}")));
    }
    let count = ((stop - start) / step + RANGE_SLACK).floor();
    if count >= MAX_POINTS as f64 {
        return Err(CliError::Config(format!("--{key}: range expands to more than {MAX_POINTS} points")));
    }
    Ok((0..=count as usize).map(|i| snap(start + i as f64 * step)).collect())
}

/// Real-valued grid: `x`, `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_real_grid(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.len() {
        1 => text.split(',').map(|t| parse_number(key, t)).collect::<Result<Vec<_>, _>>()?,
        3 => linear_range(key, parse_number(key, parts[0])?, parse_number(key, parts[1])?, parse_number(key, parts[2])?)?,
        _ => {
            return Err(CliError::Config(format!(
                "--{key}: '{text}' is neither a comma list nor start:stop:step"
            )))
        }
    };
    if values.is_empty() {
        return Err(CliError::Config(format!("--{key}: grid is empty")));
    }
    Ok(values)
}

fn decade_exponent(key: &str, text: &str) -> Result<u32, CliError> {
    let value = parse_number(key, text)?;
    let exponent = value.log10().round();
    if !(value > 0.0) || (10f64.powf(exponent) - value).abs() > 1e-9 * value || exponent < 0.0 {
        return Err(CliError::Config(format!(
            "--{key}: decade range endpoints must be powers of ten, got '{text}'"
        )));
    }
    Ok(exponent as u32)
}

/// Integer grid: `n`, `a,b,c`, `start:stop:step`, or the decade shorthand
/// `1e2:1e6` meaning `100, 1000, ..., 1000000`.
pub fn parse_count_grid(key: &str, text: &str) -> Result<Vec<u32>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let values: Vec<u32> = match parts.len() {
        1 => text.split(',').map(|t| parse_count(key, t)).collect::<Result<_, _>>()?,
        2 => {
            let (a, b) = (decade_exponent(key, parts[0])?, decade_exponent(key, parts[1])?);
            if b < a || b > 9 {
                return Err(CliError::Config(format!("--{key}: decade range '{text}' is empty or too large")));
            }
            (a..=b).map(|e| 10u32.pow(e)).collect()
        }
        3 => {
            let (a, b, s) = (parse_count(key, parts[0])?, parse_count(key, parts[1])?, parse_count(key, parts[2])?);
            if s == 0 || b < a {
                return Err(CliError::Config(format!("--{key}: '{text}' needs a positive step and start <= stop")));
            }
            (a..=b).step_by(s as usize).collect()
        }
        _ => return Err(CliError::Config(format!("--{key}: malformed integer grid '{text}'"))),
    };
    if values.is_empty() {
        return Err(CliError::Config(format!("--{key}: grid is empty")));
    }
    Ok(values)
}

/// Signed integer list or `start:stop` / `start:stop:step` range.
pub fn parse_int_grid(key: &str, text: &str) -> Result<Vec<i32>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(|t| parse_int(key, t)).collect(),
        2 | 3 => {
            let a = parse_int(key, parts[0])?;
            let b = parse_int(key, parts[1])?;
            let s = if parts.len() == 3 { parse_int(key, parts[2])? } else { 1 };
            if s <= 0 || b < a {
                return Err(CliError::Config(format!("--{key}: '{text}' needs a positive step and start <= stop")));
            }
            Ok((a..=b).step_by(s as usize).collect())
        }
        _ => Err(CliError::Config(format!("--{key}: malformed integer grid '{text}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_ranges_are_inclusive_and_decimal() {
        let g = parse_real_grid("xi", "0:1:0.01").unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[7], 0.07);
        assert_eq!(g[100], 1.0);
        assert_eq!(parse_real_grid("xi", "0.3,0.9").unwrap(), vec![0.3, 0.9]);
        assert_eq!(parse_real_grid("xi", "0.5").unwrap(), vec![0.5]);
        assert!(parse_real_grid("xi", "0:1").is_err());
        assert!(parse_real_grid("xi", "1:0:0.1").is_err());
        assert!(parse_real_grid("xi", "0:1:0").is_err());
        assert!(parse_real_grid("xi", "0.5,abc").is_err());
    }

    #[test]
    fn decade_shorthand() {
        assert_eq!(parse_count_grid("N", "1e2:1e6").unwrap(), vec![100, 1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(parse_count_grid("N", "1e3").unwrap(), vec![1000]);
        assert_eq!(parse_count_grid("N", "100:400:100").unwrap(), vec![100, 200, 300, 400]);
        assert!(parse_count_grid("N", "2e2:1e6").is_err());
        assert!(parse_count_grid("N", "10.5").is_err());
        assert!(parse_count_grid("N", "-3").is_err());
    }

    #[test]
    fn integer_lists() {
        assert_eq!(parse_int_grid("l", "0:5").unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(parse_int_grid("l", "-2,0,2").unwrap(), vec![-2, 0, 2]);
        assert_eq!(parse_int_grid("l", "0:6:2").unwrap(), vec![0, 2, 4, 6]);
        assert!(parse_int_grid("l", "a").is_err());
    }
}
