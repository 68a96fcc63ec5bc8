//! Built-in bounded, uniformly continuous data functions `h` for the resolvent.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::point::StatePoint;

pub const DATA_BUILTINS: [&str; 3] = ["affine_clipped", "constant", "gaussian_bump"];

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum DataFunction {
    Constant { value: f64 },
    /// `clamp(slope x + intercept, lo, hi)`.
    AffineClipped { slope: f64, intercept: f64, lo: f64, hi: f64 },
    /// `amplitude exp(-(x - center)^2 / (2 width^2))`.
    GaussianBump { amplitude: f64, center: f64, width: f64 },
}

impl DataFunction {
    /// Parses `constant:K`, `affine_clipped:slope:intercept:lo:hi` or
    /// `gaussian_bump:amplitude:center:width`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.split(':');
        let name = parts.next().unwrap_or("");
        let args: Vec<f64> = parts
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in data function {spec:?}"))))
            .collect::<Result<_>>()?;
        if args.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("data function {spec:?} has non-finite parameters")));
        }
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("data function {name} takes {n} parameters, got {}", args.len())))
            }
        };
        let h = match name {
            "constant" => {
                want(1)?;
                DataFunction::Constant { value: args[0] }
            }
            "affine_clipped" => {
                want(4)?;
                if args[2] > args[3] {
                    return Err(Error::Config("affine_clipped needs lo <= hi".into()));
                }
                DataFunction::AffineClipped { slope: args[0], intercept: args[1], lo: args[2], hi: args[3] }
            }
            "gaussian_bump" => {
                want(3)?;
                if !(args[2] > 0.0) {
                    return Err(Error::Config("gaussian_bump needs width > 0".into()));
                }
                DataFunction::GaussianBump { amplitude: args[0], center: args[1], width: args[2] }
            }
            other => return Err(Error::Config(format!("unknown data function {other:?}"))),
        };
        Ok(h)
    }

    pub fn name(&self) -> String {
        match self {
            DataFunction::Constant { value } => format!("constant:{value}"),
            DataFunction::AffineClipped { slope, intercept, lo, hi } => format!("affine_clipped:{slope}:{intercept}:{lo}:{hi}"),
            DataFunction::GaussianBump { amplitude, center, width } => format!("gaussian_bump:{amplitude}:{center}:{width}"),
        }
    }

    pub fn eval_scalar(&self, x: f64) -> f64 {
        match *self {
            DataFunction::Constant { value } => value,
            DataFunction::AffineClipped { slope, intercept, lo, hi } => (slope * x + intercept).clamp(lo, hi),
            DataFunction::GaussianBump { amplitude, center, width } => {
                let z = (x - center) / width;
                amplitude * libm::exp(-0.5 * z * z)
            }
        }
    }

    /// Evaluates on the first coordinate.
    pub fn eval(&self, p: &StatePoint) -> f64 {
        self.eval_scalar(p.x())
    }

    pub fn shifted(&self, delta: f64) -> ShiftedData {
        ShiftedData { base: *self, delta }
    }
}

/// `h + delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftedData {
    pub base: DataFunction,
    pub delta: f64,
}

impl ShiftedData {
    pub fn eval(&self, p: &StatePoint) -> f64 {
        self.base.eval(p) + self.delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let h = DataFunction::parse("affine_clipped:1:0:-10:2").unwrap();
        assert_eq!(h.eval_scalar(1.5), 1.5);
        assert_eq!(h.eval_scalar(3.0), 2.0);
        assert_eq!(DataFunction::parse("constant:3").unwrap().eval_scalar(7.0), 3.0);
        let g = DataFunction::parse("gaussian_bump:2:1:0.5").unwrap();
        assert!((g.eval_scalar(1.0) - 2.0).abs() < 1e-15);
        assert_eq!(DataFunction::parse(&g.name()).unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        assert!(DataFunction::parse("constant").is_err());
        assert!(DataFunction::parse("constant:x").is_err());
        assert!(DataFunction::parse("gaussian_bump:1:0:0").is_err());
        assert!(DataFunction::parse("affine_clipped:1:0:3:2").is_err());
        assert!(DataFunction::parse("bogus:1").is_err());
    }
}
