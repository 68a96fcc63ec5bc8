//! Named builtin integrands and potentials.
//!
//! Textual form is `name` or `name:param[:param]`, e.g. `entropy`, `power:2`,
//! `power:2:0.5`, `quadratic:1.5`, `quartic`, `zero`. No expression parsing.

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};

/// Convex potential on the real line, used as V, W, and the coordinatewise
/// perturbation F of the Hilbert-space energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    Zero,
    /// `k x^2 / 2`
    Quadratic { k: f64 },
    /// `c x^4 / 4`
    Quartic { c: f64 },
}

impl Potential {
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or("");
        let p = parse_params(parts, s)?;
        match (name, p.as_slice()) {
            ("zero", []) => Ok(Potential::Zero),
            ("quadratic", []) => Ok(Potential::Quadratic { k: 1.0 }),
            ("quadratic", [k]) => Ok(Potential::Quadratic { k: *k }),
            ("quartic", []) => Ok(Potential::Quartic { c: 1.0 }),
            ("quartic", [c]) => Ok(Potential::Quartic { c: *c }),
            _ => Err(Error::Config(format!("unknown potential `{s}`"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Potential::Zero => "zero".into(),
            Potential::Quadratic { k } => format!("quadratic:{k}"),
            Potential::Quartic { c } => format!("quartic:{c}"),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Quadratic { k } => 0.5 * k * x * x,
            Potential::Quartic { c } => 0.25 * c * x * x * x * x,
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Quadratic { k } => k * x,
            Potential::Quartic { c } => c * x * x * x,
        }
    }

    /// Global lower bound of the second derivative.
    pub fn convexity_modulus(&self) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Quadratic { k } => k,
            Potential::Quartic { c } => {
                if c >= 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    /// Sampled check that second differences stay above `kappa - tol` on `[-r, r]`.
    pub fn sampled_convexity_ok(&self, kappa: f64, r: f64) -> bool {
        let h = 1e-3 * r.max(1.0);
        (0..=400).all(|i| {
            let x = -r + 2.0 * r * i as f64 / 400.0;
            let sd = (self.value(x + h) - 2.0 * self.value(x) + self.value(x - h)) / (h * h);
            sd >= kappa - 1e-6 * (1.0 + sd.abs())
        })
    }
}

/// Internal-energy integrand `F` of the Wasserstein energy `int F(rho)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrand {
    Zero,
    /// `s log s`
    Entropy,
    /// `coefficient * s^exponent`
    Power { exponent: f64, coefficient: f64 },
}

impl Integrand {
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or("");
        let p = parse_params(parts, s)?;
        match (name, p.as_slice()) {
            ("zero", []) => Ok(Integrand::Zero),
            ("entropy", []) => Ok(Integrand::Entropy),
            ("power", [a]) => Ok(Integrand::Power { exponent: *a, coefficient: 1.0 }),
            ("power", [a, c]) => Ok(Integrand::Power { exponent: *a, coefficient: *c }),
            // F(s) = s^2 under the name used for the Hilbert potentials
            ("quadratic", []) => Ok(Integrand::Power { exponent: 2.0, coefficient: 1.0 }),
            _ => Err(Error::Config(format!("unknown internal-energy integrand `{s}`"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Integrand::Zero => "zero".into(),
            Integrand::Entropy => "entropy".into(),
            Integrand::Power { exponent, coefficient } => format!("power:{exponent}:{coefficient}"),
        }
    }

    /// `F(s)` for `s >= 0`.
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Integrand::Zero => 0.0,
            Integrand::Entropy => {
                if s == 0.0 {
                    0.0
                } else {
                    s * libm::log(s)
                }
            }
            Integrand::Power { exponent, coefficient } => coefficient * libm::pow(s, exponent),
        }
    }

    /// `g(q) = q F(1/q)`: the integrand in quantile coordinates, where `q` is
    /// the quantile derivative (reciprocal density).
    pub fn quantile_value(&self, q: f64) -> f64 {
        match *self {
            Integrand::Zero => 0.0,
            Integrand::Entropy => -libm::log(q),
            Integrand::Power { exponent, coefficient } => coefficient * libm::pow(q, 1.0 - exponent),
        }
    }

    pub fn quantile_deriv(&self, q: f64) -> f64 {
        match *self {
            Integrand::Zero => 0.0,
            Integrand::Entropy => -1.0 / q,
            Integrand::Power { exponent, coefficient } => coefficient * (1.0 - exponent) * libm::pow(q, -exponent),
        }
    }

    /// Superlinear integrands force absolute continuity: collapsed cells cost `+inf`.
    pub fn is_superlinear(&self) -> bool {
        match *self {
            Integrand::Zero => false,
            Integrand::Entropy => true,
            Integrand::Power { exponent, coefficient } => exponent > 1.0 && coefficient > 0.0,
        }
    }
}

fn parse_params<'a>(parts: impl Iterator<Item = &'a str>, whole: &str) -> Result<alloc::vec::Vec<f64>> {
    parts
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("bad numeric parameter `{t}` in `{whole}`")))
        })
        .collect()
}

/// Builtin names, for listings.
pub const POTENTIAL_BUILTINS: [&str; 5] = ["entropy", "power", "quadratic", "quartic", "zero"];
