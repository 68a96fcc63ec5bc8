//! Jensen-type bound on chained squared distances:
//! `1/6 1/(1-e') d^2(n1,n4)/2 <= 1/(1-e) d^2(n1,n2)/2 + d^2(n2,n3)/2 + 1/(1+e) d^2(n3,n4)/2`.

use alloc::format;

use crate::error::{usage, Result};
use crate::point::StatePoint;
use crate::space::Space;

fn check_eps(e: f64) -> Result<()> {
    if e > 0.0 && e < 1.0 / 3.0 {
        Ok(())
    } else {
        Err(usage(format!("eps = {e} must lie in (0, 1/3)")))
    }
}

/// Max of left minus right side over all quadruples and all `(eps, eps')` pairs.
pub fn jensen_distance_check(space: &dyn Space, samples: &[[StatePoint; 4]], eps: &[f64], eps_prime: &[f64]) -> Result<f64> {
    for &e in eps.iter().chain(eps_prime) {
        check_eps(e)?;
    }
    let mut worst = f64::NEG_INFINITY;
    for [n1, n2, n3, n4] in samples {
        let h = |a, b| -> Result<f64> {
            let d = space.distance(a, b)?;
            Ok(0.5 * d * d)
        };
        let (h14, h12, h23, h34) = (h(n1, n4)?, h(n1, n2)?, h(n2, n3)?, h(n3, n4)?);
        for &e in eps {
            let rhs = h12 / (1.0 - e) + h23 + h34 / (1.0 + e);
            for &ep in eps_prime {
                worst = worst.max(h14 / (6.0 * (1.0 - ep)) - rhs);
            }
        }
    }
    Ok(worst)
}
