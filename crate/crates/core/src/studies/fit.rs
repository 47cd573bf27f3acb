use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `log r = p log h + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    /// `+∞` when the residuals are exact.
    pub slope: f64,
    pub r_squared: f64,
    /// All (or all but one) residuals sat at or below the exactness floor.
    pub exact: bool,
    /// Number of pairs that entered the fit.
    pub points: usize,
}

impl OrderFit {
    /// Order at least `min_slope` with `r² ≥ min_r2`; exact residuals pass.
    pub fn meets(&self, min_slope: f64, min_r2: f64) -> bool {
        self.exact || (self.slope >= min_slope && self.r_squared >= min_r2)
    }
}

/// Fits the order of `residual ≈ C hᵖ`. Residuals at or below `floor` are
/// excluded as exact zeros.
pub fn fit_order(pairs: &[(f64, f64)], floor: f64) -> Result<OrderFit> {
    if pairs.len() < 4 {
        return Err(Error::param(format!("an order fit needs at least 4 pairs, got {}", pairs.len())));
    }
    if let Some((h, r)) = pairs.iter().find(|(h, r)| !(*h > 0.0 && h.is_finite() && *r >= 0.0 && r.is_finite())) {
        return Err(Error::param(format!("invalid fit pair ({h}, {r})")));
    }
    let logs: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(_, r)| *r > floor)
        .map(|(h, r)| (h.ln(), r.ln()))
        .collect();
    if logs.len() < 2 {
        return Ok(OrderFit {
            slope: f64::INFINITY,
            r_squared: 1.0,
            exact: true,
            points: logs.len(),
        });
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("an order fit needs distinct h values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(OrderFit {
        slope,
        r_squared,
        exact: false,
        points: logs.len(),
    })
}

/// Richardson extrapolation of `v(h) = v₀ + C hᵖ` from two step sizes.
pub fn richardson(h1: f64, v1: f64, h2: f64, v2: f64, order: f64) -> f64 {
    let ratio = (h1 / h2).powf(order);
    (ratio * v2 - v1) / (ratio - 1.0)
}
