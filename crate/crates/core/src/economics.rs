//! Monetary utilities of a step: treatment cost and value of yield loss.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Farm economics per hectare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    /// t/ha.
    pub expected_yield: f64,
    /// Currency per tonne.
    pub grain_price: f64,
    /// Currency per hectare at the label dose.
    pub fungicide_cost_per_label_dose: f64,
    /// Currency per hectare per spraying.
    pub spray_operation_cost: f64,
}

impl Default for Economics {
    fn default() -> Self {
        Self { expected_yield: 8.0, grain_price: 150.0, fungicide_cost_per_label_dose: 40.0, spray_operation_cost: 15.0 }
    }
}

impl Economics {
    pub fn validate(&self) -> Result<()> {
        let all = [self.expected_yield, self.grain_price, self.fungicide_cost_per_label_dose, self.spray_operation_cost];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(CoreError::Invalid("economic values must be finite and nonnegative".into()))
        }
    }

    /// Every monetary amount multiplied by `c`, as under a change of
    /// currency. The yield, a physical quantity, is unchanged.
    pub fn in_currency(&self, c: f64) -> Self {
        Self {
            expected_yield: self.expected_yield,
            grain_price: self.grain_price * c,
            fungicide_cost_per_label_dose: self.fungicide_cost_per_label_dose * c,
            spray_operation_cost: self.spray_operation_cost * c,
        }
    }

    /// All four inputs multiplied by `c`. The value of a yield loss then
    /// grows with `c²` while treatment costs grow with `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            expected_yield: self.expected_yield * c,
            grain_price: self.grain_price * c,
            fungicide_cost_per_label_dose: self.fungicide_cost_per_label_dose * c,
            spray_operation_cost: self.spray_operation_cost * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilitySpec {
    pub economics: Economics,
}

impl UtilitySpec {
    pub fn new(economics: Economics) -> Self {
        Self { economics }
    }

    pub fn cost(&self, dose: f64) -> f64 {
        if dose == 0.0 {
            0.0
        } else {
            self.economics.spray_operation_cost + dose * self.economics.fungicide_cost_per_label_dose
        }
    }

    pub fn loss_value(&self, yield_loss_pct: f64) -> f64 {
        yield_loss_pct / 100.0 * self.economics.expected_yield * self.economics.grain_price
    }

    /// Utility table entries for the treatment alternatives.
    pub fn cost_utilities(&self, doses: &[f64]) -> Vec<f64> {
        doses.iter().map(|&d| -self.cost(d)).collect()
    }

    /// Utility table entries for yield-loss bins represented by `midpoints`.
    pub fn loss_utilities(&self, midpoints: &[f64]) -> Vec<f64> {
        midpoints.iter().map(|&m| -self.loss_value(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_and_loss() {
        let u = UtilitySpec::new(Economics::default());
        assert_eq!(u.cost(0.0), 0.0);
        assert_eq!(u.cost(0.5), 35.0);
        assert!(u.cost(0.25) < u.cost(0.5) && u.cost(0.5) < u.cost(1.0));
        assert_eq!(u.loss_value(1.0), 12.0);
        assert_eq!(u.loss_value(3.0), 3.0 * u.loss_value(1.0));
    }

    #[test]
    fn currency_change_scales_utilities_linearly() {
        let e = Economics::default();
        let (u, v) = (UtilitySpec::new(e), UtilitySpec::new(e.in_currency(3.0)));
        assert!((v.cost(0.5) - 3.0 * u.cost(0.5)).abs() < 1e-12);
        assert!((v.loss_value(2.0) - 3.0 * u.loss_value(2.0)).abs() < 1e-12);
        let w = UtilitySpec::new(e.scaled(3.0));
        assert!((w.loss_value(2.0) - 9.0 * u.loss_value(2.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_negative_values() {
        let e = Economics { grain_price: -1.0, ..Economics::default() };
        assert!(e.validate().is_err());
    }
}
