//! Closed-form quantification models. Severities are in percent of green
//! leaf area, times in thermal weeks, doses in fractions of the label dose.

use crate::error::{CoreError, Result};
use crate::params::QuantificationParameters;

/// Kill fraction of a treatment.
pub fn dose_efficacy(q: &QuantificationParameters, dose: f64) -> Result<f64> {
    if !(dose >= 0.0) {
        return Err(CoreError::Invalid(format!("dose must be nonnegative, got {dose}")));
    }
    Ok(q.efficacy_max * dose / (dose + q.dose_half))
}

pub fn disease_step(severity: f64, growth_rate: f64, delta_tau: f64) -> f64 {
    (severity * growth_rate.powf(delta_tau)).min(100.0)
}

pub fn growth_rate(q: &QuantificationParameters, climate: usize, structure: usize, mean_protection: f64) -> f64 {
    (q.r_base * q.climate_multipliers[climate] * q.structure_multipliers[structure] * (1.0 - mean_protection)).max(0.0)
}

pub fn mean_protection(basic: f64, protectant: f64, new_leaf_fract: f64) -> f64 {
    new_leaf_fract * basic + (1.0 - new_leaf_fract) * basic.max(protectant)
}

pub fn protectant_decay(q: &QuantificationParameters, conc: f64, delta_tau: f64, new_dose: f64) -> f64 {
    conc * (-q.decay_lambda * delta_tau).exp() + new_dose
}

/// Protection afforded by a protectant concentration.
pub fn protection_level(q: &QuantificationParameters, conc: f64) -> f64 {
    q.protection_max * conc / (conc + q.protection_half)
}

/// Fraction of the canopy that emerged during `weeks` thermal weeks.
pub fn new_leaf_fraction(emergence_rate: f64, weeks: f64) -> f64 {
    1.0 - (1.0 - emergence_rate).powf(weeks)
}

pub fn incidence_from_severity(q: &QuantificationParameters, severity: f64) -> f64 {
    1.0 - (-q.incidence_k * severity / 100.0).exp()
}

pub fn yield_loss_pct(q: &QuantificationParameters, severity: f64, delta_tau: f64) -> f64 {
    (q.loss_coeff * severity * delta_tau).min(100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuantificationParameters {
        QuantificationParameters::default()
    }

    #[test]
    fn efficacy_values() {
        assert_eq!(dose_efficacy(&q(), 0.0).unwrap(), 0.0);
        assert!((dose_efficacy(&q(), 0.15).unwrap() - 0.475).abs() < 1e-12);
        assert!((dose_efficacy(&q(), 1.0).unwrap() - 0.95 / 1.15).abs() < 1e-12);
        assert!((dose_efficacy(&q(), 1.0).unwrap() - 0.826).abs() < 1e-3);
        assert!(dose_efficacy(&q(), -0.1).is_err());
    }

    #[test]
    fn disease_step_values() {
        assert_eq!(disease_step(0.0, 3.7, 1.0), 0.0);
        assert_eq!(disease_step(4.2, 1.0, 2.5), 4.2);
        assert_eq!(disease_step(2.0, 3.0, 1.0), 6.0);
        assert_eq!(disease_step(60.0, 2.0, 1.0), 100.0);
    }

    #[test]
    fn growth_rate_values() {
        let q = q();
        assert_eq!(growth_rate(&q, 1, 1, 1.0), 0.0);
        assert_eq!(growth_rate(&q, 1, 1, 0.0), q.r_base);
        let expected = q.r_base * q.climate_multipliers[2] * q.structure_multipliers[1] * 0.7;
        assert!((growth_rate(&q, 2, 1, 0.3) - expected).abs() < 1e-12);
    }

    #[test]
    fn mean_protection_values() {
        assert_eq!(mean_protection(0.3, 0.8, 1.0), 0.3);
        assert_eq!(mean_protection(0.3, 0.8, 0.0), 0.8);
        assert!((mean_protection(0.3, 0.8, 0.25) - 0.675).abs() < 1e-12);
    }

    #[test]
    fn decay_values() {
        let q = q();
        assert_eq!(protectant_decay(&q, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(protectant_decay(&q, 0.7, 0.0, 0.25), 0.95);
        assert!((protectant_decay(&q, 1.0, 1.0, 0.0) - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn incidence_values() {
        let q = q();
        assert_eq!(incidence_from_severity(&q, 0.0), 0.0);
        assert!((incidence_from_severity(&q, 2.0) - 0.98).abs() < 1e-12);
        assert!((q.incidence_k - 195.6).abs() < 0.05);
        assert!(incidence_from_severity(&q, 100.0) > 1.0 - 1e-12);
    }

    #[test]
    fn yield_loss_values() {
        let q = q();
        assert_eq!(yield_loss_pct(&q, 0.0, 1.0), 0.0);
        assert_eq!(yield_loss_pct(&q, 30.0, 0.0), 0.0);
        assert!((yield_loss_pct(&q, 5.0, 1.0) - 2.0).abs() < 1e-12);
    }
}
