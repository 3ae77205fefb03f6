//! Static description of the field.

use serde::{Deserialize, Serialize};

use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resistance {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NitrogenStrategy {
    Normal,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoilType {
    Sandy,
    Loam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantDensity {
    Low,
    Normal,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CultivationFactors {
    pub variety_resistance: Resistance,
    pub nitrogen_strategy: NitrogenStrategy,
    pub soil_type: SoilType,
    pub plant_density: PlantDensity,
}

impl Default for CultivationFactors {
    fn default() -> Self {
        Self {
            variety_resistance: Resistance::Medium,
            nitrogen_strategy: NitrogenStrategy::Normal,
            soil_type: SoilType::Loam,
            plant_density: PlantDensity::Normal,
        }
    }
}

impl CultivationFactors {
    /// Index of the basic protection level: the level nearest the variety's
    /// resistance value, lowered for a high nitrogen strategy.
    pub fn basic_protection(&self, params: &Params) -> usize {
        let lookups = &params.cultivation;
        let value = lookups.resistance_protection[self.variety_resistance as usize];
        let levels = &params.schema.basic_levels;
        let nearest = (0..levels.len())
            .min_by(|&a, &b| (levels[a] - value).abs().total_cmp(&(levels[b] - value).abs()))
            .expect("at least one level");
        match self.nitrogen_strategy {
            NitrogenStrategy::High => nearest.saturating_sub(lookups.high_nitrogen_protection_shift),
            NitrogenStrategy::Normal => nearest,
        }
    }

    /// Crop structure index: open, normal or dense.
    pub fn crop_structure(&self, params: &Params) -> usize {
        let lookups = &params.cultivation;
        let mut s = lookups.density_structure[self.plant_density as usize] as i32;
        if self.nitrogen_strategy == NitrogenStrategy::High {
            s += lookups.high_nitrogen_structure_shift;
        }
        if self.soil_type == SoilType::Sandy {
            s += lookups.sandy_soil_structure_shift;
        }
        s.clamp(0, 2) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        let p = Params::default();
        let mut c = CultivationFactors::default();
        assert_eq!(c.basic_protection(&p), 3);
        assert_eq!(c.crop_structure(&p), 1);
        c.variety_resistance = Resistance::High;
        c.nitrogen_strategy = NitrogenStrategy::High;
        assert_eq!(c.basic_protection(&p), 4);
        assert_eq!(c.crop_structure(&p), 2);
        c.variety_resistance = Resistance::Low;
        c.soil_type = SoilType::Sandy;
        c.nitrogen_strategy = NitrogenStrategy::Normal;
        assert_eq!(c.basic_protection(&p), 1);
        assert_eq!(c.crop_structure(&p), 0);
    }

    #[test]
    fn serde_uses_lowercase() {
        let c: CultivationFactors = serde_json::from_str(
            r#"{"variety_resistance":"high","nitrogen_strategy":"normal","soil_type":"sandy","plant_density":"low"}"#,
        )
        .unwrap();
        assert_eq!(c.variety_resistance, Resistance::High);
        assert_eq!(c.plant_density, PlantDensity::Low);
    }
}
