//! State spaces of the time-step module and per-step variable naming.

use midas_engine::{DiscreteVariable, Var};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// The variables of one time-step frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    DiseaseLevelB,
    DiseaseObserv,
    PrevTreatment,
    PrevDose,
    Treatment,
    ProtectnConc,
    ProtectnLevel,
    NewLeafFract,
    BasicProtection,
    MeanProtectn,
    ClimateEffect,
    CropStructure,
    GrowthRate,
    DiseaseLevelA,
    YieldLossPct,
}

impl Node {
    pub const ALL: [Node; 15] = [
        Node::DiseaseLevelB,
        Node::DiseaseObserv,
        Node::PrevTreatment,
        Node::PrevDose,
        Node::Treatment,
        Node::ProtectnConc,
        Node::ProtectnLevel,
        Node::NewLeafFract,
        Node::BasicProtection,
        Node::MeanProtectn,
        Node::ClimateEffect,
        Node::CropStructure,
        Node::GrowthRate,
        Node::DiseaseLevelA,
        Node::YieldLossPct,
    ];

    pub fn base(self) -> &'static str {
        match self {
            Node::DiseaseLevelB => "DiseaseLevelB",
            Node::DiseaseObserv => "DiseaseObserv",
            Node::PrevTreatment => "PrevTreatment",
            Node::PrevDose => "PrevDose",
            Node::Treatment => "Treatment",
            Node::ProtectnConc => "ProtectnConc",
            Node::ProtectnLevel => "ProtectnLevel",
            Node::NewLeafFract => "NewLeafFract",
            Node::BasicProtection => "BasicProtection",
            Node::MeanProtectn => "MeanProtectn",
            Node::ClimateEffect => "ClimateEffect",
            Node::CropStructure => "CropStructure",
            Node::GrowthRate => "GrowthRate",
            Node::DiseaseLevelA => "DiseaseLevelA",
            Node::YieldLossPct => "YieldLossPct",
        }
    }

    /// Name of this variable at step `k`.
    pub fn at(self, k: usize) -> String {
        format!("{}_{k}", self.base())
    }
}

pub fn cost_node(k: usize) -> String {
    format!("Cost_{k}")
}

pub fn loss_node(k: usize) -> String {
    format!("Loss_{k}")
}

pub const CLIMATE_LABELS: [&str; 3] = ["unfavourable", "neutral", "favourable"];
pub const STRUCTURE_LABELS: [&str; 3] = ["open", "normal", "dense"];
pub const PREV_TREATMENT_LABELS: [&str; 4] = ["never", "1", "2", ">=3"];

/// Coarse severity bands an advisor may report from a field walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeverityBand {
    #[serde(rename = "0-2")]
    Low,
    #[serde(rename = "2-20")]
    Medium,
    #[serde(rename = "20-100")]
    High,
}

impl SeverityBand {
    pub const ALL: [SeverityBand; 3] = [SeverityBand::Low, SeverityBand::Medium, SeverityBand::High];

    /// Severity range in percent.
    pub fn range(self) -> (f64, f64) {
        match self {
            SeverityBand::Low => (0.0, 2.0),
            SeverityBand::Medium => (2.0, 20.0),
            SeverityBand::High => (20.0, 100.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SeverityBand::Low => "0-2",
            SeverityBand::Medium => "2-20",
            SeverityBand::High => "20-100",
        }
    }

    pub fn of(severity: f64) -> SeverityBand {
        if severity < 2.0 {
            SeverityBand::Low
        } else if severity < 20.0 {
            SeverityBand::Medium
        } else {
            SeverityBand::High
        }
    }
}

/// Bin edges and label sets for every frame variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSchema {
    pub max_steps: usize,
    /// Treatment alternatives as fractions of the label dose.
    pub doses: Vec<f64>,
    /// Disease severity, % of green leaf area.
    pub severity_edges: Vec<f64>,
    /// Fraction of plants with symptoms.
    pub incidence_edges: Vec<f64>,
    /// Multiplicative disease growth per thermal week.
    pub growth_edges: Vec<f64>,
    pub concentration_edges: Vec<f64>,
    pub protection_level_edges: Vec<f64>,
    pub new_leaf_edges: Vec<f64>,
    /// Point values of the basic protection levels.
    pub basic_levels: Vec<f64>,
    pub mean_protection_edges: Vec<f64>,
    /// Relative yield loss within one step, %.
    pub yield_loss_edges: Vec<f64>,
}

impl Default for StateSchema {
    fn default() -> Self {
        Self {
            max_steps: 20,
            doses: vec![0.0, 0.25, 0.5, 1.0],
            severity_edges: vec![0.0, 0.01, 0.1, 0.5, 2.0, 5.0, 20.0, 100.0],
            incidence_edges: vec![0.0, 0.1, 0.5, 0.9, 1.0],
            growth_edges: vec![0.0, 0.6, 0.9, 1.2, 1.8, 4.0],
            concentration_edges: vec![0.0, 0.05, 0.2, 0.5, 1.0, 2.0],
            protection_level_edges: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            new_leaf_edges: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            basic_levels: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            mean_protection_edges: vec![0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 1.0],
            yield_loss_edges: vec![0.0, 0.05, 0.25, 1.0, 3.0, 10.0, 40.0],
        }
    }
}

fn check_edges(name: &str, edges: &[f64]) -> Result<()> {
    let ok = edges.len() >= 2 && edges.iter().all(|x| x.is_finite()) && edges.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(CoreError::Schema(format!("{name}: edges must be finite, strictly increasing, at least two")))
    }
}

fn check_points(name: &str, points: &[f64], lo: f64, hi: f64) -> Result<()> {
    let ok = !points.is_empty()
        && points.iter().all(|&x| (lo..=hi).contains(&x))
        && points.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(CoreError::Schema(format!("{name}: values must be strictly increasing within [{lo}, {hi}]")))
    }
}

impl StateSchema {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 || self.max_steps > 20 {
            return Err(CoreError::Schema("max_steps must be within 1..=20".into()));
        }
        check_points("doses", &self.doses, 0.0, 1.0)?;
        if self.doses[0] != 0.0 {
            return Err(CoreError::Schema("the first dose must be 0 (no treatment)".into()));
        }
        check_points("basic_levels", &self.basic_levels, 0.0, 1.0)?;
        for (name, edges) in self.edge_sets() {
            check_edges(name, edges)?;
        }
        let unit = |name: &str, e: &[f64]| {
            if e[0] < 0.0 || *e.last().unwrap() > 1.0 {
                Err(CoreError::Schema(format!("{name}: edges must lie within [0, 1]")))
            } else {
                Ok(())
            }
        };
        unit("incidence_edges", &self.incidence_edges)?;
        unit("protection_level_edges", &self.protection_level_edges)?;
        unit("new_leaf_edges", &self.new_leaf_edges)?;
        unit("mean_protection_edges", &self.mean_protection_edges)?;
        if self.severity_edges[0] != 0.0 || *self.severity_edges.last().unwrap() > 100.0 {
            return Err(CoreError::Schema("severity_edges must start at 0 and end at most 100".into()));
        }
        Ok(())
    }

    fn edge_sets(&self) -> [(&'static str, &[f64]); 8] {
        [
            ("severity_edges", &self.severity_edges),
            ("incidence_edges", &self.incidence_edges),
            ("growth_edges", &self.growth_edges),
            ("concentration_edges", &self.concentration_edges),
            ("protection_level_edges", &self.protection_level_edges),
            ("new_leaf_edges", &self.new_leaf_edges),
            ("mean_protection_edges", &self.mean_protection_edges),
            ("yield_loss_edges", &self.yield_loss_edges),
        ]
    }

    /// Bin edges of a binned node, `None` for labelled nodes.
    pub fn edges(&self, node: Node) -> Option<&[f64]> {
        Some(match node {
            Node::DiseaseLevelB | Node::DiseaseLevelA => &self.severity_edges,
            Node::DiseaseObserv => &self.incidence_edges,
            Node::GrowthRate => &self.growth_edges,
            Node::ProtectnConc => &self.concentration_edges,
            Node::ProtectnLevel => &self.protection_level_edges,
            Node::NewLeafFract => &self.new_leaf_edges,
            Node::MeanProtectn => &self.mean_protection_edges,
            Node::YieldLossPct => &self.yield_loss_edges,
            _ => return None,
        })
    }

    pub fn labels(&self, node: Node) -> Vec<String> {
        if let Some(edges) = self.edges(node) {
            return edges.windows(2).map(|w| format!("{}-{}", w[0], w[1])).collect();
        }
        match node {
            Node::Treatment | Node::PrevDose => self.doses.iter().map(|d| d.to_string()).collect(),
            Node::BasicProtection => self.basic_levels.iter().map(|d| d.to_string()).collect(),
            Node::ClimateEffect => CLIMATE_LABELS.iter().map(|s| s.to_string()).collect(),
            Node::CropStructure => STRUCTURE_LABELS.iter().map(|s| s.to_string()).collect(),
            Node::PrevTreatment => PREV_TREATMENT_LABELS.iter().map(|s| s.to_string()).collect(),
            _ => unreachable!("binned nodes are handled above"),
        }
    }

    pub fn cardinality(&self, node: Node) -> usize {
        match self.edges(node) {
            Some(e) => e.len() - 1,
            None => self.labels(node).len(),
        }
    }

    /// The engine variable for `node` at step `k`.
    pub fn var(&self, node: Node, k: usize) -> Var {
        DiscreteVariable::shared(node.at(k), &self.labels(node)).expect("schema labels are unique")
    }

    /// Representative severity of each severity bin.
    pub fn severity_midpoints(&self) -> Vec<f64> {
        midpoints(&self.severity_edges)
    }

    pub fn yield_loss_midpoints(&self) -> Vec<f64> {
        midpoints(&self.yield_loss_edges)
    }

    pub fn severity_bin(&self, severity: f64) -> usize {
        bin_of(&self.severity_edges, severity).0
    }

    /// Indicator over severity bins of those lying inside `band`. A bin is
    /// inside when its midpoint is.
    pub fn band_mask(&self, band: SeverityBand) -> Vec<f64> {
        let (lo, hi) = band.range();
        self.severity_midpoints()
            .into_iter()
            .map(|m| if m >= lo && (m < hi || (hi == 100.0 && m <= hi)) { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Geometric midpoints for bins with a positive lower edge, arithmetic
/// midpoints otherwise.
pub fn midpoints(edges: &[f64]) -> Vec<f64> {
    edges
        .windows(2)
        .map(|w| if w[0] > 0.0 { (w[0] * w[1]).sqrt() } else { 0.5 * (w[0] + w[1]) })
        .collect()
}

/// Bin index of `v` and whether it had to be clamped into the range.
/// Bins are half-open except the last, which includes its upper edge.
pub fn bin_of(edges: &[f64], v: f64) -> (usize, bool) {
    let last = edges.len() - 2;
    if v < edges[0] {
        return (0, true);
    }
    if v > edges[last + 1] {
        return (last, true);
    }
    let i = edges[1..=last].partition_point(|&e| e <= v);
    (i, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_is_valid() {
        let s = StateSchema::default();
        s.validate().unwrap();
        assert_eq!(s.cardinality(Node::DiseaseLevelB), 7);
        assert_eq!(s.cardinality(Node::DiseaseObserv), 4);
        assert_eq!(s.cardinality(Node::GrowthRate), 5);
        assert_eq!(s.cardinality(Node::BasicProtection), 6);
        assert_eq!(s.cardinality(Node::MeanProtectn), 6);
        assert_eq!(s.cardinality(Node::ProtectnLevel), 4);
        assert_eq!(s.cardinality(Node::ProtectnConc), 5);
        assert_eq!(s.cardinality(Node::NewLeafFract), 4);
        assert_eq!(s.cardinality(Node::YieldLossPct), 6);
        assert_eq!(s.cardinality(Node::PrevTreatment), 4);
    }

    #[test]
    fn binning_is_half_open_with_closed_top() {
        let e = [0.0, 1.0, 2.0];
        assert_eq!(bin_of(&e, 0.0), (0, false));
        assert_eq!(bin_of(&e, 1.0), (1, false));
        assert_eq!(bin_of(&e, 2.0), (1, false));
        assert_eq!(bin_of(&e, 2.5), (1, true));
        assert_eq!(bin_of(&e, -0.1), (0, true));
    }

    #[test]
    fn midpoints_are_geometric_for_log_bins() {
        let m = StateSchema::default().severity_midpoints();
        assert_eq!(m[0], 0.005);
        assert!((m[4] - 10f64.sqrt()).abs() < 1e-12);
        assert!((m[5] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn band_masks_partition_the_bins() {
        let s = StateSchema::default();
        let total: Vec<f64> = SeverityBand::ALL.iter().fold(vec![0.0; 7], |acc, &b| {
            acc.iter().zip(s.band_mask(b)).map(|(a, m)| a + m).collect()
        });
        assert_eq!(total, vec![1.0; 7]);
        assert_eq!(s.band_mask(SeverityBand::Low), vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_edges() {
        let mut s = StateSchema::default();
        s.growth_edges = vec![0.0, 1.0, 1.0];
        assert!(s.validate().is_err());
        let mut s = StateSchema::default();
        s.max_steps = 25;
        assert!(s.validate().is_err());
    }
}
