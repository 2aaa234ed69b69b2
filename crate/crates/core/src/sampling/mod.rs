//! Training-set construction: passive Style-I/II sets, active feedback sets,
//! embedding-space augmentation and the pairing graph.

mod active;
mod kmeans;
mod pairs;
mod passive;

pub use active::{dspn_feedback_sets, target_feedback_sets};
pub use kmeans::{kmeans, KMeans};
pub use pairs::{augment, build_pairs, load_pairs, save_pairs, Pair, PairDataset};
pub use passive::{sample_style1, sample_style2};

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Style1Hom,
    Style1Het,
    Style2Hom,
    Style2Het,
    DspnMax,
    DspnMin,
    TargetMax,
}

pub const ALL_PROVENANCE: [Provenance; 7] = [
    Provenance::Style1Hom,
    Provenance::Style1Het,
    Provenance::Style2Hom,
    Provenance::Style2Het,
    Provenance::DspnMax,
    Provenance::DspnMin,
    Provenance::TargetMax,
];

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Style1Hom => "style1-hom",
            Provenance::Style1Het => "style1-het",
            Provenance::Style2Hom => "style2-hom",
            Provenance::Style2Het => "style2-het",
            Provenance::DspnMax => "dspn-max",
            Provenance::DspnMin => "dspn-min",
            Provenance::TargetMax => "target-max",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_PROVENANCE
            .iter()
            .copied()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown set provenance '{s}'")))
    }

    pub fn is_active(self) -> bool {
        matches!(
            self,
            Provenance::DspnMax | Provenance::DspnMin | Provenance::TargetMax
        )
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledSet {
    pub items: Vec<usize>,
    pub provenance: Provenance,
    /// Classes the set was drawn from, when restricted.
    pub class_scope: Option<Vec<usize>>,
}

impl SampledSet {
    pub fn new(items: Vec<usize>, provenance: Provenance) -> Self {
        SampledSet {
            items,
            provenance,
            class_scope: None,
        }
    }

    pub fn scoped(items: Vec<usize>, provenance: Provenance, classes: Vec<usize>) -> Self {
        SampledSet {
            items,
            provenance,
            class_scope: Some(classes),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// `(E provenance, M provenance)` edges of the pairing graph.
pub fn default_edges() -> Vec<(Provenance, Provenance)> {
    use Provenance::*;
    vec![
        (DspnMax, Style1Hom),
        (DspnMax, Style2Hom),
        (DspnMax, DspnMin),
        (TargetMax, Style1Hom),
        (TargetMax, DspnMin),
        (Style1Het, Style1Hom),
        (Style2Het, Style2Hom),
    ]
}

/// Parse `a>b,c>d` into pairing edges.
pub fn parse_edges(s: &str) -> Result<Vec<(Provenance, Provenance)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (a, b) = t.split_once('>').ok_or_else(|| {
                Error::Config(format!("pairing edge '{t}' must look like e-kind>m-kind"))
            })?;
            Ok((Provenance::parse(a)?, Provenance::parse(b)?))
        })
        .collect()
}

pub fn format_edges(edges: &[(Provenance, Provenance)]) -> String {
    edges
        .iter()
        .map(|(a, b)| format!("{a}>{b}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Largest set size used in any pair.
    pub k_max: usize,
    /// Epochs between active-set refreshes.
    pub refresh_period: usize,
    pub style1_count: usize,
    pub style2_count: usize,
    /// Upper bound `C` for the number of classes in a Style-II draw; 0 means all.
    pub style2_classes: usize,
    /// Keep Style-II draws that collapse to a single class.
    pub keep_single_class_style2: bool,
    /// Number of budgets at which the learner is maximized/minimized per refresh.
    pub dspn_count: usize,
    pub target_count: usize,
    pub use_target_feedback: bool,
    pub noise_sigma: f64,
    pub max_pairs_per_edge: usize,
    pub kmeans_iters: usize,
    /// On an edge from a kind to itself, pair only sets of equal size.
    pub same_size_self_pairs: bool,
    pub edges: Vec<(Provenance, Provenance)>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            k_max: 20,
            refresh_period: 15,
            style1_count: 8,
            style2_count: 8,
            style2_classes: 0,
            keep_single_class_style2: true,
            dspn_count: 8,
            target_count: 8,
            use_target_feedback: true,
            noise_sigma: 0.01,
            max_pairs_per_edge: 64,
            kmeans_iters: 50,
            same_size_self_pairs: false,
            edges: default_edges(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(Error::Config(format!(
                "k-max must be ≥ 2, got {}",
                self.k_max
            )));
        }
        if self.refresh_period < 1 {
            return Err(Error::Config("refresh-period must be ≥ 1".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise-sigma must be ≥ 0, got {}",
                self.noise_sigma
            )));
        }
        if self.max_pairs_per_edge == 0 {
            return Err(Error::Config("max-pairs-per-edge must be ≥ 1".into()));
        }
        if self.edges.is_empty() {
            return Err(Error::Config("pairing graph has no edges".into()));
        }
        Ok(())
    }
}
