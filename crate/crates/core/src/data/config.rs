use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::SyntheticSpec;
use crate::error::{Error, Result};
use crate::loss::{LossKind, PeripteralHyper};
use crate::model::{Concave, ModelConfig, PillarOutput};
use crate::sampling::{format_edges, parse_edges, SamplerConfig};
use crate::setfn::Matroid;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeyKind {
    /// Integer with an inclusive lower bound.
    Int {
        min: u64,
    },
    /// Real with a lower bound, exclusive when `strict`.
    Real {
        min: f64,
        strict: bool,
    },
    Bool,
    /// Free-form text checked by the owning builder.
    Text,
}

#[derive(Debug, Clone, Copy)]
pub struct ConfigKey {
    pub key: &'static str,
    pub kind: KeyKind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn int(key: &'static str, min: u64, default: &'static str, help: &'static str) -> ConfigKey {
    ConfigKey {
        key,
        kind: KeyKind::Int { min },
        default,
        help,
    }
}

const fn real(
    key: &'static str,
    min: f64,
    strict: bool,
    default: &'static str,
    help: &'static str,
) -> ConfigKey {
    ConfigKey {
        key,
        kind: KeyKind::Real { min, strict },
        default,
        help,
    }
}

const fn flag(key: &'static str, default: &'static str, help: &'static str) -> ConfigKey {
    ConfigKey {
        key,
        kind: KeyKind::Bool,
        default,
        help,
    }
}

const fn text(key: &'static str, default: &'static str, help: &'static str) -> ConfigKey {
    ConfigKey {
        key,
        kind: KeyKind::Text,
        default,
        help,
    }
}

const INF: f64 = f64::NEG_INFINITY;

pub const SCHEMA: &[ConfigKey] = &[
    int("seed", 0, "0", "master seed"),
    // synthetic data
    int("clusters", 1, "5", "number of synthetic clusters"),
    int("per-cluster", 1, "100", "points per synthetic cluster"),
    int("dim", 1, "2", "embedding dimension"),
    real("cluster-spread", 0.0, true, "1", "standard deviation of points around a center"),
    real("center-spread", 0.0, true, "10", "standard deviation of cluster centers"),
    real("zipf-s", 0.0, true, "1", "Zipf exponent for duplicate counts"),
    int("zipf-base", 0, "100", "duplicates added to the most popular class"),
    // model
    text("pillar-hidden", "32,32", "pillar hidden widths, comma separated"),
    int("d", 1, "32", "pillar output width"),
    text("roof-hidden", "10", "roof hidden widths, comma separated (may be empty)"),
    text("activations", "identity,sqrt,log1p,tanh,one_minus_exp", "allowed roof activations"),
    text("matroid", "free", "aggregation matroid: free | uniform:<k>"),
    text("pillar-output", "softplus", "pillar output map: softplus | clamp"),
    // loss
    text("loss", "peripteral", "training loss: peripteral | regression | margin"),
    real("alpha", 0.0, false, "1e-5", "gate rate"),
    real("beta", 0.0, true, "0.5", "anti-smoothness"),
    real("tau", INF, false, "10", "margin"),
    real("kappa", 0.0, true, "1", "oracle-to-learner unit scale"),
    real("epsilon", 0.0, false, "1e-15", "denominator guard"),
    real("lambda1", 0.0, false, "0.25", "set-level augmentation weight"),
    real("lambda2", 0.0, false, "0.01", "element-level augmentation weight"),
    real("lambda3", 0.0, false, "0", "set-level redundancy weight"),
    real("lambda4", 0.0, false, "0", "element-level redundancy weight"),
    // sampler
    int("k-max", 2, "20", "largest set size in a training pair"),
    int("refresh-period", 1, "15", "epochs between active-set refreshes"),
    int("style1-count", 0, "8", "Style-I draws per dataset"),
    int("style2-count", 0, "8", "Style-II draws per dataset"),
    int("style2-classes", 0, "0", "class bound C for Style-II (0 = all classes)"),
    flag("keep-single-class", "true", "keep Style-II draws confined to one class"),
    int("dspn-count", 0, "8", "model-feedback budgets per refresh"),
    int("target-count", 0, "8", "target-feedback sets"),
    flag("target-feedback", "true", "include target-maximizing sets"),
    real("noise-sigma", 0.0, false, "0.01", "augmentation jitter"),
    int("max-pairs-per-edge", 1, "64", "cap on pairs per pairing-graph edge"),
    flag("same-size-self-pairs", "false", "self edges pair only sets of equal size"),
    int("kmeans-iters", 1, "50", "Lloyd iterations for Style-II"),
    text(
        "edges",
        "dspn-max>style1-hom,dspn-max>style2-hom,dspn-max>dspn-min,target-max>style1-hom,target-max>dspn-min,style1-het>style1-hom,style2-het>style2-hom",
        "pairing graph edges e-kind>m-kind",
    ),
    // trainer
    real("base-lr", 0.0, true, "0.001", "cyclic learning-rate floor"),
    real("max-lr", 0.0, true, "0.01", "cyclic learning-rate peak"),
    int("cycle-length", 2, "200", "steps per learning-rate cycle"),
    int("epochs", 0, "50", "training epochs"),
    int("batch-size", 1, "16", "pairs per optimizer step"),
    real("grad-clip", 0.0, false, "10", "global gradient-norm clip (0 disables)"),
    int("checkpoint-every", 0, "5", "epochs between periodic checkpoints (0 disables)"),
    // target and evaluation
    real("gamma", 0.0, false, "0", "RBF bandwidth of the target (0 = median heuristic)"),
    text("budgets", "5,10,25,50", "evaluation budgets"),
    int("random-trials", 1, "10", "random baseline draws per budget"),
    real("stream-epsilon", 0.0, true, "0.1", "sieve threshold spacing"),
];

/// Fully resolved key/value configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
    explicit: BTreeSet<&'static str>,
}

fn schema_entry(key: &str) -> Result<&'static ConfigKey> {
    SCHEMA
        .iter()
        .find(|k| k.key == key)
        .ok_or_else(|| Error::Config(format!("unknown config key '{key}'")))
}

fn check_value(spec: &ConfigKey, value: &str) -> Result<String> {
    let v = value.trim();
    let bad = |why: String| Err(Error::Config(format!("{}: {why}", spec.key)));
    match spec.kind {
        KeyKind::Int { min } => match v.parse::<u64>() {
            Ok(x) if x >= min => Ok(x.to_string()),
            Ok(x) => bad(format!("must be ≥ {min}, got {x}")),
            Err(_) => bad(format!("expected a non-negative integer, got '{v}'")),
        },
        KeyKind::Real { min, strict } => match v.parse::<f64>() {
            Ok(x) if !x.is_finite() => bad(format!("must be finite, got {x}")),
            Ok(x) if strict && x <= min => bad(format!("must be > {min}, got {x}")),
            Ok(x) if !strict && x < min => bad(format!("must be ≥ {min}, got {x}")),
            Ok(x) => Ok(format!("{x:?}")),
            Err(_) => bad(format!("expected a number, got '{v}'")),
        },
        KeyKind::Bool => match v {
            "true" | "1" | "yes" => Ok("true".into()),
            "false" | "0" | "no" => Ok("false".into()),
            _ => bad(format!("expected true or false, got '{v}'")),
        },
        KeyKind::Text => Ok(v.to_string()),
    }
}

fn parse_list(key: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("{key}: '{t}' is not a non-negative integer")))
        })
        .collect()
}

fn parse_matroid(s: &str) -> Result<Matroid> {
    match s.trim() {
        "free" => Ok(Matroid::Free),
        other => {
            let k = other
                .strip_prefix("uniform:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "matroid: expected free or uniform:<k ≥ 1>, got '{other}'"
                    ))
                })?;
            Ok(Matroid::Uniform { k })
        }
    }
}

/// Parse `key = value` lines (`#` starts a comment).
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: SCHEMA
                .iter()
                .map(|k| {
                    (
                        k.key,
                        check_value(k, k.default).expect("schema defaults are valid"),
                    )
                })
                .collect(),
            explicit: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid by the optional file, overlaid by `flags`.
    pub fn resolve(file: Option<&Path>, flags: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (k, v) in parse_config(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, v) in flags {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = schema_entry(key)?;
        let v = check_value(spec, value)?;
        self.values.insert(spec.key, v);
        self.explicit.insert(spec.key);
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("config key '{key}' is not in the schema"))
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).parse().expect("validated at set time")
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.get(key).parse().expect("validated at set time")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.u64(key) as usize
    }

    pub fn bool(&self, key: &str) -> bool {
        self.get(key) == "true"
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed")
    }

    /// Canonical `key = value` listing in key order.
    pub fn canonical(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper().validate()?;
        self.sampler()?.validate()?;
        self.train()?.validate()?;
        self.model(1)?;
        self.synthetic().validate()?;
        self.budgets()?;
        Ok(())
    }

    pub fn hyper(&self) -> PeripteralHyper {
        PeripteralHyper {
            alpha: self.f64("alpha"),
            beta: self.f64("beta"),
            tau: self.f64("tau"),
            kappa: self.f64("kappa"),
            epsilon: self.f64("epsilon"),
            lambda1: self.f64("lambda1"),
            lambda2: self.f64("lambda2"),
            lambda3: self.f64("lambda3"),
            lambda4: self.f64("lambda4"),
        }
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        Ok(SamplerConfig {
            k_max: self.usize("k-max"),
            refresh_period: self.usize("refresh-period"),
            style1_count: self.usize("style1-count"),
            style2_count: self.usize("style2-count"),
            style2_classes: self.usize("style2-classes"),
            keep_single_class_style2: self.bool("keep-single-class"),
            dspn_count: self.usize("dspn-count"),
            target_count: self.usize("target-count"),
            use_target_feedback: self.bool("target-feedback"),
            noise_sigma: self.f64("noise-sigma"),
            max_pairs_per_edge: self.usize("max-pairs-per-edge"),
            kmeans_iters: self.usize("kmeans-iters"),
            same_size_self_pairs: self.bool("same-size-self-pairs"),
            edges: parse_edges(self.get("edges"))?,
        })
    }

    pub fn train(&self) -> Result<TrainConfig> {
        let clip = self.f64("grad-clip");
        Ok(TrainConfig {
            base_lr: self.f64("base-lr"),
            max_lr: self.f64("max-lr"),
            cycle_length: self.usize("cycle-length"),
            epochs: self.usize("epochs"),
            batch_size: self.usize("batch-size"),
            loss: LossKind::parse(self.get("loss"))?,
            hyper: self.hyper(),
            grad_clip: (clip > 0.0).then_some(clip),
            project_roof: true,
            seed: self.seed(),
            config_hash: self.hash(),
        })
    }

    pub fn model(&self, d_in: usize) -> Result<ModelConfig> {
        let activations = self
            .get("activations")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Concave::parse)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(format!("activations: {e}")))?;
        if activations.is_empty() {
            return Err(Error::Config(
                "activations: at least one is required".into(),
            ));
        }
        let pillar_hidden = parse_list("pillar-hidden", self.get("pillar-hidden"))?;
        let roof_hidden = parse_list("roof-hidden", self.get("roof-hidden"))?;
        if pillar_hidden.contains(&0) || roof_hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be ≥ 1".into()));
        }
        Ok(ModelConfig {
            d_in,
            pillar_hidden,
            d: self.usize("d"),
            roof_hidden,
            activations,
            matroid: parse_matroid(self.get("matroid"))?,
            pillar_output: PillarOutput::parse(self.get("pillar-output"))
                .map_err(|e| Error::Config(format!("pillar-output: {e}")))?,
        })
    }

    pub fn synthetic(&self) -> SyntheticSpec {
        SyntheticSpec {
            clusters: self.usize("clusters"),
            points_per_cluster: self.usize("per-cluster"),
            dim: self.usize("dim"),
            cluster_spread: self.f64("cluster-spread"),
            center_spread: self.f64("center-spread"),
            seed: self.seed(),
        }
    }

    pub fn budgets(&self) -> Result<Vec<usize>> {
        let b = parse_list("budgets", self.get("budgets"))?;
        if b.is_empty() || b.contains(&0) {
            return Err(Error::Config(
                "budgets: need at least one budget, all ≥ 1".into(),
            ));
        }
        Ok(b)
    }

    /// `None` selects the median heuristic.
    pub fn gamma(&self) -> Option<f64> {
        let g = self.f64("gamma");
        (g > 0.0).then_some(g)
    }

    pub fn edges_text(&self) -> Result<String> {
        Ok(format_edges(&parse_edges(self.get("edges"))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table_row() {
        let cfg = RunConfig::resolve(None, &[]).unwrap();
        let h = cfg.hyper();
        assert_eq!(
            (h.alpha, h.beta, h.kappa, h.tau, h.epsilon),
            (1e-5, 0.5, 1.0, 10.0, 1e-15)
        );
        assert_eq!(
            (h.lambda1, h.lambda2, h.lambda3, h.lambda4),
            (0.25, 0.01, 0.0, 0.0)
        );
    }

    #[test]
    fn precedence_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nbeta = 0.2\nepochs = 3 # inline\n").unwrap();
        let flags = vec![("beta".to_string(), "0.01".to_string())];
        let cfg = RunConfig::resolve(Some(&path), &flags).unwrap();
        assert_eq!(cfg.hyper().beta, 0.01);
        assert_eq!(cfg.usize("epochs"), 3);
        assert!(cfg.is_explicit("beta") && !cfg.is_explicit("tau"));
        let base = RunConfig::default();
        assert_ne!(cfg.hash(), base.hash());
        assert_eq!(base.hash(), RunConfig::default().hash());
        assert_eq!(base.hash().len(), 16);
    }

    #[test]
    fn rejects_bad_input() {
        let set = |k: &str, v: &str| RunConfig::resolve(None, &[(k.to_string(), v.to_string())]);
        assert!(set("beta", "0").is_err());
        assert!(set("nonsense", "1").is_err());
        assert!(set("epochs", "-1").is_err());
        assert!(set("epochs", "x").is_err());
        assert!(set("loss", "hinge").is_err());
        assert!(set("matroid", "uniform:0").is_err());
        assert!(set("max-lr", "1e-6").is_err());
        assert!(set("k-max", "1").is_err());
        assert!(parse_config("novalue").is_err());
        assert_eq!(
            set("matroid", "uniform:3")
                .unwrap()
                .model(2)
                .unwrap()
                .matroid,
            Matroid::Uniform { k: 3 }
        );
    }
}
