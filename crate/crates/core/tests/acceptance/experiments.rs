//! Criteria that need trained models: transfer to held-out data (6, 7) and
//! online experimental design on imbalanced streams (8).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dspn_core::data::{gen_split, gen_synthetic, RunConfig};
use dspn_core::eval::{
    online_design_eval, transfer_eval, zipf_duplicate, DesignSetup, ProbeSettings, ReportMeta,
    TransferReport,
};
use dspn_core::setfn::{median_heuristic_gamma, FacilityLocation};
use dspn_core::train::{fl_target, init_model, train};
use dspn_core::{DspnModel, GroundSet, LossKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{serial, verdict};

const SEEDS: u64 = 5;
const TRANSFER_BUDGETS: [usize; 4] = [5, 10, 25, 50];
const DESIGN_BUDGETS: [usize; 3] = [10, 25, 50];
const LOSSES: [LossKind; 3] = [LossKind::Peripteral, LossKind::Regression, LossKind::Margin];

/// Target bandwidth as a multiple of the median heuristic on the training data.
const GAMMA_MULT: f64 = 10.0;

/// Pairing setup shared by both experiments: random heterogeneous sets
/// contrasted with each other at equal size.
fn config(seed: u64, extra: &[(&str, &str)]) -> RunConfig {
    let mut flags: Vec<(String, String)> = [
        ("seed", seed.to_string()),
        ("center-spread", "5".into()),
        ("k-max", "20".into()),
        ("epochs", "30".into()),
        ("style1-count", "200".into()),
        ("style2-count", "0".into()),
        ("dspn-count", "0".into()),
        ("target-count", "0".into()),
        ("target-feedback", "false".into()),
        ("edges", "style1-het>style1-het".into()),
        ("same-size-self-pairs", "true".into()),
        ("max-pairs-per-edge", "3000".into()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    flags.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    RunConfig::resolve(None, &flags).unwrap()
}

fn train_model(
    cfg: &RunConfig,
    ground: &GroundSet,
    gamma: f64,
    loss: LossKind,
    seed: u64,
) -> DspnModel {
    let (target, _) = fl_target(ground, Some(gamma)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(100));
    let model = init_model(&cfg.model(ground.dim()).unwrap(), ground, &mut rng).unwrap();
    let mut tc = cfg.train().unwrap();
    tc.loss = loss;
    train(model, ground, &target, &cfg.sampler().unwrap(), &tc)
        .unwrap()
        .model
}

struct TransferRuns {
    reports: Vec<TransferReport>,
    elapsed: Duration,
}

fn transfer_runs() -> &'static TransferRuns {
    static RUNS: OnceLock<TransferRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let t0 = Instant::now();
        let reports = (0..SEEDS)
            .map(|seed| {
                let cfg = config(seed, &[]);
                let (tr, held) = gen_split(&cfg.synthetic()).unwrap();
                assert_eq!((tr.n(), held.n()), (500, 500));
                let gamma = median_heuristic_gamma(tr.embeddings()).unwrap() * GAMMA_MULT;
                let models: Vec<(&str, DspnModel)> = LOSSES
                    .iter()
                    .map(|&l| (l.name(), train_model(&cfg, &tr, gamma, l, seed)))
                    .collect();
                let refs: Vec<(&str, &DspnModel)> = models.iter().map(|(n, m)| (*n, m)).collect();
                let target = FacilityLocation::rbf(&held, gamma).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let meta = ReportMeta {
                    seed,
                    config_hash: cfg.hash(),
                };
                transfer_eval(&target, &held, &refs, &TRANSFER_BUDGETS, 20, meta, &mut rng).unwrap()
            })
            .collect();
        TransferRuns {
            reports,
            elapsed: t0.elapsed(),
        }
    })
}

fn seed_mean(reports: &[TransferReport], budget: usize, method: &str) -> f64 {
    reports
        .iter()
        .map(|r| r.get(budget, method).unwrap())
        .sum::<f64>()
        / reports.len() as f64
}

#[test]
fn criterion_06_transfer() {
    let _g = serial();
    let runs = transfer_runs();
    let means: Vec<f64> = TRANSFER_BUDGETS
        .iter()
        .map(|&b| seed_mean(&runs.reports, b, "peripteral"))
        .collect();
    let ordered = runs
        .reports
        .iter()
        .filter(|r| {
            let p = r.mean("peripteral").unwrap();
            p >= r.mean("regression").unwrap() && p >= r.mean("margin").unwrap()
        })
        .count();
    let per_seed: Vec<String> = runs
        .reports
        .iter()
        .map(|r| {
            format!(
                "{:.3}/{:.3}/{:.3}",
                r.mean("peripteral").unwrap(),
                r.mean("regression").unwrap(),
                r.mean("margin").unwrap()
            )
        })
        .collect();
    let pass = means.iter().all(|&v| v >= 0.90)
        && ordered >= 3
        && runs.elapsed < Duration::from_secs(15 * 60);
    verdict(
        6,
        pass,
        &format!(
            "peripteral normalized FL at {:?} = {:.3?} (need ≥ 0.90); peripteral ≥ regression and margin on {ordered}/5 seeds (need 3), per-seed P/R/M means [{}]; {:.1?}",
            TRANSFER_BUDGETS,
            means,
            per_seed.join(" "),
            runs.elapsed
        ),
    );
}

#[test]
fn criterion_07_beyond_training_size() {
    let _g = serial();
    let runs = transfer_runs();
    let dspn = seed_mean(&runs.reports, 50, "peripteral");
    let random = seed_mean(&runs.reports, 50, "random");
    verdict(
        7,
        dspn - random >= 0.05,
        &format!("k-max 20, budget 50: peripteral {dspn:.3} vs random {random:.3}, gap {:.3} (need ≥ 0.05)", dspn - random),
    );
}

#[test]
fn criterion_08_online_design() {
    let _g = serial();
    let t0 = Instant::now();
    let mut wins = 0;
    let mut ratios = vec![0.0; DESIGN_BUDGETS.len()];
    let mut lines = Vec::new();
    for seed in 0..SEEDS {
        let cfg = config(
            seed,
            &[
                ("clusters", "10"),
                ("per-cluster", "50"),
                ("epochs", "20"),
                ("center-spread", "10"),
            ],
        );
        let mut spec = cfg.synthetic();
        spec.points_per_cluster *= 3;
        let all = gen_synthetic(&spec).unwrap();
        let part = |r: usize| {
            let idx: Vec<usize> = (0..all.n()).filter(|i| i % 3 == r).collect();
            all.subset(&idx).unwrap()
        };
        let (tr, pool, test) = (part(0), part(1), part(2));
        let gamma = median_heuristic_gamma(tr.embeddings()).unwrap() * GAMMA_MULT;
        let model = train_model(&cfg, &tr, gamma, LossKind::Peripteral, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(200));
        let zipf = zipf_duplicate(&pool, 1.0, cfg.usize("zipf-base"), &mut rng).unwrap();
        let setup = DesignSetup {
            pool: zipf.ground,
            test,
            budgets: DESIGN_BUDGETS.to_vec(),
            random_trials: 10,
            gamma: Some(gamma),
            stream_epsilon: cfg.f64("stream-epsilon"),
            probe: ProbeSettings::default(),
            meta: ReportMeta {
                seed,
                config_hash: cfg.hash(),
            },
        };
        let rep = online_design_eval(&model, &setup, &mut rng).unwrap();
        let mut beat = true;
        for (k, &b) in DESIGN_BUDGETS.iter().enumerate() {
            let online = rep.get(b, "dspn-online").unwrap();
            let reservoir = rep.get(b, "reservoir").unwrap();
            let offline = rep.get(b, "dspn-offline").unwrap();
            beat &= online >= reservoir;
            ratios[k] += online / offline / SEEDS as f64;
            lines.push(format!(
                "s{seed}/b{b} {online:.3}|{reservoir:.3}|{offline:.3}"
            ));
        }
        wins += usize::from(beat);
    }
    let el = t0.elapsed();
    let pass = wins >= 4 && ratios.iter().all(|&r| r >= 0.85) && el < Duration::from_secs(15 * 60);
    verdict(
        8,
        pass,
        &format!(
            "online ≥ reservoir at {DESIGN_BUDGETS:?} on {wins}/5 seeds (need 4); mean online/offline {:.3?} (need ≥ 0.85); online|reservoir|offline [{}]; {el:.1?}",
            ratios,
            lines.join(" ")
        ),
    );
}
