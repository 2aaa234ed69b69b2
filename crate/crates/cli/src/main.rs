use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use dspn_core::data::{
    gen_split, gen_synthetic, load_ground, save_embeddings, save_embeddings_tsv, save_labels,
    KeyKind, RunConfig, SCHEMA,
};
use dspn_core::eval::{
    feature_ranking_report, offline_design_eval, online_design_eval, transfer_eval, zipf_duplicate,
    DesignSetup, ProbeSettings, ReportMeta,
};
use dspn_core::model::{load_checkpoint, save_checkpoint};
use dspn_core::opt::{greedy_max, streaming_max};
use dspn_core::setfn::{median_heuristic_gamma, Violation};
use dspn_core::train::{fl_target, init_model, train_with_hook, MetricsLog};
use dspn_core::verify::{
    inject_negative_roof_weight, unconstrained_copy, verify_gradients, verify_permutation,
    verify_polymatroid,
};
use dspn_core::{
    Checkpoint, DspnModel, DspnObjective, Error, FacilityLocation, GroundSet, LossKind, Matrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Failure {
    Validation(String),
    Verification(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn path_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .value_name("PATH")
        .value_parser(clap::value_parser!(PathBuf))
        .help(help)
}

fn cli() -> Command {
    let mut root = Command::new("dspn")
        .about("Train, evaluate and verify deep submodular peripteral networks")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(path_arg("config", "key = value configuration file").global(true));
    for key in SCHEMA {
        let value_name = match key.kind {
            KeyKind::Int { .. } => "INT",
            KeyKind::Real { .. } => "REAL",
            KeyKind::Bool => "BOOL",
            KeyKind::Text => "TEXT",
        };
        root = root.arg(
            Arg::new(key.key)
                .long(key.key)
                .value_name(value_name)
                .allow_hyphen_values(true)
                .global(true)
                .help(format!("{} [default: {}]", key.help, key.default)),
        );
    }
    root.subcommand(
        Command::new("gen-data")
            .about("Generate synthetic clustered embeddings, labels and a manifest")
            .arg(path_arg("out", "output directory").required(true))
            .arg(
                Arg::new("split")
                    .long("split")
                    .action(ArgAction::SetTrue)
                    .help("write a train/held-out split"),
            )
            .arg(
                Arg::new("tsv")
                    .long("tsv")
                    .action(ArgAction::SetTrue)
                    .help("write embeddings as TSV"),
            ),
    )
    .subcommand(
        Command::new("train")
            .about("Train a DSPN against the facility-location target on a ground set")
            .arg(path_arg("data", "training embeddings").required(true))
            .arg(path_arg(
                "labels",
                "labels file (default: sibling .labels file)",
            ))
            .arg(path_arg("out", "checkpoint path").required(true))
            .arg(path_arg(
                "metrics",
                "metrics CSV (default: <out>.metrics.csv)",
            )),
    )
    .subcommand(
        Command::new("eval-transfer")
            .about("Normalized facility-location evaluation of greedy summaries on held-out data")
            .arg(
                Arg::new("checkpoint")
                    .long("checkpoint")
                    .value_name("[NAME=]PATH")
                    .required(true)
                    .action(ArgAction::Append)
                    .help("model checkpoint; repeat to compare models"),
            )
            .arg(path_arg("data", "held-out embeddings").required(true))
            .arg(path_arg("out", "per-cell CSV").required(true))
            .arg(path_arg("long", "plot-ready long CSV")),
    )
    .subcommand(
        Command::new("eval-design")
            .about("Offline or online experimental design scored by a linear probe")
            .arg(path_arg("checkpoint", "model checkpoint").required(true))
            .arg(path_arg("pool", "selection pool embeddings").required(true))
            .arg(path_arg(
                "pool-labels",
                "pool labels (default: sibling .labels file)",
            ))
            .arg(path_arg("test", "probe test embeddings").required(true))
            .arg(path_arg(
                "test-labels",
                "test labels (default: sibling .labels file)",
            ))
            .arg(
                Arg::new("mode")
                    .long("mode")
                    .value_parser(["offline", "online"])
                    .default_value("offline"),
            )
            .arg(path_arg("out", "per-cell CSV").required(true))
            .arg(path_arg("long", "plot-ready long CSV")),
    )
    .subcommand(
        Command::new("summarize")
            .about("Select a summary with a trained model")
            .arg(path_arg("checkpoint", "model checkpoint").required(true))
            .arg(path_arg("data", "embeddings to summarize").required(true))
            .arg(
                Arg::new("mode")
                    .long("mode")
                    .value_parser(["offline", "stream"])
                    .default_value("offline"),
            )
            .arg(
                Arg::new("budget")
                    .long("budget")
                    .value_name("INT")
                    .required(true)
                    .value_parser(clap::value_parser!(usize)),
            )
            .arg(path_arg("out", "index list (default: stdout)")),
    )
    .subcommand(
        Command::new("verify")
            .about("Check polymatroid structure, permutation invariance and gradients")
            .arg(path_arg(
                "checkpoint",
                "model checkpoint (default: random models)",
            ))
            .arg(path_arg(
                "data",
                "ground set to draw test items from (default: Gaussian points)",
            ))
            .arg(
                Arg::new("items")
                    .long("items")
                    .value_name("INT")
                    .default_value("8")
                    .value_parser(clap::value_parser!(usize))
                    .help("ground-set size for the exhaustive check"),
            )
            .arg(
                Arg::new("models")
                    .long("models")
                    .value_name("INT")
                    .default_value("10")
                    .value_parser(clap::value_parser!(usize))
                    .help("random models to check when no checkpoint is given"),
            )
            .arg(
                Arg::new("tol")
                    .long("tol")
                    .value_name("REAL")
                    .default_value("1e-9")
                    .value_parser(clap::value_parser!(f64)),
            )
            .arg(
                Arg::new("no-projection")
                    .long("no-projection")
                    .action(ArgAction::SetTrue)
                    .hide(true),
            )
            .arg(
                Arg::new("inject-negative")
                    .long("inject-negative")
                    .action(ArgAction::SetTrue)
                    .hide(true),
            ),
    )
    .subcommand(
        Command::new("report")
            .about("Per-feature ranking of items by pillar output")
            .arg(path_arg("checkpoint", "model checkpoint").required(true))
            .arg(path_arg("data", "embeddings to rank").required(true))
            .arg(path_arg(
                "labels",
                "labels file (default: sibling .labels file)",
            ))
            .arg(
                Arg::new("features")
                    .long("features")
                    .value_name("LIST")
                    .help("comma-separated pillar features (default: all)"),
            )
            .arg(
                Arg::new("top")
                    .long("top")
                    .value_name("INT")
                    .default_value("5")
                    .value_parser(clap::value_parser!(usize)),
            )
            .arg(path_arg("out", "CSV output (default: stdout)")),
    )
}

fn resolve_config(m: &ArgMatches) -> CliResult<RunConfig> {
    let flags: Vec<(String, String)> = SCHEMA
        .iter()
        .filter_map(|k| {
            m.get_one::<String>(k.key)
                .map(|v| (k.key.to_string(), v.clone()))
        })
        .collect();
    let file = m.get_one::<PathBuf>("config");
    Ok(RunConfig::resolve(file.map(PathBuf::as_path), &flags)?)
}

fn meta(cfg: &RunConfig) -> ReportMeta {
    ReportMeta {
        seed: cfg.seed(),
        config_hash: cfg.hash(),
    }
}

fn sibling_labels(emb: &Path) -> PathBuf {
    emb.with_extension("labels")
}

/// Explicit labels path, else the sibling `.labels` file when it exists.
fn labels_path(emb: &Path, explicit: Option<&PathBuf>) -> Option<PathBuf> {
    match explicit {
        Some(p) => Some(p.clone()),
        None => Some(sibling_labels(emb)).filter(|p| p.exists()),
    }
}

fn read_ground(emb: &Path, explicit_labels: Option<&PathBuf>) -> CliResult<GroundSet> {
    Ok(load_ground(
        emb,
        labels_path(emb, explicit_labels).as_deref(),
    )?)
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen_data(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let dir = m.get_one::<PathBuf>("out").expect("required");
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let spec = cfg.synthetic();
    let parts: Vec<(&str, GroundSet)> = if m.get_flag("split") {
        let (train, held) = gen_split(&spec)?;
        vec![("train", train), ("held", held)]
    } else {
        vec![("data", gen_synthetic(&spec)?)]
    };
    let tsv = m.get_flag("tsv");
    let mut manifest = format!(
        "# dspn-data v1\nseed = {}\nconfig_hash = {}\n",
        cfg.seed(),
        cfg.hash()
    );
    for (i, (stem, mut ground)) in parts.into_iter().enumerate() {
        if i == 0 && cfg.is_explicit("zipf-s") {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed() ^ 0x5a5a_5a5a);
            let z = zipf_duplicate(&ground, cfg.f64("zipf-s"), cfg.usize("zipf-base"), &mut rng)?;
            let added: Vec<String> = z.added.iter().map(usize::to_string).collect();
            writeln!(manifest, "{stem}.zipf_added = {}", added.join(",")).unwrap();
            ground = z.ground;
        }
        let emb = dir.join(format!("{stem}.{}", if tsv { "tsv" } else { "emb" }));
        if tsv {
            save_embeddings_tsv(&emb, ground.embeddings())?;
        } else {
            save_embeddings(&emb, ground.embeddings())?;
        }
        let labels = ground.labels().expect("synthetic data is labelled");
        save_labels(&dir.join(format!("{stem}.labels")), labels)?;
        let file = emb
            .file_name()
            .expect("joined onto a directory")
            .to_string_lossy();
        writeln!(
            manifest,
            "{stem} = {file} rows={} dim={}",
            ground.n(),
            ground.dim()
        )
        .unwrap();
    }
    manifest.push_str("\n# resolved config\n");
    manifest.push_str(&cfg.canonical());
    write_text(&dir.join("manifest.txt"), &manifest)?;
    eprintln!("wrote {} (config {})", dir.display(), cfg.hash());
    Ok(())
}

fn cmd_train(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let data = m.get_one::<PathBuf>("data").expect("required");
    let out = m.get_one::<PathBuf>("out").expect("required").clone();
    let metrics = m
        .get_one::<PathBuf>("metrics")
        .cloned()
        .unwrap_or_else(|| PathBuf::from(format!("{}.metrics.csv", out.display())));
    let ground = read_ground(data, m.get_one::<PathBuf>("labels"))?;
    let (target, gamma) = fl_target(&ground, cfg.gamma())?;
    let tc = cfg.train()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let model = init_model(&cfg.model(ground.dim())?, &ground, &mut rng)?;
    let every = cfg.usize("checkpoint-every");
    let (seed, hash) = (cfg.seed(), cfg.hash());
    let ckpt = |model: &DspnModel| Checkpoint {
        model: model.clone(),
        seed,
        config_hash: hash.clone(),
    };
    let mut log = MetricsLog {
        loss: tc.loss,
        seed,
        config_hash: hash.clone(),
        rows: Vec::new(),
    };
    eprintln!(
        "training on {} items, gamma {gamma:.6}, loss {}, config {hash}",
        ground.n(),
        tc.loss.name()
    );
    let mut hook =
        |row: &dspn_core::train::MetricsRow, model: &DspnModel| -> dspn_core::Result<()> {
            log.rows.push(row.clone());
            log::info!("epoch {} risk {:.6} lr {:.2e}", row.epoch, row.risk, row.lr);
            if every > 0 && (row.epoch + 1).is_multiple_of(every) {
                save_checkpoint(&out, &ckpt(model))?;
                log.save(&metrics)?;
            }
            Ok(())
        };
    let outcome = train_with_hook(model, &ground, &target, &cfg.sampler()?, &tc, &mut hook)?;
    save_checkpoint(&out, &ckpt(&outcome.model))?;
    outcome.log.save(&metrics)?;
    if let (Some(first), Some(last)) = (outcome.log.rows.first(), outcome.log.rows.last()) {
        eprintln!(
            "risk {:.6} -> {:.6} over {} epochs",
            first.risk,
            last.risk,
            outcome.log.rows.len()
        );
    }
    eprintln!("wrote {} and {}", out.display(), metrics.display());
    Ok(())
}

fn named_checkpoint(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let p = PathBuf::from(spec);
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, p)
        }
    }
}

fn cmd_eval_transfer(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let held = read_ground(m.get_one::<PathBuf>("data").expect("required"), None)?;
    let mut models = Vec::new();
    for spec in m.get_many::<String>("checkpoint").expect("required") {
        let (name, path) = named_checkpoint(spec);
        models.push((name, load_checkpoint(&path)?.model));
    }
    let gamma = match cfg.gamma() {
        Some(g) => g,
        None => median_heuristic_gamma(held.embeddings())?,
    };
    let target = FacilityLocation::rbf(&held, gamma)?;
    let refs: Vec<(&str, &DspnModel)> = models.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let report = transfer_eval(
        &target,
        &held,
        &refs,
        &cfg.budgets()?,
        cfg.usize("random-trials"),
        meta(cfg),
        &mut rng,
    )?;
    let out = m.get_one::<PathBuf>("out").expect("required");
    report.save(out, m.get_one::<PathBuf>("long").map(PathBuf::as_path))?;
    for (name, _) in &refs {
        eprintln!(
            "{name}: mean normalized FL {:.4}",
            report.mean(name).unwrap_or(f64::NAN)
        );
    }
    eprintln!(
        "random: mean normalized FL {:.4}",
        report.mean("random").unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_eval_design(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let model = load_checkpoint(m.get_one::<PathBuf>("checkpoint").expect("required"))?.model;
    let pool = read_ground(
        m.get_one::<PathBuf>("pool").expect("required"),
        m.get_one::<PathBuf>("pool-labels"),
    )?;
    let test = read_ground(
        m.get_one::<PathBuf>("test").expect("required"),
        m.get_one::<PathBuf>("test-labels"),
    )?;
    let setup = DesignSetup {
        pool,
        test,
        budgets: cfg.budgets()?,
        random_trials: cfg.usize("random-trials"),
        gamma: cfg.gamma(),
        stream_epsilon: cfg.f64("stream-epsilon"),
        probe: ProbeSettings::default(),
        meta: meta(cfg),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let report = match m.get_one::<String>("mode").map(String::as_str) {
        Some("online") => online_design_eval(&model, &setup, &mut rng)?,
        _ => offline_design_eval(&model, &setup, &mut rng)?,
    };
    report.save(
        m.get_one::<PathBuf>("out").expect("required"),
        m.get_one::<PathBuf>("long").map(PathBuf::as_path),
    )?;
    for row in &report.rows {
        eprintln!(
            "b={:<4} {:<18} accuracy {:.4}",
            row.budget, row.method, row.accuracy
        );
    }
    Ok(())
}

fn cmd_summarize(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let model = load_checkpoint(m.get_one::<PathBuf>("checkpoint").expect("required"))?.model;
    let ground = read_ground(m.get_one::<PathBuf>("data").expect("required"), None)?;
    let budget = *m.get_one::<usize>("budget").expect("required");
    if budget == 0 || budget > ground.n() {
        return Err(Failure::Validation(format!(
            "budget must lie in 1..={}",
            ground.n()
        )));
    }
    let obj = DspnObjective::new(&model, &ground)?;
    let order: Vec<usize> = (0..ground.n()).collect();
    let mode = m
        .get_one::<String>("mode")
        .map(String::as_str)
        .unwrap_or("offline");
    let (selected, inspected) = match mode {
        "stream" => streaming_max(&obj, &order, budget, cfg.f64("stream-epsilon"))?,
        _ => (greedy_max(&obj, &order, budget, true)?.chain, ground.n()),
    };
    let mut text = format!(
        "# mode={mode} budget={budget} selected={} inspected={inspected} seed={} config_hash={}\n",
        selected.len(),
        cfg.seed(),
        cfg.hash()
    );
    for v in &selected {
        writeln!(text, "{v}").unwrap();
    }
    emit(m.get_one::<PathBuf>("out"), &text)?;
    eprintln!(
        "selected {} items, inspected {inspected} of {}",
        selected.len(),
        ground.n()
    );
    Ok(())
}

fn gaussian_ground(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> CliResult<GroundSet> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    Ok(GroundSet::new(Matrix::from_rows(&rows)?, None)?)
}

fn cmd_verify(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let items = *m.get_one::<usize>("items").expect("defaulted");
    let tol = *m.get_one::<f64>("tol").expect("defaulted");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut models = Vec::new();
    match m.get_one::<PathBuf>("checkpoint") {
        Some(p) => models.push((p.display().to_string(), load_checkpoint(p)?.model)),
        None => {
            let count = *m.get_one::<usize>("models").expect("defaulted");
            let mc = cfg.model(cfg.usize("dim"))?;
            for i in 0..count {
                models.push((format!("random#{i}"), DspnModel::random(&mc, &mut rng)?));
            }
        }
    }
    let mut failures = 0;
    println!("# verify seed={} config_hash={}", cfg.seed(), cfg.hash());
    for (name, mut model) in models {
        if m.get_flag("no-projection") {
            model = unconstrained_copy(&model, &mut rng);
        }
        if m.get_flag("inject-negative") {
            let inj = inject_negative_roof_weight(&mut model, &mut rng)?;
            println!(
                "{name}: injected roof weight {:.4} at layer {} column {}",
                inj.new, inj.layer, inj.col
            );
        }
        let ground = match m.get_one::<PathBuf>("data") {
            Some(p) => {
                let full = read_ground(p, None)?;
                if full.dim() != model.d_in() {
                    return Err(Failure::Validation(format!(
                        "data has dimension {} but the model expects {}",
                        full.dim(),
                        model.d_in()
                    )));
                }
                let idx =
                    rand::seq::index::sample(&mut rng, full.n(), items.min(full.n())).into_vec();
                full.subset(&idx)?
            }
            None => gaussian_ground(items, model.d_in(), &mut rng)?,
        };
        let poly = verify_polymatroid(&model, &ground, tol)?;
        let perm = verify_permutation(&model, &ground, 200, &mut rng)?;
        let grad = verify_gradients(
            &model,
            &ground,
            &cfg.hyper(),
            LossKind::Peripteral,
            5,
            10,
            1e-5,
            &mut rng,
        )?;
        let ok = poly.is_polymatroid() && perm.mismatches.is_empty() && grad.max_rel_err <= 1e-4;
        println!(
            "{name}: {} polymatroid violations={} (submodularity {}, monotonicity {}) permutation mismatches={}/{} gradient max rel err={:.2e}",
            if ok { "PASS" } else { "FAIL" },
            poly.total_violations(),
            poly.submodularity_violations,
            poly.monotonicity_violations,
            perm.mismatches.len(),
            perm.trials,
            grad.max_rel_err,
        );
        let witness = poly.first_submodularity_witness().or_else(|| {
            poly.witnesses
                .iter()
                .find(|w| matches!(w, Violation::Monotonicity { .. }))
        });
        if let Some(w) = witness {
            println!("  witness {w}");
        }
        if !ok {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Failure::Verification(format!(
            "{failures} model(s) failed verification"
        )));
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig, m: &ArgMatches) -> CliResult {
    let ck = load_checkpoint(m.get_one::<PathBuf>("checkpoint").expect("required"))?;
    let ground = read_ground(
        m.get_one::<PathBuf>("data").expect("required"),
        m.get_one::<PathBuf>("labels"),
    )?;
    let features: Vec<usize> = match m.get_one::<String>("features") {
        Some(list) => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Failure::Validation(format!("features: '{t}' is not an index")))
            })
            .collect::<CliResult<_>>()?,
        None => (0..ck.model.d()).collect(),
    };
    let top = *m.get_one::<usize>("top").expect("defaulted");
    let report = feature_ranking_report(&ck.model, &ground, &features, top)?;
    let mut text = format!(
        "# seed={} config_hash={} checkpoint_hash={}\nfeature,end,rank,item,label,value\n",
        cfg.seed(),
        cfg.hash(),
        ck.config_hash
    );
    for r in &report {
        for (end, list) in [("top", &r.top), ("bottom", &r.bottom)] {
            for (i, item) in list.iter().enumerate() {
                let label = item.label.map(|l| l.to_string()).unwrap_or_default();
                writeln!(
                    text,
                    "{},{end},{},{},{label},{:?}",
                    r.feature,
                    i + 1,
                    item.item,
                    item.value
                )
                .unwrap();
            }
        }
    }
    emit(m.get_one::<PathBuf>("out"), &text)
}

fn run(matches: &ArgMatches) -> CliResult {
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cfg = resolve_config(sub)?;
    match name {
        "gen-data" => cmd_gen_data(&cfg, sub),
        "train" => cmd_train(&cfg, sub),
        "eval-transfer" => cmd_eval_transfer(&cfg, sub),
        "eval-design" => cmd_eval_design(&cfg, sub),
        "summarize" => cmd_summarize(&cfg, sub),
        "verify" => cmd_verify(&cfg, sub),
        "report" => cmd_report(&cfg, sub),
        other => unreachable!("unknown subcommand {other}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            ExitCode::from(3)
        }
    }
}
