use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chartae::atlas::{build_atlas, build_cover, Atlas, AtlasConfig, CoverConfig};
use chartae::cae::{distill, evaluate, load_model, save_model, train, ChartAutoencoder, TrainReport};
use chartae::checks::{self, InvariantCheck};
use chartae::geometry::{
    build_manifold, make_dataset, read_caeds, write_caeds, write_csv, Embedding, EmbeddedManifold, ManifoldParams,
    NoiseKind, NoiseSpec, PairedDataset,
};
use chartae::harness::{threads_from_env, SweepRegistry, SweepReport};
use chartae::rng::{derive_seed, purpose};
use chartae::VERSION;
use serde_json::json;

use crate::config::RunConfig;
use crate::{Cli, CliError, Command, ManifoldArgs, NoiseArgs, SweepArgs, TrainArgs};

type Res<T> = Result<T, CliError>;

fn create(path: &Path) -> Res<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Res<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Res<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// `#` lines naming the tool version and the resolved config.
fn comment_header(w: &mut impl Write, cfg: &RunConfig) -> std::io::Result<()> {
    writeln!(w, "# chartae {VERSION}")?;
    writeln!(w, "# config {}", cfg.to_json())
}

fn provenance(cfg: &RunConfig, command: &str) -> serde_json::Value {
    json!({ "tool": "chartae", "tool_version": VERSION, "command": command, "config": cfg.to_json() })
}

fn apply_manifold(cfg: &mut RunConfig, a: &ManifoldArgs) -> Res<()> {
    let kind = a.manifold.clone().unwrap_or_else(|| cfg.manifold.kind().to_string());
    cfg.manifold = match (kind.as_str(), &cfg.manifold) {
        ("sphere", cur) => ManifoldParams::Sphere {
            radius: a.radius.unwrap_or(match cur {
                ManifoldParams::Sphere { radius } => *radius,
                _ => 1.0,
            }),
        },
        ("torus", cur) => {
            let (m0, r0) = match cur {
                ManifoldParams::Torus { major, minor } => (*major, *minor),
                _ => (2.0, 0.5),
            };
            ManifoldParams::Torus {
                major: a.major.unwrap_or(m0),
                minor: a.minor.unwrap_or(r0),
            }
        }
        (other, _) => return Err(CliError::Usage(format!("unknown manifold `{other}` (known: sphere, torus)"))),
    };
    if let Some(d) = a.dim {
        cfg.dim = d;
    }
    Ok(())
}

fn apply_noise(cfg: &mut RunConfig, a: &NoiseArgs) -> Res<()> {
    if let Some(kind) = &a.noise {
        cfg.noise = if kind == "clean" {
            NoiseSpec::clean()
        } else {
            NoiseSpec {
                kind: NoiseKind::parse(kind)?,
                ..cfg.noise
            }
        };
    }
    if let Some(q) = a.q {
        cfg.noise.q = q;
    }
    if let Some(l) = a.level {
        cfg.noise.level = l;
    }
    if let Some(s) = a.sigma2 {
        cfg.noise.sigma2 = s;
    }
    Ok(())
}

fn apply_train(cfg: &mut RunConfig, a: &TrainArgs) {
    let t = &mut cfg.train;
    if let Some(v) = a.batch {
        t.batch_size = v;
    }
    if let Some(v) = a.lr {
        t.learning_rate = v;
    }
    if let Some(v) = a.wd {
        t.weight_decay = v;
    }
    if let Some(v) = a.epochs {
        t.epochs = v;
        t.steps = None;
    }
    if a.steps.is_some() {
        t.steps = a.steps;
    }
    if let Some(v) = &a.schedule {
        t.schedule = v.clone();
    }
    if let Some(v) = &a.optimizer {
        t.optimizer = v.clone();
    }
    if let Some(v) = a.charts {
        cfg.charts = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
    }
}

/// The configured manifold in R^D; D = 3 uses the identity embedding,
/// larger D a random orthogonal one fixed by the seed.
fn surface(cfg: &RunConfig) -> Res<EmbeddedManifold> {
    let m = build_manifold(&cfg.manifold)?;
    let emb = if cfg.dim == 3 {
        Embedding::identity(3)
    } else {
        Embedding::random(cfg.dim, derive_seed(cfg.seed, &[purpose::EMBED]))?
    };
    Ok(EmbeddedManifold::new(m, emb))
}

pub fn run(cli: Cli) -> Res<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), cli.paper_config)?;
    match cli.command {
        Command::Generate {
            manifold,
            noise,
            n,
            seed,
            out,
            csv,
        } => {
            apply_manifold(&mut cfg, &manifold)?;
            apply_noise(&mut cfg, &noise)?;
            cfg.n = n.unwrap_or(cfg.n);
            cfg.seed = seed.unwrap_or(cfg.seed);
            generate(&cfg, &out, csv.as_deref())
        }
        Command::Train {
            data,
            out,
            history,
            train,
            seed,
            distill,
            manifold,
            q,
        } => {
            apply_train(&mut cfg, &train);
            apply_manifold(&mut cfg, &manifold)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            if let Some(q) = q {
                cfg.oracle.q = q;
            }
            train_cmd(&cfg, &data, &out, history.as_deref(), distill)
        }
        Command::Eval { model, data, hard, out } => eval_cmd(&cfg, &model, &data, hard, out.as_deref()),
        Command::Sweep { kind } => {
            let (name, args) = kind.split();
            apply_sweep(&mut cfg, args)?;
            sweep_cmd(&cfg, name, args)
        }
        Command::OracleCheck {
            manifold,
            q,
            atlas_q,
            atlas,
            save_atlas,
            samples,
            pairs,
            seed,
            out,
        } => {
            apply_manifold(&mut cfg, &manifold)?;
            let o = &mut cfg.oracle;
            o.q = q.unwrap_or(o.q);
            o.atlas_q = atlas_q.or(o.atlas_q);
            o.samples = samples.unwrap_or(o.samples);
            o.pairs = pairs.unwrap_or(o.pairs);
            cfg.seed = seed.unwrap_or(cfg.seed);
            oracle_check(&cfg, atlas.as_deref(), save_atlas.as_deref(), out.as_deref())
        }
    }
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn generate(cfg: &RunConfig, out: &Path, csv: Option<&Path>) -> Res<()> {
    let s = surface(cfg)?;
    let ds = make_dataset(&s, cfg.n, &cfg.noise, cfg.seed)?;
    let mut w = create(out)?;
    write_caeds(&ds, &mut w)?;
    w.flush().map_err(|e| CliError::io(out, e))?;
    // the binary layout is fixed, so provenance goes next to it
    write_json(&meta_path(out), &provenance(cfg, "generate"))?;
    if let Some(p) = csv {
        let mut w = create(p)?;
        comment_header(&mut w, cfg).map_err(|e| CliError::io(p, e))?;
        write_csv(&ds, &mut w)?;
        w.flush().map_err(|e| CliError::io(p, e))?;
    }
    println!(
        "n {} D {} d {} noise {} max |x-v| {:.6} mean |x-v|^2 {:.6}",
        ds.len(),
        ds.ambient_dim,
        ds.intrinsic_dim,
        ds.noise.kind.as_str(),
        ds.max_noise_norm(),
        ds.mean_noise_energy()
    );
    Ok(())
}

fn load_data(path: &Path) -> Res<PairedDataset> {
    read_caeds(open(path)?).map_err(|e| match e {
        chartae::Error::Io(e) => CliError::io(path, e),
        e => CliError::Io(format!("{}: {e}", path.display())),
    })
}

fn oracle_atlas(s: EmbeddedManifold, q: f64, chart_radius: Option<f64>, seed: u64) -> Res<Atlas> {
    let cover = build_cover(
        &s,
        &CoverConfig {
            q,
            seed,
            ..Default::default()
        },
    )?;
    Ok(build_atlas(
        s,
        cover,
        &AtlasConfig {
            seed,
            chart_radius,
            ..Default::default()
        },
    )?)
}

fn train_cmd(cfg: &RunConfig, data: &Path, out: &Path, history: Option<&Path>, use_oracle: bool) -> Res<()> {
    let ds = load_data(data)?;
    let mut tc = cfg.train.clone();
    tc.seed = cfg.seed;
    let (model, report): (ChartAutoencoder, TrainReport) = if use_oracle {
        if ds.ambient_dim != 3 {
            return Err(CliError::Usage("--distill needs data in D = 3".into()));
        }
        let s = surface(&RunConfig { dim: 3, ..cfg.clone() })?;
        let q = if ds.noise.kind == NoiseKind::NormalBounded && ds.noise.q > 0.0 {
            ds.noise.q
        } else {
            cfg.oracle.q
        };
        let radius = cfg.oracle.distill_chart_radius * s.reach();
        let atlas = oracle_atlas(s, q, Some(radius), cfg.seed)?;
        log::info!("distilling an atlas of {} charts", atlas.chart_count());
        let mut model = ChartAutoencoder::new(3, 2, atlas.chart_count(), cfg.hidden, cfg.seed)?;
        let report = distill(&mut model, &atlas, &ds.noisy, &tc)?;
        (model, report)
    } else {
        let mut model = ChartAutoencoder::new(ds.ambient_dim, ds.intrinsic_dim, cfg.charts, cfg.hidden, cfg.seed)?;
        let report = train(&mut model, &ds, &tc)?;
        (model, report)
    };
    let mut meta = provenance(cfg, "train");
    meta["data"] = json!(data.display().to_string());
    meta["distilled"] = json!(use_oracle);
    meta["final_loss"] = json!(report.final_loss());
    let mut w = create(out)?;
    save_model(&model, meta, &mut w)?;
    w.flush().map_err(|e| CliError::io(out, e))?;
    if let Some(p) = history {
        let mut w = create(p)?;
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            comment_header(w, cfg)?;
            writeln!(w, "epoch,loss")?;
            for (i, l) in report.history.iter().enumerate() {
                writeln!(w, "{i},{l}")?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| CliError::io(p, e))?;
    }
    match report.final_loss() {
        Some(l) => println!("epochs {} final loss {l:e}", report.history.len()),
        None => println!("epochs 0"),
    }
    Ok(())
}

fn eval_cmd(cfg: &RunConfig, model_path: &Path, data: &Path, hard: bool, out: Option<&Path>) -> Res<()> {
    let (model, meta) = load_model(open(model_path)?).map_err(|e| CliError::Io(format!("{}: {e}", model_path.display())))?;
    let ds = load_data(data)?;
    let r = evaluate(&model, &ds, hard)?;
    let mut report = provenance(cfg, "eval");
    report["model"] = json!(model_path.display().to_string());
    report["model_meta"] = meta;
    report["data"] = json!(data.display().to_string());
    report["n"] = json!(ds.len());
    report["hard"] = json!(hard);
    report["squared_test_error"] = json!(r.squared_test_error);
    report["usage"] = json!(r.usage);
    report["pruned"] = json!(r.pruned);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if let Some(p) = out {
        write_json(p, &report)?;
    }
    Ok(())
}

fn apply_sweep(cfg: &mut RunConfig, a: &SweepArgs) -> Res<()> {
    apply_manifold(cfg, &a.manifold)?;
    apply_noise(cfg, &a.noise)?;
    apply_train(cfg, &a.train);
    let s = &mut cfg.sweep;
    if let Some(v) = &a.grid {
        s.grid = v.clone();
    }
    s.n = a.n.unwrap_or(s.n);
    if let Some(v) = &a.levels {
        s.levels = v.clone();
    }
    if let Some(v) = &a.kinds {
        s.kinds = v.iter().map(|k| NoiseKind::parse(k)).collect::<chartae::Result<_>>()?;
    }
    if let Some(v) = &a.dims {
        s.dims = v.clone();
    }
    if let Some(v) = &a.chart_counts {
        s.chart_counts = v.clone();
    }
    s.runs = a.runs.unwrap_or(s.runs);
    s.test_n = a.test_n.unwrap_or(s.test_n);
    s.reference &= !a.no_reference;
    s.hard |= a.hard;
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    Ok(())
}

fn sweep_cmd(cfg: &RunConfig, name: &str, args: &SweepArgs) -> Res<()> {
    let sweep = SweepRegistry::with_builtins().get(name)?;
    let report = SweepReport::run(sweep.as_ref(), &cfg.sweep_config(), threads_from_env())?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let stem = format!("sweep_{name}");
    let csvs: Vec<(PathBuf, Option<&str>)> = if report.results.len() > 1 {
        report
            .results
            .iter()
            .map(|r| (dir.join(format!("{stem}_{}.csv", r.label)), Some(r.label.as_str())))
            .collect()
    } else {
        vec![(dir.join(format!("{stem}.csv")), None)]
    };
    for (path, label) in &csvs {
        let mut w = create(path)?;
        report.write_csv(&mut w, *label)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    let json_path = dir.join(format!("{stem}.json"));
    let mut w = create(&json_path)?;
    report.write_json(&mut w)?;
    w.flush().map_err(|e| CliError::io(&json_path, e))?;
    print!("{}", report.summary());
    for (path, _) in &csvs {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", json_path.display());
    Ok(())
}

fn oracle_check(cfg: &RunConfig, atlas_path: Option<&Path>, save: Option<&Path>, out: Option<&Path>) -> Res<()> {
    let o = &cfg.oracle;
    let s = surface(cfg)?;
    let tau = s.reach();
    if !(o.q >= 0.0 && o.q < tau) {
        return Err(CliError::Usage(format!("q = {} must lie in [0, tau = {tau})", o.q)));
    }
    let mut results: Vec<InvariantCheck> = vec![
        checks::projection_lipschitz(&s, o.q, o.pairs, cfg.seed)?,
        checks::tangent_angle(&s, o.pairs, cfg.seed)?,
        checks::packing_count(&s, o.cover_radius * tau, o.cover_samples, cfg.seed)?,
    ];
    let atlas = match atlas_path {
        Some(p) => Atlas::load(open(p)?).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => oracle_atlas(s, o.atlas_q.unwrap_or(o.q.min(0.3 * tau)), None, cfg.seed)?,
    };
    let aq = atlas.cover.q;
    results.push(checks::oracle_identity(&atlas, aq, o.samples, cfg.seed)?);
    results.push(checks::partition_of_unity(&atlas, aq, o.samples, cfg.seed)?);
    if let Some(p) = save {
        let mut w = create(p)?;
        atlas.save(&mut w)?;
        w.flush().map_err(|e| CliError::io(p, e))?;
    }
    println!("atlas: {} charts, {} bumps, q = {aq}", atlas.chart_count(), atlas.cover.len());
    for c in &results {
        println!("{}", c.line());
    }
    if let Some(p) = out {
        let mut report = provenance(cfg, "oracle-check");
        report["checks"] = serde_json::to_value(&results).expect("checks serialize");
        write_json(p, &report)?;
    }
    let failed: Vec<&str> = results.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
