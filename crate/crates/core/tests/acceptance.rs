//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances are pinned below.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chartae::atlas::{build_atlas, build_cover, Atlas, AtlasConfig, CoverConfig};
use chartae::cae::{loss_and_grad, loss_mse, CaeGrads, ChartAutoencoder};
use chartae::checks::{covering_count, oracle_identity, partition_of_unity, projection_lipschitz, tangent_angle};
use chartae::geometry::{build_manifold, EmbeddedManifold, ManifoldParams, NoiseSpec};
use chartae::harness::{SweepConfig, SweepN, SweepReport, SweepResult};
use chartae::matrix::{affine, Mat};
use chartae::nn::{build_mult_network, Grads, Mlp};
use chartae::rng::{self, purpose};
use rand::Rng as _;

const ORACLE_Q: f64 = 0.3;
const ORACLE_SAMPLES: usize = 1000;
const PAIRS: usize = 10_000;
const LIPSCHITZ_RATIOS: [f64; 3] = [0.1, 0.5, 0.9];
const COVER_RADIUS: f64 = 0.25;
const COVER_SAMPLES: usize = 200_000;
const MLP_FD_TOL: f64 = 1e-5;
const CAE_FD_TOL: f64 = 1e-4;
const FD_PARAMS: usize = 40;
const KINK_GUARD: f64 = 1e-8;
const MULT_EPSILONS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const MULT_GRID: usize = 401;
const SLOPE_BAND: (f64, f64) = (-0.8, -0.3);
const DICHOTOMY_FACTOR: f64 = 3.0;
const MASTER_SEED: u64 = 0;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &'static str, budget: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let outcome = Outcome {
        id,
        name,
        pass: ok && in_time,
        detail: format!("{detail}; {:.1} s of {} s{}", took.as_secs_f64(), budget.as_secs(), if in_time { "" } else { " (over budget)" }),
    };
    println!("{} {:>2} {}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.id, outcome.name, outcome.detail);
    outcome
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn surface(params: ManifoldParams) -> EmbeddedManifold {
    EmbeddedManifold::base(build_manifold(&params).unwrap())
}

fn sphere() -> EmbeddedManifold {
    surface(ManifoldParams::Sphere { radius: 1.0 })
}

fn torus() -> EmbeddedManifold {
    surface(ManifoldParams::Torus { major: 2.0, minor: 0.5 })
}

fn atlas(s: EmbeddedManifold, q: f64) -> Atlas {
    let cover = build_cover(&s, &CoverConfig { q, ..Default::default() }).unwrap();
    build_atlas(s, cover, &AtlasConfig::default()).unwrap()
}

/// Unit-sphere atlas at `ORACLE_Q`, built once; criterion 1 pays for it.
fn sphere_atlas() -> &'static Atlas {
    static ATLAS: OnceLock<Atlas> = OnceLock::new();
    ATLAS.get_or_init(|| atlas(sphere(), ORACLE_Q))
}

fn oracle_identity_on_sphere() -> (bool, String) {
    let c = oracle_identity(sphere_atlas(), ORACLE_Q, ORACLE_SAMPLES, MASTER_SEED).unwrap();
    (c.pass, c.line())
}

fn partition_of_unity_on_both() -> (bool, String) {
    let sphere_check = partition_of_unity(sphere_atlas(), ORACLE_Q, ORACLE_SAMPLES, MASTER_SEED).unwrap();
    let t = torus();
    let q = ORACLE_Q * t.reach();
    let torus_check = partition_of_unity(&atlas(t, q), q, ORACLE_SAMPLES, MASTER_SEED).unwrap();
    (
        sphere_check.pass && torus_check.pass,
        format!("sphere [{}] torus [{}]", sphere_check.line(), torus_check.line()),
    )
}

fn projection_lipschitz_all() -> (bool, String) {
    let s = sphere();
    let tau = s.reach();
    let checks: Vec<_> = LIPSCHITZ_RATIOS
        .iter()
        .map(|&r| projection_lipschitz(&s, r * tau, PAIRS, MASTER_SEED).unwrap())
        .collect();
    let lines: Vec<String> = checks.iter().map(|c| format!("[{}]", c.line())).collect();
    (checks.iter().all(|c| c.pass), lines.join(" "))
}

fn covering() -> (bool, String) {
    let c = covering_count(&sphere(), COVER_RADIUS, COVER_SAMPLES, MASTER_SEED).unwrap();
    (c.pass, c.line())
}

fn tangent_angles() -> (bool, String) {
    let c = tangent_angle(&sphere(), PAIRS, MASTER_SEED).unwrap();
    (c.pass, c.line())
}

fn random_batch(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut r = rng::stream(seed, purpose::CHECK, &[]);
    Mat::from_vec(rows, cols, (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Signs of every hidden pre-activation, or `None` when one lies within the
/// kink guard.
fn relu_pattern(m: &Mlp, x: &Mat, pattern: &mut Vec<bool>) -> bool {
    let mut cur = x.clone();
    for l in &m.layers[..m.layers.len() - 1] {
        let mut next = Mat::zeros(cur.rows, l.outputs);
        affine(&cur, &l.wt, &l.bias, &mut next);
        if next.data.iter().any(|v| v.abs() < KINK_GUARD) {
            return false;
        }
        pattern.extend(next.data.iter().map(|&v| v > 0.0));
        next.data.iter_mut().for_each(|v| *v = v.max(0.0));
        cur = next;
    }
    true
}

fn cae_pattern(m: &ChartAutoencoder, x: &Mat) -> Option<Vec<bool>> {
    let mut p = Vec::new();
    if !relu_pattern(&m.encoder, x, &mut p) {
        return None;
    }
    let coords = m.encode(x).unwrap().coords;
    let d = m.intrinsic_dim;
    for (j, dec) in m.decoders.iter().enumerate() {
        if !relu_pattern(dec, &coords.columns(j * d, d), &mut p) {
            return None;
        }
    }
    Some(p)
}

fn locate(sizes: &[usize], mut idx: usize) -> (usize, usize) {
    let mut g = 0;
    while idx >= sizes[g] {
        idx -= sizes[g];
        g += 1;
    }
    (g, idx)
}

/// Central differences on `FD_PARAMS` random parameters, skipping those
/// whose perturbation moves a ReLU across its kink. Returns the worst
/// relative error and the number of parameters checked.
fn fd_worst(
    params: &mut dyn FnMut(usize, Option<f64>) -> f64,
    loss: &dyn Fn() -> f64,
    pattern: &dyn Fn() -> Option<Vec<bool>>,
    analytic: &[f64],
    seed: u64,
) -> (f64, usize) {
    let mut r = rng::stream(seed, purpose::CHECK, &[1]);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..FD_PARAMS {
        let idx = r.gen_range(0..analytic.len());
        let theta = params(idx, None);
        let h = 1e-6 * theta.abs().max(1.0);
        params(idx, Some(theta + h));
        let (up, p_up) = (loss(), pattern());
        params(idx, Some(theta - h));
        let (down, p_down) = (loss(), pattern());
        params(idx, Some(theta));
        if p_up.is_none() || p_up != p_down {
            continue;
        }
        let fd = (up - down) / (2.0 * h);
        let scale = fd.abs().max(analytic[idx].abs());
        if scale < 1e-10 {
            checked += 1;
            continue;
        }
        worst = worst.max((fd - analytic[idx]).abs() / scale);
        checked += 1;
    }
    (worst, checked)
}

fn gradient_checks() -> (bool, String) {
    let mut mlp_worst = 0.0f64;
    let mut mlp_checked = 0;
    for trial in 0..5u64 {
        let mut r = rng::stream(MASTER_SEED, purpose::INIT, &[trial]);
        let m = std::cell::RefCell::new(Mlp::new(&[3, 8, 8, 2], &mut r).unwrap());
        let x = random_batch(6, 3, 100 + trial);
        let analytic: Vec<f64> = {
            let m = m.borrow();
            let cache = m.forward_cached(&x).unwrap();
            let mut g = Grads::zeros_like(&m);
            m.backward(&cache, cache.output(), &mut g);
            g.groups().concat()
        };
        let sizes: Vec<usize> = m.borrow_mut().param_groups().iter().map(|s| s.len()).collect();
        let mut params = |idx: usize, set: Option<f64>| {
            let (g, off) = locate(&sizes, idx);
            let mut m = m.borrow_mut();
            let mut groups = m.param_groups();
            if let Some(v) = set {
                groups[g][off] = v;
            }
            groups[g][off]
        };
        let loss = || 0.5 * m.borrow().forward(&x).unwrap().data.iter().map(|v| v * v).sum::<f64>();
        let pattern = || {
            let mut p = Vec::new();
            relu_pattern(&m.borrow(), &x, &mut p).then_some(p)
        };
        let (w, c) = fd_worst(&mut params, &loss, &pattern, &analytic, trial);
        mlp_worst = mlp_worst.max(w);
        mlp_checked += c;
    }

    let m = std::cell::RefCell::new(ChartAutoencoder::new(4, 2, 3, 10, MASTER_SEED).unwrap());
    let x = random_batch(8, 4, 200);
    let v = random_batch(8, 4, 201);
    let analytic: Vec<f64> = {
        let m = m.borrow();
        let mut g = CaeGrads::zeros_like(&m);
        loss_and_grad(&m, &x, &v, &mut g).unwrap();
        g.groups().concat()
    };
    let sizes: Vec<usize> = m.borrow_mut().param_groups().iter().map(|s| s.len()).collect();
    let mut params = |idx: usize, set: Option<f64>| {
        let (g, off) = locate(&sizes, idx);
        let mut m = m.borrow_mut();
        let mut groups = m.param_groups();
        if let Some(val) = set {
            groups[g][off] = val;
        }
        groups[g][off]
    };
    let loss = || loss_mse(&m.borrow(), &x, &v).unwrap();
    let pattern = || cae_pattern(&m.borrow(), &x);
    let (cae_worst, cae_checked) = fd_worst(&mut params, &loss, &pattern, &analytic, 7);

    let pass = mlp_worst < MLP_FD_TOL && cae_worst < CAE_FD_TOL && mlp_checked >= 100 && cae_checked >= 20;
    (
        pass,
        format!(
            "MLP worst relative error {mlp_worst:.3e} < {MLP_FD_TOL:e} over {mlp_checked} parameters; \
             CAE worst {cae_worst:.3e} < {CAE_FD_TOL:e} over {cae_checked} parameters"
        ),
    )
}

fn multiplication() -> (bool, String) {
    let step = 2.0 / (MULT_GRID - 1) as f64;
    let mut rows = Vec::with_capacity(MULT_GRID * MULT_GRID);
    for i in 0..MULT_GRID {
        for j in 0..MULT_GRID {
            rows.push(vec![-1.0 + i as f64 * step, -1.0 + j as f64 * step]);
        }
    }
    let grid = Mat::from_rows(&rows).unwrap();
    let mut zero_rows = Vec::new();
    for k in 0..MULT_GRID {
        let t = -1.0 + k as f64 * step;
        zero_rows.push(vec![t, 0.0]);
        zero_rows.push(vec![0.0, t]);
    }
    let zeros = Mat::from_rows(&zero_rows).unwrap();
    let mut pass = true;
    let mut depths = Vec::new();
    let mut parts = Vec::new();
    for &eps in &MULT_EPSILONS {
        let net = build_mult_network(1.0, eps).unwrap();
        let y = net.forward(&grid).unwrap();
        let worst = rows.iter().zip(&y.data).map(|(r, v)| (v - r[0] * r[1]).abs()).fold(0.0, f64::max);
        let exact_zero = net.forward(&zeros).unwrap().data.iter().all(|&v| v == 0.0);
        pass &= worst <= eps && exact_zero;
        depths.push(net.depth());
        parts.push(format!("eps {eps:e}: sup error {worst:.3e}, depth {}, zero row exact {exact_zero}", net.depth()));
    }
    let monotone = depths.windows(2).all(|w| w[0] < w[1]);
    (pass && monotone, format!("{}; depth increasing {monotone}", parts.join("; ")))
}

fn slope_config() -> SweepConfig {
    SweepConfig {
        runs: 5,
        reference: false,
        master_seed: MASTER_SEED,
        ..SweepConfig::default()
    }
}

fn slope_sweep() -> SweepResult {
    let report = SweepReport::run(&SweepN, &slope_config(), None).unwrap();
    report.results.into_iter().next().unwrap()
}

fn slope(r: &SweepResult) -> (bool, String) {
    let curve: Vec<String> = r.curve().iter().map(|(n, e)| format!("{n}:{e:.3e}")).collect();
    match &r.fit {
        Some(f) => (
            f.slope >= SLOPE_BAND.0 && f.slope <= SLOPE_BAND.1,
            format!("slope {:.4} in [{}, {}]; mean errors {}", f.slope, SLOPE_BAND.0, SLOPE_BAND.1, curve.join(" ")),
        ),
        None => (false, format!("slope undefined; mean errors {}", curve.join(" "))),
    }
}

fn dichotomy() -> (bool, String) {
    let base = SweepConfig {
        manifold: ManifoldParams::Sphere { radius: 2.0 },
        grid: vec![2048, 4096, 8192],
        runs: 1,
        reference: true,
        master_seed: MASTER_SEED,
        ..SweepConfig::default()
    };
    let normal = SweepConfig {
        noise: NoiseSpec::normal(1.5, 1.0),
        ..base.clone()
    };
    let gaussian = SweepConfig {
        noise: NoiseSpec::gaussian(1.0),
        reference: false,
        ..base
    };
    let rn = SweepReport::run(&SweepN, &normal, None).unwrap().results.remove(0);
    let rg = SweepReport::run(&SweepN, &gaussian, None).unwrap().results.remove(0);
    let (Some(normal_min), Some(free)) = (rn.min_error, rn.noise_free_error) else {
        return (false, "normal sweep or reference produced no error".into());
    };
    let Some(gauss_min) = rg.min_error else {
        return (false, "gaussian sweep produced no error".into());
    };
    let pass = normal_min <= DICHOTOMY_FACTOR * free && gauss_min >= DICHOTOMY_FACTOR * normal_min;
    (
        pass,
        format!(
            "noise-free {free:.3e}; normal min {normal_min:.3e} ({:.2}x noise-free, need <= {DICHOTOMY_FACTOR}); \
             gaussian min {gauss_min:.3e} ({:.2}x normal, need >= {DICHOTOMY_FACTOR})",
            normal_min / free,
            gauss_min / normal_min
        ),
    )
}

fn error_bits(r: &SweepResult) -> Vec<Option<u64>> {
    r.run_errors().into_iter().map(|e| e.map(f64::to_bits)).collect()
}

fn main() {
    let mut outcomes = vec![
        run(1, "oracle identity", secs(10), oracle_identity_on_sphere),
        run(2, "partition of unity", secs(10), partition_of_unity_on_both),
        run(3, "projection Lipschitz", secs(10), projection_lipschitz_all),
        run(4, "covering bound", secs(30), covering),
        run(5, "tangent angle", secs(10), tangent_angles),
        run(6, "gradient correctness", secs(60), gradient_checks),
        run(7, "multiplication network", secs(30), multiplication),
    ];
    let mut first = None;
    outcomes.push(run(8, "sample-complexity slope", secs(45 * 60), || {
        let r = slope_sweep();
        let out = slope(&r);
        first = Some(r);
        out
    }));
    outcomes.push(run(9, "denoising dichotomy", secs(30 * 60), dichotomy));
    outcomes.push(run(10, "determinism", secs(45 * 60), || {
        let again = slope_sweep();
        let a = error_bits(first.as_ref().unwrap());
        let b = error_bits(&again);
        let same = a == b;
        (same, format!("{} per-run errors, identical bits {same}", a.len()))
    }));
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| format!("{} {}", o.id, o.name)).collect();
    println!("{} of {} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
