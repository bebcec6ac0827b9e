//! Acceptance suite. Every criterion prints one PASS or FAIL line; the test
//! fails at the end if any criterion did.

use std::time::{Duration, Instant};

use meps_cli::execute;
use meps_core::asymptotic::{s_of_e, DosModel};
use meps_core::meps::dense::min_entropy_dense;
use meps_core::meps::min_entropy;
use meps_core::meps::oracle::brute_force_min_entropy;
use meps_core::thermal::{activatable_work, bath_decomposition, gibbs, work_bounds};
use meps_core::{delta_max, meps_at_entropy, DiagonalState, PopulationVector, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Sorted random levels in [0, 5), with repeated values now and then.
fn random_levels(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut levels: Vec<f64> = Vec::with_capacity(d);
    for _ in 0..d {
        if !levels.is_empty() && rng.gen_bool(0.2) {
            let i = rng.gen_range(0..levels.len());
            levels.push(levels[i]);
        } else {
            levels.push(rng.gen_range(0.0..5.0));
        }
    }
    levels.sort_by(f64::total_cmp);
    let e0 = levels[0];
    levels.iter().map(|e| e - e0).collect()
}

fn random_probs(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    // Sparse draws now and then, to reach the faces of the simplex.
    let raw: Vec<f64> = (0..d)
        .map(|_| {
            if rng.gen_bool(0.15) {
                0.0
            } else {
                -rng.gen_range(1e-12f64..1.0).ln()
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut p = vec![0.0; d];
        p[rng.gen_range(0..d)] = 1.0;
        return p;
    }
    raw.iter().map(|x| x / total).collect()
}

fn random_passive(rng: &mut ChaCha8Rng, spec: &Spectrum) -> PopulationVector {
    let d = spec.levels().unwrap().len();
    let mut p = random_probs(rng, d);
    p.sort_by(|a, b| b.total_cmp(a));
    PopulationVector::new(spec, p).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_gap: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for d in 3..=6 {
        let spec = Spectrum::from_levels(&random_levels(&mut rng, d)).unwrap();
        let (lo, hi) = (spec.ground_energy(), spec.mean_energy());
        for _ in 0..50 {
            let e = rng.gen_range(lo..=hi);
            let exact = min_entropy(&spec, e).unwrap();
            let brute = brute_force_min_entropy(&spec, e, 1e-3).unwrap();
            worst_gap = worst_gap.max((exact - brute).abs());
            worst_excess = worst_excess.max(exact - brute);
        }
    }
    outcome(
        worst_gap <= 1e-3 && worst_excess <= 1e-12,
        format!("max |S* - oracle| = {worst_gap:.3e}, max S* - oracle = {worst_excess:.3e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut drops = 0;
    let mut worst_dual = f64::INFINITY;
    for _ in 0..10 {
        let d = rng.gen_range(2..=50);
        let spec = Spectrum::from_levels(&random_levels(&mut rng, d)).unwrap();
        let (lo, hi) = (spec.ground_energy(), spec.mean_energy());
        let mut last = f64::NEG_INFINITY;
        for i in 0..200 {
            let e = lo + (hi - lo) * i as f64 / 199.0;
            let s = min_entropy(&spec, e).unwrap();
            if s < last - 1e-12 {
                drops += 1;
            }
            last = s;
            let back = meps_at_entropy(&spec, s).unwrap().energy;
            worst_dual = worst_dual.min(back - e);
        }
    }
    outcome(
        drops == 0 && worst_dual >= -1e-9,
        format!("{drops} decreases, min E'(S*(E)) - E = {worst_dual:.3e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for gap in [1.0, 0.37, 2.5, 1e-3, 40.0] {
        let spec = Spectrum::equally_spaced(2, gap).unwrap();
        for i in 0..100 {
            let s = 2f64.ln() * i as f64 / 99.0;
            worst = worst.max(delta_max(&spec, s).unwrap());
        }
    }
    outcome(worst <= 1e-12, format!("max delta_max = {worst:.3e}"))
}

fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn criterion_4() -> Outcome {
    let csv = execute(["meps", "region", "--equally-spaced", "4,1"]).unwrap();
    let rows = parse_rows(&csv);
    let below = rows.iter().filter(|r| r[1] < r[2]).count();
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let ends = first[0] == 0.0
        && (first[1] - first[2]).abs() <= 1e-9
        && last[0] == 1.5
        && (last[1] - last[2]).abs() <= 1e-9;
    let monotone = rows
        .windows(2)
        .all(|w| w[1][1] >= w[0][1] && w[1][2] >= w[0][2]);
    outcome(
        below == 0 && ends && monotone,
        format!(
            "{} rows, {below} with S_thermal < S_meps, endpoints equal: {ends}, nondecreasing: {monotone}",
            rows.len()
        ),
    )
}

/// Minimum of `sum_i p_{pi(i)} e_i` over all permutations (Heap's algorithm).
fn min_permuted_energy(p: &[f64], e: &[f64]) -> f64 {
    let mut perm: Vec<usize> = (0..p.len()).collect();
    let energy = |perm: &[usize]| perm.iter().zip(e).map(|(&i, ei)| p[i] * ei).sum::<f64>();
    let mut best = energy(&perm);
    let mut c = vec![0; p.len()];
    let mut i = 0;
    while i < p.len() {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(energy(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_slack = f64::INFINITY;
    let mut worst_perm: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..200 {
        let d = rng.gen_range(2..=20);
        let levels = random_levels(&mut rng, d);
        let spec = Spectrum::from_levels(&levels).unwrap();
        let rho = PopulationVector::new(&spec, random_probs(&mut rng, d)).unwrap();
        let w = rho.ergotropy();
        let (lower, upper) = work_bounds(&rho).unwrap();
        worst_slack = worst_slack.min(w - lower).min(upper - w);
        if d <= 7 {
            let brute = rho.energy() - min_permuted_energy(rho.probs(), rho.level_energies());
            worst_perm = worst_perm.max((brute - w).abs());
            checked += 1;
        }
    }
    outcome(
        worst_slack >= -1e-10 && worst_perm <= 1e-12,
        format!(
            "min slack = {worst_slack:.3e}, max |ergotropy - permutation search| = {worst_perm:.3e} over {checked} states"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_w = f64::INFINITY;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..200 {
        let d = rng.gen_range(2..=20);
        let spec = Spectrum::from_levels(&random_levels(&mut rng, d)).unwrap();
        let sigma = random_passive(&mut rng, &spec);
        let w = activatable_work(&sigma).unwrap();
        let dm = delta_max(&spec, sigma.entropy()).unwrap();
        min_w = min_w.min(w);
        worst_excess = worst_excess.max(w - dm);
    }
    let mut worst_gibbs: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.gen_range(2..=20);
        let spec = Spectrum::from_levels(&random_levels(&mut rng, d)).unwrap();
        let beta = rng.gen_range(0.0..5.0);
        let tau = gibbs(&spec, beta).unwrap().populations().unwrap();
        worst_gibbs = worst_gibbs.max(activatable_work(&tau).unwrap());
    }
    outcome(
        min_w >= 0.0 && worst_excess <= 1e-9 && worst_gibbs <= 1e-9,
        format!(
            "min W_act = {min_w:.3e}, max W_act - delta_max = {worst_excess:.3e}, max Gibbs W_act = {worst_gibbs:.3e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [4, 8, 12] {
        let spec = Spectrum::qubit_ensemble(n, 1.0).unwrap();
        let levels = spec.levels().unwrap();
        let top = n as f64 / 2.0;
        for i in 0..50 {
            let e = top * i as f64 / 49.0;
            let agg = min_entropy(&spec, e).unwrap();
            let dense = min_entropy_dense(&levels, e).unwrap().entropy;
            worst = worst.max((agg - dense).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |aggregated - dense| = {worst:.3e}"),
    )
}

/// Residual sum of squares of the least-squares line through `(x, y)`, and R^2.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (my + slope * (a - mx));
            r * r
        })
        .sum();
    (rss, 1.0 - rss / syy)
}

fn inset_values(spectra: &[Spectrum]) -> Vec<f64> {
    spectra
        .iter()
        .map(|s| {
            let ln_d = s.ln_dimension();
            delta_max(s, 0.1 * ln_d).unwrap() / ln_d
        })
        .collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn criterion_8() -> Outcome {
    let ds = [50usize, 100, 200, 400];
    let spectra: Vec<Spectrum> = ds
        .iter()
        .map(|&d| Spectrum::equally_spaced(d, 1.0).unwrap())
        .collect();
    let a = inset_values(&spectra);
    let x: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
    let (_, r2) = line_fit(&x, &a);
    let a_ok = strictly_increasing(&a) && r2 >= 0.99;

    let ns = [10usize, 50, 100, 200];
    let spectra: Vec<Spectrum> = ns
        .iter()
        .map(|&n| Spectrum::qubit_ensemble(n, 1.0).unwrap())
        .collect();
    let b = inset_values(&spectra);
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let (rss_lin, _) = line_fit(&x, &b);
    let (rss_log, _) = line_fit(&ln_x, &b);
    let b_increasing = strictly_increasing(&b);
    let b_ok = b_increasing && rss_log < rss_lin;
    outcome(
        a_ok && b_ok,
        format!(
            "(a) {a:.6?} R^2 = {r2:.6}; (b) {b:.6?} increasing: {b_increasing}, RSS ln n = {rss_log:.3e} vs n = {rss_lin:.3e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let e_max = 50.0;
    let models = [
        ("poly a=0", DosModel::polynomial(0.0, 1.0, e_max).unwrap()),
        ("poly a=1", DosModel::polynomial(1.0, 1.0, e_max).unwrap()),
        ("exp b=1", DosModel::exponential(1.0, e_max).unwrap()),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, model) in &models {
        for r in [0.05, 0.1, 0.2] {
            let e = r * e_max;
            let target = s_of_e(model, e).unwrap();
            let errs: Vec<f64> = [200, 400, 800]
                .iter()
                .map(|&lv| (min_entropy(&model.discretize(lv).unwrap(), e).unwrap() - target).abs())
                .collect();
            if !(errs[1] < errs[0] && errs[2] < errs[1]) {
                ok = false;
                notes.push(format!("{name} E/Em={r} errors {errs:.3?}"));
            }
        }
    }
    let e = 0.05 * e_max;
    let exp_s = min_entropy(&models[2].1.discretize(800).unwrap(), e).unwrap();
    let ratio = exp_s / e;
    if (ratio - 1.0).abs() > 0.15 {
        ok = false;
    }
    notes.push(format!("exp S*/E = {ratio:.4}"));
    for a in [0.0, 1.0] {
        let near = DosModel::polynomial(a, 1.0, e_max)
            .unwrap()
            .discretize(800)
            .unwrap();
        let far = DosModel::polynomial(a, 1.0, 10.0 * e_max)
            .unwrap()
            .discretize(800)
            .unwrap();
        let drop = min_entropy(&near, e).unwrap() / min_entropy(&far, e).unwrap();
        if drop < 2.0 {
            ok = false;
        }
        notes.push(format!("poly a={a} drop x{drop:.2}"));
    }
    outcome(ok, notes.join(", "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(2..=20);
        let spec = Spectrum::from_levels(&random_levels(&mut rng, d)).unwrap();
        let sigma = random_passive(&mut rng, &spec);
        let beta = rng.gen_range(0.05..5.0);
        worst = worst.max(bath_decomposition(&sigma, beta).unwrap().residual().abs());
    }
    outcome(worst <= 1e-10, format!("max residual = {worst:.3e}"))
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.txt");
    std::fs::write(&state, "0.1\n0.2\n0.3\n0.4\n").unwrap();
    let state = state.to_str().unwrap().to_string();
    let configs: Vec<Vec<&str>> = vec![
        vec!["meps", "meps", "--qubits", "20,1", "--grid", "21"],
        vec![
            "meps",
            "meps",
            "--equally-spaced",
            "30,1",
            "--e-range",
            "0,14.5",
            "--grid",
            "21",
        ],
        vec!["meps", "region", "--poly-dos", "1,1,10,50", "--grid", "21"],
        vec![
            "meps", "scaling", "--mode", "qubits", "--sizes", "10,20", "--grid", "11",
        ],
        vec!["meps", "scaling", "--sizes", "20,40", "--grid", "11"],
        vec![
            "meps",
            "bounds",
            "--equally-spaced",
            "4,1",
            "--state",
            &state,
            "--beta",
            "0.7",
        ],
        vec![
            "meps",
            "asymptotic",
            "--exp-dos",
            "1,20,100",
            "--grid",
            "21",
        ],
    ];
    let mut differing = Vec::new();
    for cfg in &configs {
        let first = execute(cfg.iter().copied()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let second = pool.install(|| execute(cfg.iter().copied()).unwrap());
        let third = execute(cfg.iter().copied()).unwrap();
        if first != second || first != third {
            differing.push(cfg[1]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} configurations, differing: {differing:?}", configs.len()),
    )
}

/// A check and its runtime limit.
type Criterion = (fn() -> Outcome, Option<Duration>);

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        (criterion_1, Some(Duration::from_secs(60))),
        (criterion_2, None),
        (criterion_3, None),
        (criterion_4, None),
        (criterion_5, None),
        (criterion_6, None),
        (criterion_7, Some(Duration::from_secs(60))),
        (criterion_8, Some(Duration::from_secs(300))),
        (criterion_9, None),
        (criterion_10, None),
        (criterion_11, None),
    ];
    let mut failed = Vec::new();
    for (i, (run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = run();
        let took = start.elapsed();
        if let Some(limit) = limit {
            if took > *limit {
                out.ok = false;
                out.detail += &format!(" (runtime {took:.1?} over {limit:?})");
            }
        }
        let tag = if out.ok { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {} ({took:.2?})", i + 1, out.detail);
        if !out.ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
