//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use cbrml::cart::{RegressionTree, TreeParams};
use cbrml::data::{generate_synthetic, split, GeneratorConfig, SplitSpec, Standardizer};
use cbrml::ensembles::{BoostParams, BoostedTrees};
use cbrml::kernel::{solve_dual, SvrParams};
use cbrml::metrics::Metrics;
use cbrml::neural::{Activation, MlpNet};
use cbrml::rng::rng;
use cbrml::selection::{fit_fold, make_folds, REPORT_COLUMNS};
use cbrml::{values, Family, ModelSpec, ParamGrid, ParamSet};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_time(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

// 1. metrics against direct formulas

fn criterion_metrics() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(2..60);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-50.0..50.0)).collect();
        let yhat: Vec<f64> = y.iter().map(|v| v + r.random_range(-10.0..10.0)).collect();
        let got = Metrics::compute(&y, &yhat).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let ybar = y.iter().sum::<f64>() / nf;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        let mut abs = 0.0;
        for i in 0..n {
            ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
            ss_tot += (y[i] - ybar) * (y[i] - ybar);
            abs += (y[i] - yhat[i]).abs();
        }
        let want = [1.0 - ss_res / ss_tot, abs / nf, (ss_res / nf).sqrt()];
        for (g, w) in [got.r2, got.mae, got.rmse].iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
        ensure(got.rmse >= got.mae, || format!("rmse {} < mae {}", got.rmse, got.mae))?;
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    check_time(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("1000 pairs, max deviation {worst:.1e}"))
}

// 2. depth-1 CART against exhaustive search

/// Best (feature, threshold, sse) over every midpoint split, scanning
/// features then thresholds in increasing order and keeping the first of
/// any tied minimum.
fn brute_force_stump(x: &Array2<f64>, y: &[f64]) -> Option<(usize, f64, f64)> {
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let all: Vec<usize> = (0..y.len()).collect();
    let total = sse(&all);
    let mut best: Option<(usize, f64, f64)> = None;
    for j in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(j).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| x[[i, j]] <= t);
            let s = sse(&l) + sse(&r);
            if best.is_none_or(|(_, _, b)| s < b - 1e-9 * total.max(1.0)) {
                best = Some((j, t, s));
            }
        }
    }
    best.filter(|&(_, _, s)| total - s > 1e-9 * total.max(1.0))
}

fn criterion_cart() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let params = TreeParams {
        max_depth: Some(1),
        ..TreeParams::default()
    };
    let mut split_cases = 0;
    for case in 0..50 {
        let n = r.random_range(2..=40);
        // small integer grids make exact ties common
        let levels = r.random_range(2..8);
        let x = Array2::from_shape_fn((n, 3), |_| r.random_range(0..levels) as f64);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64).collect();
        let tree = RegressionTree::fit(x.view(), &y, &params).map_err(|e| e.to_string())?;
        let got: Vec<(usize, f64, f64)> = tree.splits().collect();
        match brute_force_stump(&x, &y) {
            None => ensure(got.is_empty(), || format!("case {case}: unexpected split {got:?}"))?,
            Some((j, t, s)) => {
                split_cases += 1;
                ensure(got.len() == 1 && got[0].0 == j && got[0].1 == t, || {
                    format!("case {case}: tree split {got:?}, exhaustive best feature {j} threshold {t} sse {s}")
                })?;
                let pred = tree.predict(x.view());
                let tree_sse: f64 = pred.iter().zip(&y).map(|(p, v)| (p - v).powi(2)).sum();
                ensure((tree_sse - s).abs() <= 1e-9 * s.max(1.0), || {
                    format!("case {case}: leaf means give sse {tree_sse}, expected {s}")
                })?;
            }
        }
    }
    check_time(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("50 datasets ({split_cases} with a split) match"))
}

// 3. backprop against central differences

fn half_mse_loss(net: &MlpNet, x: &Array2<f64>, z: &[f64], alpha: f64) -> f64 {
    let out = net.forward(x.view());
    let n = z.len() as f64;
    let data: f64 = out.iter().zip(z).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / n;
    let penalty: f64 = net.layers.iter().flat_map(|l| l.weights.iter()).map(|w| w * w).sum();
    0.5 * data + 0.5 * alpha * penalty
}

/// Smallest |pre-activation| over hidden units, the distance to the
/// nearest ReLU kink.
fn kink_margin(net: &MlpNet, x: &Array2<f64>) -> f64 {
    let mut a = x.clone();
    let mut margin = f64::INFINITY;
    for layer in &net.layers[..net.layers.len() - 1] {
        let pre = a.dot(&layer.weights) + &layer.bias;
        margin = pre.iter().fold(margin, |m, v| m.min(v.abs()));
        a = pre.mapv(|v| v.max(0.0));
    }
    margin
}

fn criterion_mlp_gradient() -> Outcome {
    let start = Instant::now();
    let mut r = rng(303);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for case in 0..20 {
        let d = r.random_range(1..5);
        let depth = r.random_range(1..3);
        let hidden: Vec<usize> = (0..depth).map(|_| r.random_range(2..6)).collect();
        let act = if case % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let mut net = MlpNet::init(d, &hidden, act, &mut r);
        for l in net.layers.iter_mut() {
            l.bias.mapv_inplace(|_| r.random_range(-0.5..0.5));
        }
        let n = r.random_range(3..10);
        // central differences are only valid away from ReLU kinks
        let mut x = Array2::from_shape_fn((n, d), |_| r.random_range(-2.0..2.0));
        while act == Activation::Relu && kink_margin(&net, &x) < 1e-3 {
            x = Array2::from_shape_fn((n, d), |_| r.random_range(-2.0..2.0));
        }
        let z: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let alpha = [0.0, 1e-3, 0.1][case % 3];
        let (_, grad) = net.loss_and_gradient(x.view(), &z, alpha);
        let base = net.flat_params();
        ensure(grad.len() == base.len(), || format!("case {case}: gradient length {}", grad.len()))?;
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] = base[k] + h;
            net.assign_flat(&p);
            let up = half_mse_loss(&net, &x, &z, alpha);
            p[k] = base[k] - h;
            net.assign_flat(&p);
            let down = half_mse_loss(&net, &x, &z, alpha);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-5);
            worst = worst.max(rel);
        }
        net.assign_flat(&base);
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    check_time(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("20 networks, max relative error {worst:.1e}"))
}

// 4. SVR optimality conditions

fn criterion_svr_kkt() -> Outcome {
    let start = Instant::now();
    let mut r = rng(404);
    let mut worst_kkt: f64 = 0.0;
    for case in 0..100 {
        let n = r.random_range(2..=100);
        let d = r.random_range(1..5);
        let x = Array2::from_shape_fn((n, d), |_| r.random_range(-2.0..2.0));
        let z: Vec<f64> = x.rows().into_iter().map(|row| f64::sin(row.sum()) + r.random_range(-0.3..0.3)).collect();
        let p = SvrParams {
            c: [0.1, 1.0, 10.0][case % 3],
            epsilon: [0.01, 0.1, 0.5][(case / 3) % 3],
            gamma: Some(r.random_range(0.1..2.0)),
            ..SvrParams::default()
        };
        let sol = solve_dual(x.view(), &z, &p).map_err(|e| e.to_string())?;
        let sum: f64 = sol.beta.iter().sum();
        ensure(sum.abs() <= 1e-6, || format!("case {case}: sum of beta {sum:e}"))?;
        ensure(sol.beta.iter().all(|b| b.abs() <= p.c), || format!("case {case}: beta outside [-C, C]"))?;
        // recompute decision values with an independent RBF kernel
        let f: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d2: f64 = (0..d).map(|k| (x[[i, k]] - x[[j, k]]).powi(2)).sum();
                        sol.beta[j] * (-sol.gamma * d2).exp()
                    })
                    .sum::<f64>()
                    + sol.b
            })
            .collect();
        for i in 0..n {
            let (beta, res) = (sol.beta[i], z[i] - f[i]);
            let at_upper = beta >= p.c - 1e-12;
            let at_lower = beta <= -p.c + 1e-12;
            // beta > 0 requires res >= eps (= eps when free); beta < 0 mirrors it;
            // beta = 0 requires |res| <= eps
            let v = if beta == 0.0 {
                (res.abs() - p.epsilon).max(0.0)
            } else if beta > 0.0 {
                if at_upper {
                    (p.epsilon - res).max(0.0)
                } else {
                    (res - p.epsilon).abs()
                }
            } else if at_lower {
                (res + p.epsilon).max(0.0)
            } else {
                (res + p.epsilon).abs()
            };
            worst_kkt = worst_kkt.max(v);
        }
        ensure(worst_kkt <= 1e-3, || format!("case {case}: KKT violation {worst_kkt:e}"))?;
    }
    check_time(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("100 problems, max KKT violation {worst_kkt:.1e}"))
}

// 5. gradient boosting training loss per stage

fn criterion_boosting() -> Outcome {
    let start = Instant::now();
    let mut r = rng(505);
    for case in 0..20 {
        let n = r.random_range(10..80);
        let d = r.random_range(1..5);
        let x = Array2::from_shape_fn((n, d), |_| r.random_range(0.0..10.0));
        let y: Vec<f64> = x.rows().into_iter().map(|row| row[0] * row[0] + r.random_range(-5.0..5.0)).collect();
        let p = BoostParams {
            n_estimators: 50,
            learning_rate: [0.05, 0.1, 0.5, 1.0][case % 4],
            max_depth: 1 + case % 4,
            subsample: 1.0,
            seed: case as u64,
        };
        let model = BoostedTrees::fit_gradient(x.view(), &y, &p).map_err(|e| e.to_string())?;
        let mses: Vec<f64> = model
            .staged_predict(x.view())
            .iter()
            .map(|pred| pred.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64)
            .collect();
        ensure(mses.len() == 51, || format!("case {case}: {} stages", mses.len()))?;
        for (m, w) in mses.windows(2).enumerate() {
            ensure(w[1] <= w[0] * (1.0 + 1e-12), || format!("case {case}: mse rose at stage {}: {} -> {}", m + 1, w[0], w[1]))?;
        }
    }
    check_time(start.elapsed(), Duration::from_secs(10))?;
    Ok("20 datasets, training MSE never rises".into())
}

// 6. folds, grids, leakage and split sizes

fn criterion_protocol() -> Outcome {
    let start = Instant::now();
    let mut r = rng(606);
    for t in 0..200 {
        let n = r.random_range(2..300);
        let k = r.random_range(2..=n.min(12));
        let seed = r.random::<u64>();
        let plan = make_folds(n, k, seed).map_err(|e| e.to_string())?;
        let mut seen = vec![0usize; n];
        for (train, val) in &plan.folds {
            ensure(train.len() + val.len() == n, || format!("triple {t}: fold does not cover all rows"))?;
            ensure(val.len() == n / k || val.len() == n / k + 1, || format!("triple {t}: fold size {}", val.len()))?;
            let tr: BTreeSet<usize> = train.iter().copied().collect();
            ensure(val.iter().all(|i| !tr.contains(i)), || format!("triple {t}: train/validation overlap"))?;
            for &i in val {
                seen[i] += 1;
            }
        }
        ensure(seen.iter().all(|&c| c == 1), || format!("triple {t}: rows not validated exactly once"))?;
    }

    for family in Family::ALL {
        let grid = family.default_grid();
        let expected: usize = grid.0.values().map(Vec::len).product();
        let got = grid.candidates().map_err(|e| e.to_string())?.len();
        ensure(got == expected, || format!("{}: {got} candidates, product {expected}", family.label()))?;
    }
    let grid = ParamGrid::new()
        .with("a", values![1i64, 2i64, 3i64])
        .with("b", values!["x", "y"])
        .with("c", values![0.5, 1.5, 2.5, 3.5]);
    ensure(grid.candidates().map_err(|e| e.to_string())?.len() == 24, || "3x2x4 grid".into())?;

    let ds = generate_synthetic(&GeneratorConfig {
        n_samples: 382,
        seed: 1,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let (train, test) = split(&ds, &SplitSpec::default()).map_err(|e| e.to_string())?;
    ensure((train.len(), test.len()) == (305, 77), || format!("split sizes {} / {}", train.len(), test.len()))?;

    let x = train.features();
    let y = train.targets().map_err(|e| e.to_string())?;
    let plan = make_folds(train.len(), 5, 3).map_err(|e| e.to_string())?;
    for family in [Family::Svr, Family::KNeighbors, Family::Mlp] {
        let params = if family == Family::Mlp {
            ParamSet::new().with("max_iter", 5i64)
        } else {
            ParamSet::new()
        };
        let spec = ModelSpec::new(family, params).map_err(|e| e.to_string())?;
        for f in 0..5 {
            let model = fit_fold(&spec, x.view(), &y, &plan, f).map_err(|e| e.to_string())?;
            let got = model.standardizer.as_ref().ok_or("model kept no standardizer")?;
            let rows = x.select(ndarray::Axis(0), &plan.folds[f].0);
            for j in 0..x.ncols() {
                let col = rows.column(j);
                let m = col.sum() / col.len() as f64;
                let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
                ensure((got.mean[j] - m).abs() <= 1e-9 && (got.std[j] - sd).abs() <= 1e-9, || {
                    format!("{} fold {f}: standardizer column {j} not from fold training rows", family.label())
                })?;
            }
            let full = Standardizer::fit(x.view()).map_err(|e| e.to_string())?;
            ensure(got.mean != full.mean, || "standardizer matches the full training set".into())?;
        }
    }
    check_time(start.elapsed(), Duration::from_secs(5))?;
    Ok("200 fold plans, 12 grids, leakage check, split 305/77".into())
}

// 7 to 10. full benchmark runs through the binary

fn cbrml(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cbrml"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("cbrml {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

struct Runs {
    multi: PathBuf,
    single: PathBuf,
    multi_time: Duration,
}

fn run_benchmarks(root: &Path) -> Result<Runs, String> {
    let multi = root.join("threads4");
    let single = root.join("threads1");
    let start = Instant::now();
    cbrml(&["benchmark", "--seed", "1", "--threads", "4", "--out", multi.to_str().unwrap()])?;
    let multi_time = start.elapsed();
    cbrml(&["benchmark", "--seed", "1", "--threads", "1", "--out", single.to_str().unwrap()])?;
    for dir in [&multi, &single] {
        let d = dir.to_str().unwrap();
        cbrml(&[
            "plotdata",
            "--model",
            &format!("{d}/models/random_forest.model"),
            "--test",
            &format!("{d}/split/test.csv"),
            "--out",
            &format!("{d}/figures"),
        ])?;
    }
    Ok(Runs {
        multi,
        single,
        multi_time,
    })
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn criterion_determinism(runs: &Runs) -> Outcome {
    let files = [
        "report.csv",
        "report.txt",
        "plots/scatter.csv",
        "plots/errors_hist.csv",
        "plots/series.csv",
        "figures/scatter.csv",
        "figures/errors_hist.csv",
        "figures/series.csv",
        "models/random_forest.model",
        "models/stacking.model",
    ];
    for f in files {
        let a = fs::read(runs.multi.join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = fs::read(runs.single.join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between 4-thread and 1-thread runs"))?;
    }
    Ok(format!("{} files byte-identical across 4-thread and 1-thread runs", files.len()))
}

fn report_rows(dir: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut rdr = csv::Reader::from_path(dir.join("report.csv")).map_err(|e| e.to_string())?;
    let header = rdr.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

fn criterion_end_to_end(runs: &Runs) -> Outcome {
    check_time(runs.multi_time, Duration::from_secs(15 * 60))?;
    let (header, rows) = report_rows(&runs.multi)?;
    let col = |name: &str| header.iter().position(|h| h == name).ok_or(format!("no column {name}"));
    let (fam, test_r2) = (col("family")?, col("test_r2")?);
    let mut rf = None;
    for row in &rows {
        let r2: f64 = row[test_r2].parse().map_err(|_| format!("bad test_r2 {:?}", row[test_r2]))?;
        if row[fam] == Family::RandomForest.label() {
            rf = Some(r2);
        }
        if row[fam] != Family::Stacking.label() {
            ensure(r2 > 0.0, || format!("{} test R² {r2}", row[fam]))?;
        }
    }
    let rf = rf.ok_or("no RandomForest row")?;
    ensure(rf >= 0.75, || format!("RandomForest test R² {rf:.3}"))?;
    Ok(format!("RandomForest test R² {rf:.3}, all families positive, {:.0?}", runs.multi_time))
}

fn criterion_table_shape(runs: &Runs) -> Outcome {
    let (header, rows) = report_rows(&runs.multi)?;
    ensure(header == REPORT_COLUMNS, || format!("header {header:?}"))?;
    ensure(rows.len() == 12, || format!("{} rows", rows.len()))?;
    let got: BTreeSet<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    let want: BTreeSet<&str> = Family::ALL.iter().map(|f| f.label()).collect();
    ensure(got == want, || format!("families {got:?}"))?;
    for row in &rows {
        ensure(!row[1].is_empty(), || format!("{}: empty best_params", row[0]))?;
        for cell in &row[2..] {
            ensure(cell.parse::<f64>().is_ok_and(f64::is_finite), || format!("{}: metric {cell:?}", row[0]))?;
        }
    }
    let phases: Vec<&str> = header[2..].iter().map(|h| h.split('_').next().unwrap()).collect();
    ensure(phases == ["train", "train", "train", "val", "val", "val", "test", "test", "test"], || {
        format!("phase order {phases:?}")
    })?;
    Ok("12 rows, 9 metric columns in train/validation/test order".into())
}

fn criterion_figures(runs: &Runs) -> Outcome {
    let test_rows = read(&runs.multi.join("split/test.csv"))?.lines().count() - 1;
    ensure(test_rows == 77, || format!("test split has {test_rows} rows"))?;
    let scatter = read(&runs.multi.join("figures/scatter.csv"))?;
    let n_scatter = scatter.lines().count() - 1;
    ensure(n_scatter == 77, || format!("scatter has {n_scatter} rows"))?;
    let hist = read(&runs.multi.join("figures/errors_hist.csv"))?;
    let mut total = 0;
    let mut prev_right: Option<f64> = None;
    for line in hist.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        ensure(f[1] - f[0] == 5.0 && f[0] % 5.0 == 0.0, || format!("bin {line}"))?;
        ensure(prev_right.is_none_or(|p| p == f[0]), || format!("gap before bin {line}"))?;
        prev_right = Some(f[1]);
        total += f[2] as usize;
    }
    ensure(total == 77, || format!("histogram counts sum to {total}"))?;
    Ok("77-row scatter, histogram counts sum to 77".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({why})");
            }
        }
    };
    let guarded = |f: &dyn Fn() -> Outcome| -> Outcome {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()))
    };
    report(1, "metric oracle", guarded(&criterion_metrics));
    report(2, "CART oracle", guarded(&criterion_cart));
    report(3, "MLP gradient check", guarded(&criterion_mlp_gradient));
    report(4, "SVR KKT audit", guarded(&criterion_svr_kkt));
    report(5, "boosting monotonicity", guarded(&criterion_boosting));
    report(6, "protocol properties", guarded(&criterion_protocol));

    let root = tempfile::tempdir().expect("temporary directory");
    match run_benchmarks(root.path()) {
        Ok(runs) => {
            report(7, "determinism", guarded(&|| criterion_determinism(&runs)));
            report(8, "end-to-end benchmark", guarded(&|| criterion_end_to_end(&runs)));
            report(9, "table shape", guarded(&|| criterion_table_shape(&runs)));
            report(10, "figure data", guarded(&|| criterion_figures(&runs)));
        }
        Err(e) => {
            for (n, name) in [(7, "determinism"), (8, "end-to-end benchmark"), (9, "table shape"), (10, "figure data")] {
                report(n, name, Err(format!("benchmark run failed: {e}")));
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
