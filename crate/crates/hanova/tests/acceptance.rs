//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hanova::export::{render, write_json};
use hanova::io::read_csv_from;
use hanova::render::{axis_row, panel_max, render_vc_svg};
use hanova::run::{analyze, build, Method, OutputFormat};
use hanova_core::bayes::{
    effective_sample_size, run_chains, summarize_posterior, HyperPrior, PosteriorDraws, Sampler, SamplerConfig,
};
use hanova_core::classical::{
    anova_table, estimate_sigma_moments, ev_matrix, fit_effects, run_moments, ClassicalTable,
};
use hanova_core::design::{Dataset, DesignModel};
use hanova_core::formula::parse_model;
use hanova_core::numerics::{f_upper_tail, sample_normal, RngStream};
use hanova_core::summary::Warning;

type Outcome = Result<String, String>;

/// (source, df, SS, MS, F, p) of one printed table row.
type PrintedRow = (&'static str, usize, f64, f64, Option<f64>, Option<f64>);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dataset(y: Vec<f64>, cols: Vec<(&str, Vec<String>)>) -> Dataset {
    Dataset::from_labels(y, cols.into_iter().map(|(n, v)| (n.to_string(), v)).collect()).unwrap()
}

fn design(formula: &str, data: &Dataset) -> DesignModel {
    build(&parse_model(formula).unwrap(), data).unwrap()
}

fn normals(n: usize, sd: f64, rng: &RngStream) -> Vec<f64> {
    let mut g = rng.rng();
    (0..n).map(|_| sample_normal(0.0, sd, &mut g).unwrap()).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Monte Carlo standard error of the mean from the effective sample size.
fn mcse(chains: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = chains.concat();
    let ess = effective_sample_size(chains).unwrap_or(all.len() as f64);
    (var(&all) / ess).sqrt()
}

const SPLIT_PLOT: &str = "y ~ row + col + trt + row:col + sub + row:sub + col:sub + trt:sub + row:col:sub";

/// 5×5 Latin square of whole-plot treatments, each plot split in two.
fn split_plot_data(y: Vec<f64>) -> Dataset {
    let (mut row, mut col, mut trt, mut sub) = (vec![], vec![], vec![], vec![]);
    for r in 0..5 {
        for c in 0..5 {
            for s in 0..2 {
                row.push(format!("r{r}"));
                col.push(format!("c{c}"));
                trt.push(["A", "B", "C", "D", "E"][(r + c) % 5].to_string());
                sub.push(format!("s{s}"));
            }
        }
    }
    dataset(y, vec![("row", row), ("col", col), ("trt", trt), ("sub", sub)])
}

/// Simulated split plot: large treatment and sub-plot effects, plot error
/// sd `sigma_plot`, sub-plot error sd `sigma_sub`.
fn simulated_split_plot(sigma_plot: f64, sigma_sub: f64, rng: &RngStream) -> Dataset {
    let row_eff = normals(5, 2.0, &rng.fork(0));
    let col_eff = normals(5, 2.0, &rng.fork(1));
    let plot_err = normals(25, sigma_plot, &rng.fork(2));
    let sub_err = normals(50, sigma_sub, &rng.fork(3));
    let trt_eff = [-10.0, -5.0, 0.0, 5.0, 10.0];
    let sub_eff = [-3.0, 3.0];
    let trt_sub = [[1.0, -1.0], [-0.5, 0.5], [0.0, 0.0], [0.5, -0.5], [-1.0, 1.0]];
    let mut y = Vec::with_capacity(50);
    for r in 0..5 {
        for c in 0..5 {
            let t = (r + c) % 5;
            for s in 0..2 {
                let i = (r * 5 + c) * 2 + s;
                y.push(
                    20.0 + row_eff[r] + col_eff[c] + trt_eff[t] + plot_err[r * 5 + c] + sub_eff[s]
                        + trt_sub[t][s]
                        + sub_err[i],
                );
            }
        }
    }
    split_plot_data(y)
}

fn balanced_one_way(groups: usize, reps: usize, sigma_g: f64, sigma_y: f64, rng: &RngStream) -> Dataset {
    let eff = normals(groups, sigma_g, &rng.fork(0));
    let noise = normals(groups * reps, sigma_y, &rng.fork(1));
    let y = (0..groups * reps).map(|i| 10.0 + eff[i / reps] + noise[i]).collect();
    let g = (0..groups * reps).map(|i| format!("g{}", i / reps)).collect();
    dataset(y, vec![("g", g)])
}

const WEB_DF: [usize; 31] = [
    3, 44, 1, 24, 1, 132, 3, 72, 3, 44, 1056, 44, 24, 1, 24, 132, 3168, 132, 72, 3, 72, 1056, 44, 1056, 24, 3168,
    132, 3168, 72, 1056, 3168,
];

/// The printed table for the 4×45×2×25×2 factorial.
const WEB_TABLE: [PrintedRow; 31] = [
    ("to", 3, 31193.62, 10397.87, Some(26660.68), Some(0.00)),
    ("from", 44, 5635.24, 128.07, Some(328.39), Some(0.00)),
    ("company", 1, 1027.44, 1027.44, Some(2634.40), Some(0.00)),
    ("hour", 24, 128.74, 5.36, Some(13.75), Some(0.00)),
    ("week", 1, 3.76, 3.76, Some(9.64), Some(0.00)),
    ("to * from", 132, 669.56, 5.07, Some(13.01), Some(0.00)),
    ("to * company", 3, 497.03, 165.68, Some(424.80), Some(0.00)),
    ("to * hour", 72, 44.00, 0.61, Some(1.57), Some(0.00)),
    ("to * week", 3, 14.59, 4.86, Some(12.47), Some(0.00)),
    ("from * company", 44, 1029.74, 23.40, Some(60.01), Some(0.00)),
    ("from * hour", 1056, 1793.35, 1.70, Some(4.35), Some(0.00)),
    ("from * week", 44, 426.40, 9.69, Some(24.85), Some(0.00)),
    ("company * hour", 24, 29.32, 1.22, Some(3.13), Some(0.00)),
    ("company * week", 1, 13.73, 13.73, Some(35.20), Some(0.00)),
    ("hour * week", 24, 43.20, 1.80, Some(4.62), Some(0.00)),
    ("to * from * company", 132, 487.21, 3.69, Some(9.46), Some(0.00)),
    ("to * from * hour", 3168, 1326.40, 0.42, Some(1.07), Some(0.02)),
    ("to * from * week", 132, 162.25, 1.23, Some(3.15), Some(0.00)),
    ("to * company * hour", 72, 38.60, 0.54, Some(1.37), Some(0.02)),
    ("to * company * week", 3, 6.54, 2.18, Some(5.59), Some(0.00)),
    ("to * hour * week", 72, 25.91, 0.36, Some(0.92), Some(0.66)),
    ("from * company * hour", 1056, 745.65, 0.71, Some(1.81), Some(0.00)),
    ("from * company * week", 44, 139.37, 3.17, Some(8.12), Some(0.00)),
    ("from * hour * week", 1056, 782.30, 0.74, Some(1.90), Some(0.00)),
    ("company * hour * week", 24, 24.51, 1.02, Some(2.62), Some(0.00)),
    ("to * from * company * hour", 3168, 1339.13, 0.42, Some(1.08), Some(0.01)),
    ("to * from * company * week", 132, 117.49, 0.89, Some(2.28), Some(0.00)),
    ("to * from * hour * week", 3168, 1308.72, 0.41, Some(1.06), Some(0.05)),
    ("to * company * hour * week", 72, 31.62, 0.44, Some(1.13), Some(0.22)),
    ("from * company * hour * week", 1056, 528.34, 0.50, Some(1.28), Some(0.00)),
    ("to * from * company * hour * week", 3168, 1235.54, 0.39, None, None),
];

fn web_csv() -> String {
    let mut g = RngStream::new(44).rng();
    let mut out = String::from("y,to,from,company,hour,week\n");
    for t in 0..4 {
        for f in 0..45 {
            for c in 0..2 {
                for h in 0..25 {
                    for w in 0..2 {
                        let y = sample_normal(0.0, 1.0, &mut g).unwrap();
                        out.push_str(&format!("{y:.6},t{t},f{f},c{c},h{h},w{w}\n"));
                    }
                }
            }
        }
    }
    out
}

fn dfs(d: &DesignModel) -> Vec<usize> {
    d.batches().iter().map(|b| b.df).collect()
}

fn c1_degrees_of_freedom() -> Outcome {
    let sp = design(SPLIT_PLOT, &split_plot_data(vec![0.0; 50]));
    check(dfs(&sp) == [4, 4, 4, 12, 1, 4, 4, 4, 12], format!("split plot df {:?}", dfs(&sp)))?;

    let csv = web_csv();
    let start = Instant::now();
    let data = read_csv_from(csv.as_bytes(), "y", &["to", "from", "company", "hour", "week"]).unwrap();
    check(data.n() == 4 * 45 * 2 * 25 * 2, format!("ingested {} rows", data.n()))?;
    let web = design("y ~ to*from*company*hour*week", &data);
    let elapsed = start.elapsed();
    check(dfs(&web) == WEB_DF, format!("factorial df {:?}", dfs(&web)))?;
    let labels: Vec<String> = WEB_TABLE.iter().map(|r| r.0.replace(" * ", ":")).collect();
    check(web.labels() == labels, "factorial source order")?;
    check(web.balance().balanced && web.balance().orthogonal, "factorial should be balanced")?;
    check(elapsed < Duration::from_secs(5), format!("factorial took {elapsed:?}"))?;
    Ok(format!("split plot 9 rows, factorial 31 rows from {} observations in {:.2} s", data.n(), elapsed.as_secs_f64()))
}

fn c2_printed_table_arithmetic() -> Outcome {
    let table = ClassicalTable::from_sums(WEB_TABLE.iter().map(|r| (r.0, r.1, r.2)), 30).unwrap();
    let mut worst_ms: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    for (row, printed) in table.rows.iter().zip(&WEB_TABLE) {
        let ms = row.ms.unwrap();
        worst_ms = worst_ms.max((ms - printed.3).abs());
        check((ms - printed.3).abs() <= 0.01, format!("{}: MS {ms} vs {}", printed.0, printed.3))?;
        if let Some(pf) = printed.4 {
            let f = row.f.unwrap();
            let rel = (f - pf).abs() / pf;
            worst_f = worst_f.max(rel);
            check(rel <= 0.005, format!("{}: F {f} vs {pf}", printed.0))?;
        }
    }
    let targets = [
        ("to * from * hour", 0.02),
        ("to * hour * week", 0.66),
        ("to * company * hour * week", 0.22),
        ("to * from * hour * week", 0.05),
    ];
    let mut ps = Vec::new();
    for (label, p_printed) in targets {
        let k = WEB_TABLE.iter().position(|r| r.0 == label).unwrap();
        let row = &table.rows[k];
        let p = row.p.unwrap();
        let direct = f_upper_tail(row.f.unwrap(), row.df as f64, 3168.0).unwrap();
        check((p - direct).abs() < 1e-12, "table p differs from the tail function")?;
        check((p - p_printed).abs() <= 0.01, format!("{label}: p {p:.4} vs {p_printed}"))?;
        ps.push(format!("{p:.3}"));
    }
    Ok(format!("max |dMS| {worst_ms:.4}, max rel dF {:.3}%, p = {}", worst_f * 100.0, ps.join(", ")))
}

fn c3_expected_variance_coefficients() -> Outcome {
    let (mut trt, mut machine, mut meas) = (vec![], vec![], vec![]);
    for t in 0..4 {
        for m in 0..5 {
            for k in 0..6 {
                trt.push(format!("t{t}"));
                machine.push(format!("m{m}"));
                meas.push(format!("k{k}"));
            }
        }
    }
    let data = dataset(vec![0.0; 120], vec![("trt", trt), ("machine", machine), ("meas", meas)]);
    let nested = design("y ~ trt + trt:machine + trt:machine:meas", &data);
    let a = ev_matrix(&nested);
    let row: Vec<f64> = (0..3).map(|k| a[(0, k)]).collect();
    check(row == [1.0, 4.0 / 20.0, 4.0 / 120.0], format!("nested treatment row {row:?}"))?;

    let sp = design(SPLIT_PLOT, &split_plot_data(vec![0.0; 50]));
    let a = ev_matrix(&sp);
    let trt = 2;
    let off: Vec<(usize, f64)> =
        (0..sp.len()).filter(|&k| k != trt && a[(trt, k)] != 0.0).map(|k| (k, a[(trt, k)])).collect();
    check(a[(trt, trt)] == 1.0, "split plot diagonal")?;
    check(
        off == [(3, 5.0 / 25.0), (7, 5.0 / 10.0), (8, 5.0 / 50.0)],
        format!("split plot treatment row {off:?}"),
    )?;
    Ok("nested (1, 4/20, 4/120); split plot trt -> row:col 5/25, trt:sub 5/10, row:col:sub 5/50".into())
}

fn c4_moments_oracle() -> Outcome {
    let y = vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0];
    let g: Vec<String> = ["A", "A", "B", "B", "C", "C"].iter().map(|s| s.to_string()).collect();
    let data = dataset(y.clone(), vec![("g", g)]);
    let d = design("y ~ g", &data);
    let est = fit_effects(&d, data.y()).unwrap();
    let s2 = estimate_sigma_moments(&est.v, &ev_matrix(&d)).unwrap();

    let r = 2.0;
    let means: Vec<f64> = y.chunks(2).map(mean).collect();
    let grand = mean(&y);
    let ms_b = r * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / 2.0;
    let ms_w = y.chunks(2).zip(&means).map(|(c, m)| c.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sum::<f64>() / 3.0;
    let textbook = ((ms_b - ms_w) / r, ms_w);
    check(textbook == (15.0, 2.0), format!("textbook formula gave {textbook:?}"))?;
    check(
        (s2[0] - 15.0).abs() < 1e-12 && (s2[1] - 2.0).abs() < 1e-12,
        format!("moments gave {s2:?}"),
    )?;
    Ok(format!("sigma^2 = ({}, {}), textbook ({}, {})", s2[0], s2[1], textbook.0, textbook.1))
}

fn c5_interval_calibration() -> Outcome {
    let master = RngStream::new(2718);
    let truth = 2.0;
    let mut covered = 0;
    for rep in 0..200u64 {
        let stream = master.fork(rep);
        let data = balanced_one_way(6, 5, truth, 1.0, &stream.fork(0));
        let d = design("y ~ g", &data);
        let est = fit_effects(&d, data.y()).unwrap();
        let res = run_moments(&d, &est, 1000, &stream.fork(1)).unwrap();
        let summary = res.summary(&d);
        for row in &summary.rows {
            let sigma = row.sigma.unwrap();
            for iv in [sigma, row.s] {
                check(iv.is_nested(), format!("replication {rep}: intervals not nested"))?;
                check(iv.q025 >= 0.0 && iv.est >= 0.0, format!("replication {rep}: negative bound"))?;
            }
        }
        let iv = summary.rows[0].sigma.unwrap();
        if iv.q025 <= truth && truth <= iv.q975 {
            covered += 1;
        }
    }
    check(covered >= 176, format!("coverage {covered}/200"))?;
    Ok(format!("coverage {covered}/200, all intervals nested and nonnegative"))
}

/// Closed-form posterior of (μ, β1, β2) for y = μ + β_g + ε with β ~ N(0, τ²),
/// ε ~ N(0, σ²) and a flat prior on μ.
fn conjugate_two_group(y: &[f64], group: &[usize], tau: f64, sigma: f64) -> ([f64; 3], [f64; 3]) {
    let mut q = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&v, &g) in y.iter().zip(group) {
        let x = [1.0, (g == 0) as u8 as f64, (g == 1) as u8 as f64];
        for i in 0..3 {
            b[i] += x[i] * v / (sigma * sigma);
            for j in 0..3 {
                q[i][j] += x[i] * x[j] / (sigma * sigma);
            }
        }
    }
    q[1][1] += 1.0 / (tau * tau);
    q[2][2] += 1.0 / (tau * tau);
    let det = q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) - q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0])
        + q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
    let cof = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let c: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let minor = q[r[0]][c[0]] * q[r[1]][c[1]] - q[r[0]][c[1]] * q[r[1]][c[0]];
        if (i + j) % 2 == 0 { minor } else { -minor }
    };
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cof(j, i) / det;
        }
    }
    let mean = [0, 1, 2].map(|i| (0..3).map(|j| inv[i][j] * b[j]).sum());
    let variance = [0, 1, 2].map(|i| inv[i][i]);
    (mean, variance)
}

fn c6_gibbs_vs_conjugate() -> Outcome {
    let y = vec![1.0, 2.0, 0.5, 1.5, 3.0, 4.5, 3.5, 4.0];
    let group = [0, 0, 0, 0, 1, 1, 1, 1];
    let labels = group.iter().map(|&g| ["A", "B"][g].to_string()).collect();
    let data = dataset(y.clone(), vec![("g", labels)]);
    let d = design("y ~ g", &data);
    let (tau, sigma) = (1.5, 1.0);
    let (post_mean, post_var) = conjugate_two_group(&y, &group, tau, sigma);

    let mut worst: f64 = 0.0;
    for (route, joint_limit, iters) in [("joint", 400, 40_000), ("batchwise", 0, 200_000)] {
        let config = SamplerConfig { joint_limit, ..SamplerConfig::default() };
        let sampler = Sampler::new(&d, data.y(), HyperPrior::uniform(2), &config).unwrap();
        check(sampler.is_joint() == (joint_limit > 0), "unexpected coefficient route")?;
        let mut rng = RngStream::new(6).fork(joint_limit as u64).rng();
        let mut state = sampler.init_chain(false, &mut rng);
        state.sigma = vec![tau, sigma];
        let mut draws: [Vec<f64>; 3] = Default::default();
        for it in 0..iters + 1000 {
            sampler.update_beta(&mut state, &mut rng).unwrap();
            if it >= 1000 {
                draws[0].push(state.mu);
                draws[1].push(state.beta[0][0]);
                draws[2].push(state.beta[0][1]);
            }
        }
        for k in 0..3 {
            let m = mean(&draws[k]);
            let se = mcse(&[draws[k].clone()]);
            let z = (m - post_mean[k]).abs() / se;
            worst = worst.max(z);
            check(z <= 3.0, format!("{route}: mean of parameter {k} {m:.4} vs {:.4} ({z:.2} SE)", post_mean[k]))?;
            let sq: Vec<f64> = draws[k].iter().map(|x| (x - m) * (x - m)).collect();
            let v = mean(&sq);
            let se_v = mcse(&[sq]);
            let z = (v - post_var[k]).abs() / se_v;
            worst = worst.max(z);
            check(z <= 3.0, format!("{route}: variance of parameter {k} {v:.4} vs {:.4} ({z:.2} SE)", post_var[k]))?;
        }
    }
    Ok(format!(
        "posterior means {:.3?}, variances {:.3?}; worst deviation {worst:.2} MC-SE over both routes",
        post_mean, post_var
    ))
}

fn sigma_chains(draws: &PosteriorDraws, m: usize) -> Vec<Vec<f64>> {
    draws.chains.iter().map(|c| c.sigma.iter().map(|s| s[m]).collect()).collect()
}

fn c7_px_matches_plain() -> Outcome {
    let data = balanced_one_way(8, 5, 2.0, 1.0, &RngStream::new(7));
    let d = design("y ~ g", &data);
    let base = SamplerConfig { iters: 6000, warmup: 1000, seed: 70, ..SamplerConfig::default() };
    let (px, _) = run_chains(&d, data.y(), HyperPrior::uniform(2), &SamplerConfig { px: true, ..base.clone() }).unwrap();
    let (plain, _) =
        run_chains(&d, data.y(), HyperPrior::uniform(2), &SamplerConfig { px: false, seed: 71, ..base }).unwrap();
    let mut parts = Vec::new();
    for m in 0..d.len() {
        let (a, b) = (sigma_chains(&px, m), sigma_chains(&plain, m));
        let (ma, mb) = (mean(&a.concat()), mean(&b.concat()));
        let se = (mcse(&a).powi(2) + mcse(&b).powi(2)).sqrt();
        let z = (ma - mb).abs() / se;
        check(z <= 3.0, format!("{}: px {ma:.4} vs plain {mb:.4} ({z:.2} SE)", d.batch(m).label))?;
        parts.push(format!("{} {ma:.3}/{mb:.3} ({z:.2} SE)", d.batch(m).label));
    }
    let err = px.max_reconstruction_error();
    check(err <= 1e-12, format!("reconstruction error {err:e}"))?;
    Ok(format!("sigma means px/plain: {}; max reconstruction error {err:.1e}", parts.join(", ")))
}

fn c8_split_plot_comparisons() -> Outcome {
    let data = simulated_split_plot(4.0, 1.0, &RngStream::new(8));
    let d = design(SPLIT_PLOT, &data);
    let labels = d.labels();
    let idx = |l: &str| labels.iter().position(|x| *x == l).unwrap();
    let table = anova_table(&fit_effects(&d, data.y()).unwrap(), &d).unwrap();
    let ms_plot = table.rows[idx("row:col")].ms.unwrap();
    let ms_res = table.rows[d.residual()].ms.unwrap();
    let se_main = (2.0 * ms_plot / 10.0).sqrt();
    let se_sub = (2.0 * ms_res / 25.0).sqrt();

    let config = SamplerConfig { iters: 6000, warmup: 1000, keep_beta: true, seed: 80, ..SamplerConfig::default() };
    let (draws, _) = run_chains(&d, data.y(), HyperPrior::uniform(d.len()), &config).unwrap();

    let trt = &data.factors()[2].levels;
    let sub = &data.factors()[3].levels;
    // Average of the listed batches' effects over the observations selected by `keep`.
    let effect = |beta: &[Vec<f64>], batches: &[usize], keep: &dyn Fn(usize) -> bool| {
        let obs: Vec<usize> = (0..data.n()).filter(|&i| keep(i)).collect();
        let total: f64 =
            obs.iter().map(|&i| batches.iter().map(|&m| beta[m][d.batch(m).cell_of[i]]).sum::<f64>()).sum();
        total / obs.len() as f64
    };
    let main_batches = [idx("trt"), idx("trt:sub")];
    let sub_batches = [idx("sub"), idx("row:sub"), idx("col:sub"), idx("trt:sub")];
    let (mut main, mut subc) = (Vec::new(), Vec::new());
    for chain in &draws.chains {
        for beta in chain.beta.as_ref().unwrap() {
            main.push(effect(beta, &main_batches, &|i| trt[i] == 0) - effect(beta, &main_batches, &|i| trt[i] == 1));
            subc.push(effect(beta, &sub_batches, &|i| sub[i] == 1) - effect(beta, &sub_batches, &|i| sub[i] == 0));
        }
    }
    let (sd_main, sd_sub) = (var(&main).sqrt(), var(&subc).sqrt());
    let (rel_main, rel_sub) = ((sd_main / se_main - 1.0).abs(), (sd_sub / se_sub - 1.0).abs());
    let detail = format!(
        "main plot: posterior sd {sd_main:.3} vs classical {se_main:.3} ({:.1}%); sub plot: {sd_sub:.3} vs {se_sub:.3} ({:.1}%)",
        rel_main * 100.0,
        rel_sub * 100.0
    );
    check(rel_main <= 0.15 && rel_sub <= 0.15, detail.clone())?;
    Ok(detail)
}

fn c9_finite_vs_superpopulation() -> Outcome {
    let noise = normals(400, 1.0, &RngStream::new(9));
    let y = (0..400).map(|i| if i < 200 { 0.0 } else { 5.0 } + noise[i]).collect();
    let g = (0..400).map(|i| if i < 200 { "a" } else { "b" }.to_string()).collect();
    let data = dataset(y, vec![("g", g)]);
    let d = design("y ~ g", &data);
    check(d.batch(0).df == 1, "fixture should have one degree of freedom")?;
    let (draws, diag) = run_chains(&d, data.y(), HyperPrior::uniform(2), &SamplerConfig::default()).unwrap();
    let summary = summarize_posterior(&draws, &d);
    let row = &summary.rows[0];
    let sigma = row.sigma.unwrap();
    check(row.s.width95() < sigma.width95(), format!("s width {} vs sigma width {}", row.s.width95(), sigma.width95()))?;
    let warned = diag.warnings.iter().any(|w| matches!(w, Warning::ImproperPosterior { batch, .. } if batch == "g"));
    check(warned, "missing impropriety warning")?;
    Ok(format!(
        "s 95% [{:.3}, {:.3}] inside sigma 95% [{:.3}, {:.3}]; impropriety warning for g",
        row.s.q025, row.s.q975, sigma.q025, sigma.q975
    ))
}

fn c10_determinism_and_rendering() -> Outcome {
    let data = simulated_split_plot(4.0, 1.0, &RngStream::new(10));
    let spec = parse_model(SPLIT_PLOT).unwrap();
    let config = SamplerConfig { iters: 600, warmup: 200, seed: 100, ..SamplerConfig::default() };
    let run = |threads| analyze(&spec, &data, Method::All, 500, &config, Some(threads)).unwrap();
    let (a, b, c) = (run(1), run(1), run(4));
    for fmt in [OutputFormat::Json, OutputFormat::Svg] {
        let bytes = |r| render(r, fmt).unwrap();
        check(bytes(&a) == bytes(&b), format!("{fmt:?} differs between runs"))?;
        check(bytes(&a) == bytes(&c), format!("{fmt:?} differs between thread counts"))?;
    }
    let json_len = write_json(&a).unwrap().len();

    // Move one point estimate below its 50% interval and check that both
    // displays keep it there rather than snapping it to the bar.
    let mut summary = a.moments.as_ref().unwrap().summary.clone();
    let max = panel_max(&summary, &|m| Some(summary.rows[m].s));
    let m = (0..summary.rows.len()).max_by(|&i, &j| summary.rows[i].s.q25.total_cmp(&summary.rows[j].s.q25)).unwrap();
    summary.rows[m].s.est = 0.0;
    let iv = summary.rows[m].s;
    check(iv.q25 > 0.1 * max, "fixture needs a row with its 50% interval away from zero")?;
    let text = axis_row(&iv, max);
    let (o, bar) = (text.find('o').unwrap(), text.find('=').unwrap());
    check(o + 1 < bar, format!("text row `{text}` puts the point on the bar"))?;
    let svg = render_vc_svg(&summary);
    let row_y = svg
        .lines()
        .filter(|l| l.contains("stroke-width=\"5\""))
        .nth(m)
        .and_then(|l| l.split("x1=\"").nth(1))
        .and_then(|s| s.split('"').next())
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap();
    let cx = svg
        .lines()
        .filter(|l| l.starts_with("<circle"))
        .nth(m)
        .and_then(|l| l.split("cx=\"").nth(1))
        .and_then(|s| s.split('"').next())
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap();
    check(cx < row_y, format!("svg point {cx} not left of thick bar {row_y}"))?;
    Ok(format!("JSON ({json_len} bytes) and SVG identical across runs and 1 vs 4 threads; edge point kept outside bar"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "degrees of freedom fixtures", budget: Duration::from_secs(5), run: c1_degrees_of_freedom },
        Criterion { id: 2, name: "printed factorial table arithmetic", budget: Duration::from_secs(1), run: c2_printed_table_arithmetic },
        Criterion { id: 3, name: "expected variance coefficients", budget: Duration::from_secs(1), run: c3_expected_variance_coefficients },
        Criterion { id: 4, name: "moments oracle", budget: Duration::from_secs(1), run: c4_moments_oracle },
        Criterion { id: 5, name: "interval calibration", budget: Duration::from_secs(120), run: c5_interval_calibration },
        Criterion { id: 6, name: "Gibbs vs conjugate posterior", budget: Duration::from_secs(60), run: c6_gibbs_vs_conjugate },
        Criterion { id: 7, name: "parameter expansion matches plain Gibbs", budget: Duration::from_secs(120), run: c7_px_matches_plain },
        Criterion { id: 8, name: "split-plot comparisons", budget: Duration::from_secs(180), run: c8_split_plot_comparisons },
        Criterion { id: 9, name: "finite vs superpopulation", budget: Duration::from_secs(60), run: c9_finite_vs_superpopulation },
        Criterion { id: 10, name: "determinism and rendering", budget: Duration::from_secs(30), run: c10_determinism_and_rendering },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > c.budget => Err(format!("took {:.2} s, budget {:.0} s", elapsed.as_secs_f64(), c.budget.as_secs_f64())),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  [{:>2}] {} ({:.2} s): {detail}", c.id, c.name, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  [{:>2}] {} ({:.2} s): {why}", c.id, c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
