//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use apsfm_cli::run_args;
use apsfm_core::generate::{random_face_spec, random_problem};
use apsfm_core::oracles::{check_in_base, fw_project, variational_check};
use apsfm_core::projection::{has_specialized_projection, project_component, project_generic};
use apsfm_core::solver::{estimate_primal_rate, estimate_rate, iteration_bound, run_ap, SolveOptions};
use apsfm_core::spectral::{
    build_face_graph, build_s, build_t, cheeger_constant, check_laplacian_identity, friedrichs, lambda2,
    rate_upper_bound, CHEEGER_VERTEX_LIMIT, DEFAULT_TOL_ONE,
};
use apsfm_core::worstcase::{
    build_lb_instance, circulant_spectrum, lb_face_matrices, predicted_cf2, ratio_experiment, RatioInit,
    DEFAULT_INIT_SCALE,
};
use apsfm_core::{DecomposableProblem, ProjectionConfig, SimpleComponent};

type Verdict = Result<String, String>;

/// Some concave faces need tens of thousands of away steps to reach 1e-6.
const FW_ITERS: usize = 100_000;

fn cli(args: &[&str]) -> Result<String, String> {
    let mut full = vec!["apsfm"];
    full.extend_from_slice(args);
    match run_args(full) {
        Ok(out) if out.code == 0 => Ok(out.stdout),
        Ok(out) => Err(format!("exit {}: {}", out.code, out.stdout.trim())),
        Err(e) => Err(e.to_string()),
    }
}

fn ratios_from_csv(text: &str) -> Vec<(usize, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let mut cols = l.split(',');
            let k = cols.next().unwrap().parse().unwrap();
            let _dist = cols.next();
            (k, cols.next().unwrap().parse().unwrap())
        })
        .collect()
}

fn lower_bound_curves() -> Verdict {
    let (n, r) = (10, 10);
    let predicted = 1.0 - (1.0 - (TAU / 10.0).cos()) / 10.0;
    let start = Instant::now();
    let inst = build_lb_instance(n, r).map_err(|e| e.to_string())?;
    let (s, t) = lb_face_matrices(&inst).map_err(|e| e.to_string())?;
    let cf = friedrichs(&s, &t, DEFAULT_TOL_ONE).map_err(|e| e.to_string())?;
    let cf2_err = (cf * cf - predicted).abs();
    if (predicted_cf2(n, r) - predicted).abs() > 1e-12 {
        return Err(format!("predicted_cf2 = {} but the closed form gives {predicted}", predicted_cf2(n, r)));
    }
    if cf2_err > 1e-9 {
        return Err(format!("friedrichs^2 = {} differs from {predicted} by {cf2_err:e}", cf * cf));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("ratios.csv");
    cli(&["lowerbound", "--n", "10", "--r", "10", "--trials", "5", "--iters", "500", "--seed", "1", "--out", out.to_str().unwrap()])?;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut lowest_final = f64::INFINITY;
    for i in 0..5 {
        let text = std::fs::read_to_string(dir.path().join(format!("ratios_trial{i}.csv"))).map_err(|e| e.to_string())?;
        let rows = ratios_from_csv(&text);
        if rows.len() != 500 {
            return Err(format!("trial {i} has {} rows", rows.len()));
        }
        let late: Vec<f64> = rows.iter().filter(|(k, _)| *k >= 5).map(|&(_, v)| v).collect();
        if late.iter().any(|v| !v.is_finite()) {
            return Err(format!("trial {i} has a non-finite ratio"));
        }
        let excess = late.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v - predicted));
        worst_excess = worst_excess.max(excess);
        let (first, last) = (late[0], *late.last().unwrap());
        if last < first {
            return Err(format!("trial {i} ratio fell from {first} to {last}"));
        }
        lowest_final = lowest_final.min(last);
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "cF2 err {cf2_err:.1e}, max(ratio - cF2) after k=5 {worst_excess:.2e}, lowest final ratio {lowest_final:.7} vs {predicted:.7}, {secs:.2}s"
    );
    if worst_excess > 1e-6 {
        Err(format!("ratio exceeds the prediction: {detail}"))
    } else if secs >= 10.0 {
        Err(format!("too slow: {detail}"))
    } else {
        Ok(detail)
    }
}

fn worst_case_ratios() -> Verdict {
    let mut worst = 0.0_f64;
    for (n, r) in [(10, 10), (6, 2), (8, 3), (12, 4)] {
        let inst = build_lb_instance(n, r).map_err(|e| e.to_string())?;
        let (s, t) = lb_face_matrices(&inst).map_err(|e| e.to_string())?;
        let cf = friedrichs(&s, &t, DEFAULT_TOL_ONE).map_err(|e| e.to_string())?;
        let series = ratio_experiment(&inst, RatioInit::WorstCase, 50, DEFAULT_INIT_SCALE).map_err(|e| e.to_string())?;
        if series.left_box {
            return Err(format!("N={n}, R={r}: an iterate left the box"));
        }
        for row in &series.rows {
            let rel = ((row.ratio - cf * cf) / (cf * cf)).abs();
            if !(rel <= 1e-8) {
                return Err(format!("N={n}, R={r}, k={}: ratio {} vs cF2 {}", row.k, row.ratio, cf * cf));
            }
            worst = worst.max(rel);
        }
    }
    Ok(format!("4 instances x 50 iterations, max relative deviation {worst:.1e}"))
}

struct RateRun {
    n: usize,
    r: usize,
    rate: f64,
    primal_rate: f64,
}

fn rate_suite() -> Result<(Vec<RateRun>, Vec<DecomposableProblem>), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut runs = Vec::new();
    let mut problems = Vec::new();
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let r = rng.gen_range(2..=4);
        let p = random_problem(&mut rng, n, r, 8);
        let opts = SolveOptions {
            tol_pair: 1e-12,
            stop_on_certificate: false,
            keep_iterates: true,
            seed: Some(rng.gen()),
            ..SolveOptions::default()
        };
        let res = run_ap(&p, &opts).map_err(|e| e.to_string())?;
        // fewer than 10 iterates means the run converged outright
        let rate = estimate_rate(&res.trace).unwrap_or(0.0);
        let primal_rate = estimate_primal_rate(&res.trace).unwrap_or(0.0);
        runs.push(RateRun { n, r, rate, primal_rate });
        problems.push(p);
    }
    Ok((runs, problems))
}

fn rate_check(runs: &[RateRun], pick: impl Fn(&RateRun) -> f64) -> Verdict {
    let mut worst_margin = f64::NEG_INFINITY;
    let mut highest = 0.0_f64;
    for run in runs {
        let bound = rate_upper_bound(run.n, run.r);
        let margin = pick(run) - bound;
        if margin > 1e-6 {
            return Err(format!("N={}, R={}: rate {} above {bound}", run.n, run.r, pick(run)));
        }
        worst_margin = worst_margin.max(margin);
        highest = highest.max(pick(run));
    }
    Ok(format!("{} instances, highest rate {highest:.4}, max(rate - bound) {worst_margin:.4}", runs.len()))
}

fn certified_solves() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_iters = 0;
    let mut max_ratio = 0.0_f64;
    for case in 0..100 {
        let n = rng.gen_range(2..=12);
        let r = rng.gen_range(1..=4);
        let p = random_problem(&mut rng, n, r, 8);
        let res = run_ap(&p, &SolveOptions::default()).map_err(|e| e.to_string())?;
        if !(res.certified && res.discrete_gap <= 1e-6) {
            return Err(format!("case {case}: gap {} status {}", res.discrete_gap, res.status.as_str()));
        }
        let (_, brute) = p.brute_force_min().map_err(|e| e.to_string())?;
        if res.min_value != brute {
            return Err(format!("case {case}: solve found {} but the minimum is {brute}", res.min_value));
        }
        for rec in &res.trace.records {
            // the duality gap is nonnegative; roundoff can leave it at -1e-17
            let cap = (n as f64 * rec.cont_gap.max(0.0) / 2.0).sqrt() + 1e-9;
            if !(rec.discrete_gap <= cap) {
                return Err(format!("case {case}, k={}: discrete gap {} above {cap}", rec.k, rec.discrete_gap));
            }
        }
        let fmax = p.brute_force_fmax().map_err(|e| e.to_string())?;
        let dist0 = res.b_initial.distance(&res.b_final);
        let bound = iteration_bound(n, r, fmax, dist0, 1e-6).max(0.0);
        let steps = res.iterations - 1;
        if steps as f64 > bound {
            return Err(format!("case {case}: {steps} steps above the bound {bound}"));
        }
        max_iters = max_iters.max(res.iterations);
        if bound > 0.0 {
            max_ratio = max_ratio.max(steps as f64 / bound);
        }
    }
    Ok(format!("100 instances, at most {max_iters} iterations, max steps/bound {max_ratio:.2e}"))
}

fn random_concave(rng: &mut ChaCha8Rng, n: usize) -> SimpleComponent {
    let q = rng.gen_range(1..=n);
    let mut support: Vec<usize> = (0..n).collect();
    for i in 0..q {
        let j = rng.gen_range(i..n);
        support.swap(i, j);
    }
    support.truncate(q);
    let mut steps: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..2.0)).collect();
    steps.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![0.0];
    for d in steps {
        values.push(values.last().unwrap() + d);
    }
    SimpleComponent::concave_cardinality(values, support).unwrap()
}

fn random_edge(rng: &mut ChaCha8Rng, n: usize) -> SimpleComponent {
    let u = rng.gen_range(0..n);
    let v = (u + rng.gen_range(1..n)) % n;
    SimpleComponent::edge_cut(u, v, rng.gen_range(0.05..3.0)).unwrap()
}

fn projector_certificates() -> Verdict {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = ProjectionConfig::default();
    let mut worst = [0.0_f64; 4];
    for kind in ["edge_cut", "concave"] {
        for case in 0..200 {
            let c = if kind == "edge_cut" { random_edge(&mut rng, n) } else { random_concave(&mut rng, n) };
            if !has_specialized_projection(&c) {
                return Err(format!("{kind} has no specialized projection"));
            }
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = project_component(&c, &z, &cfg).map_err(|e| e.to_string())?;
            let linf = |a: &[f64]| s.iter().zip(a).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            let generic = project_generic(&c, &z).map_err(|e| e.to_string())?;
            let fw = fw_project(&c, &z, FW_ITERS).map_err(|e| e.to_string())?;
            let member = check_in_base(&c, &s, 1e-9).map_err(|e| e.to_string())?;
            let vi = variational_check(&c, &z, &s, 1000);
            let errs = [linf(&generic), linf(&fw.point), member.violation, vi];
            let limits = [1e-8, 1e-6, 1e-9, 1e-7];
            for (i, (&e, &lim)) in errs.iter().zip(&limits).enumerate() {
                if !(e <= lim) {
                    let what = ["generic distance", "Frank-Wolfe distance", "base violation", "variational residual"][i];
                    return Err(format!("{kind} case {case}: {what} {e:e} above {lim:e}"));
                }
                worst[i] = worst[i].max(e);
            }
        }
    }
    Ok(format!(
        "400 inputs, max generic {:.1e}, fw {:.1e}, violation {:.1e}, variational {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn spectral_chain() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut accepted = 0;
    let mut drawn = 0;
    let mut max_identity = 0.0_f64;
    while accepted < 100 {
        drawn += 1;
        if drawn > 100_000 {
            return Err(format!("only {accepted} connected face graphs found"));
        }
        let n = rng.gen_range(2..=10);
        let r = rng.gen_range(2..=4);
        let spec = random_face_spec(&mut rng, n, r);
        let g = build_face_graph(&spec).map_err(|e| e.to_string())?;
        if !g.is_connected() || g.num_vertices() > CHEEGER_VERTEX_LIMIT {
            continue;
        }
        accepted += 1;
        let (s, t) = (build_s(n, r).map_err(|e| e.to_string())?, build_t(&spec).map_err(|e| e.to_string())?);
        let identity = check_laplacian_identity(&s, &t, &g).map_err(|e| e.to_string())?;
        let h = cheeger_constant(&g).map_err(|e| e.to_string())?;
        let l2 = lambda2(&g).value;
        let cf = friedrichs(&s, &t, DEFAULT_TOL_ONE).map_err(|e| e.to_string())?;
        let (nf, rf) = (n as f64, r as f64);
        let nr2 = nf * nf * rf * rf;
        let checks = [
            (identity <= 1e-10, "Laplacian identity"),
            (h >= 2.0 / (nf * rf), "h_G >= 2/(NR)"),
            (l2 >= h * h / 2.0, "lambda2 >= h_G^2/2"),
            (l2 >= 2.0 / nr2, "lambda2 >= 2/(N^2 R^2)"),
            (cf * cf <= 1.0 - ((rf - 1.0) / rf) * (2.0 / nr2), "cF2 bound"),
        ];
        if let Some((_, what)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(format!("N={n}, R={r}: {what} fails (h={h}, lambda2={l2}, cF2={}, identity={identity:e})", cf * cf));
        }
        max_identity = max_identity.max(identity);
    }
    Ok(format!("100 connected specs (from {drawn} drawn), max identity residual {max_identity:.1e}"))
}

fn circulant() -> Verdict {
    let mut worst = 0.0_f64;
    for n in (2..=20).step_by(2) {
        let got = circulant_spectrum(n).map_err(|e| e.to_string())?;
        let mut want: Vec<f64> = (0..n).map(|j| 1.0 + (TAU * j as f64 / n as f64).cos()).collect();
        want.sort_by(f64::total_cmp);
        if got.len() != n {
            return Err(format!("N={n}: {} eigenvalues", got.len()));
        }
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst <= 1e-9 {
        Ok(format!("even N in 2..=20, max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:e}"))
    }
}

fn primal_rates_and_vertex_norms(runs: &[RateRun], problems: &[DecomposableProblem]) -> Verdict {
    let rates = rate_check(runs, |r| r.primal_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for p in problems {
        let fmax = p.brute_force_fmax().map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let x: Vec<f64> = (0..p.ground_size()).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let s = p.greedy_base_vertex(&x);
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 3.0 * fmax {
                return Err(format!("greedy vertex norm {norm} above 3 F_max = {}", 3.0 * fmax));
            }
            if fmax > 0.0 {
                worst = worst.max(norm / fmax);
            }
        }
    }
    Ok(format!("{rates}; max ||s||/F_max {worst:.3}"))
}

fn deterministic_traces() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name);
    let as_str = |p: &Path| p.to_str().unwrap().to_owned();
    for seed in 0..10u64 {
        let problem = as_str(&path(&format!("p{seed}.json")));
        cli(&["generate", "random", "--n", "10", "--r", "4", "--seed", &seed.to_string(), "--out", &problem])?;
        let mut traces = Vec::new();
        for (i, parallel) in [false, true, false, true].into_iter().enumerate() {
            let trace = as_str(&path(&format!("t{seed}_{i}.csv")));
            let mut args = vec!["solve", problem.as_str(), "--seed", "42", "--trace", trace.as_str()];
            if parallel {
                args.push("--parallel");
            }
            let _ = run_args(std::iter::once("apsfm").chain(args.iter().copied())).map_err(|e| e.to_string())?;
            traces.push(std::fs::read(&trace).map_err(|e| e.to_string())?);
        }
        if traces.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("instance {seed}: traces differ"));
        }
    }
    Ok("10 instances, 4 runs each (2 sequential, 2 parallel), byte-identical".into())
}

fn main() {
    let (runs, problems) = match rate_suite() {
        Ok(v) => v,
        Err(e) => {
            println!("criterion 3: FAIL rate suite did not run: {e}");
            std::process::exit(1);
        }
    };
    let results: Vec<(u8, &str, Verdict)> = vec![
        (1, "lower-bound ratio curves", lower_bound_curves()),
        (2, "worst-case ratios equal cF2", worst_case_ratios()),
        (3, "AP contraction within 1 - 1/(N^2 R^2)", rate_check(&runs, |r| r.rate)),
        (4, "certified solves match brute force", certified_solves()),
        (5, "projector certification", projector_certificates()),
        (6, "spectral chain", spectral_chain()),
        (7, "circulant spectrum", circulant()),
        (8, "primal rate and greedy vertex norms", primal_rates_and_vertex_norms(&runs, &problems)),
        (9, "deterministic traces", deterministic_traces()),
    ];
    let mut failed = 0;
    for (id, name, verdict) in &results {
        match verdict {
            Ok(detail) => println!("criterion {id}: PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id}: FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
