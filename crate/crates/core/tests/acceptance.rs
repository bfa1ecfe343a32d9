//! Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.

use hypercircle::afem::{
    check_hypotheses, consecutive_pairs, doerfler_mark, loglog_slope, run, AfemConfig, AfemRun, Bisections,
    EstimatorKind, StoppingRule,
};
use hypercircle::equilibration::{prager_synge_terms, reconstruct};
use hypercircle::estimators::estimate;
use hypercircle::galerkin::{solve_poisson, FeSpace};
use hypercircle::harness::{execute, parse_config, problem, Invocation};
use hypercircle::mesh::interior_node_property;
use hypercircle::{Mesh, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

/// Largest `|div q + Π^k f|` and `|[[q·n]]|` residuals on uniform meshes of up to 1e4 triangles.
fn equilibration_exactness() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for id in ["square_poly", "square_sine"] {
        let p = problem(id)?;
        for k in 1..=2 {
            let mut mesh = p.mesh.clone();
            while mesh.n_triangles() * 2 <= 10_000 {
                mesh = mesh.refine_uniform()?;
                let space = FeSpace::new(Arc::new(mesh.clone()), k)?;
                let u_h = solve_poisson(&space, &p.f)?;
                let res = reconstruct(&u_h, &p.f)?.residuals.expect("verified");
                worst = worst.max(res.div).max(res.jump);
                largest = largest.max(mesh.n_triangles());
            }
        }
    }
    verdict(worst < 1e-10, format!("max relative residual {worst:.2e} (< 1e-10), up to {largest} triangles"))
}

fn poly_run(k: usize, levels: usize) -> Result<(hypercircle::afem::Problem, AfemRun)> {
    let p = problem("square_poly")?;
    let config = AfemConfig { degree: k, stop: StoppingRule::MaxLevels(levels), ..AfemConfig::default() };
    let r = run(&p, &config)?;
    Ok((p, r))
}

fn hypercircle_identity() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 2..=3 {
        let (p, r) = poly_run(k, 7)?;
        let grad = p.exact.expect("exact").grad;
        for level in &r.levels {
            let flux = reconstruct(&level.u_h, &p.f)?;
            let (t1, t2, t3) = prager_synge_terms(&grad, &level.u_h, &flux.q);
            worst = worst.max(((t1 + t2) - t3).abs() / t3);
            count += 1;
        }
    }
    verdict(worst < 1e-10, format!("max |t1 + t2 - t3| / t3 = {worst:.2e} (< 1e-10) over {count} levels, k = 2, 3"))
}

fn constant_one_reliability() -> Result<Verdict> {
    let mut min_gap = f64::INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut pass = true;
    for k in 2..=3 {
        let (_, r) = poly_run(k, 7)?;
        for rec in &r.records {
            let err = rec.energy_error().expect("exact");
            let eta = rec.totals.eta_delta;
            pass &= err <= eta + 1e-10;
            min_gap = min_gap.min(eta - err);
            lo = lo.min(eta / err);
            hi = hi.max(eta / err);
        }
    }
    pass &= lo >= 1.0 && hi <= 20.0;
    verdict(pass, format!("min(eta_delta - error) = {min_gap:.2e}, efficiency index in [{lo:.4}, {hi:.4}] (within [1, 20])"))
}

fn polynomial_exactness() -> Result<Verdict> {
    let p = problem("square_poly")?;
    let space = FeSpace::new(Arc::new(p.mesh.clone()), 4)?;
    let u_h = solve_poisson(&space, &p.f)?;
    let grad = p.exact.expect("exact").grad;
    let (report, _) = estimate(&u_h, &p.f, Some(&grad))?;
    let t = report.totals;
    let values = [
        ("error", t.energy_error.expect("exact")),
        ("eta_delta", t.eta_delta),
        ("eta_star", t.eta_star),
        ("eta_res", t.eta_res),
        ("osc", t.osc),
    ];
    let max = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let list: Vec<String> = values.iter().map(|(n, v)| format!("{n} {v:.1e}")).collect();
    verdict(max < 1e-9, format!("k = 4 on the initial mesh: {} (all < 1e-9)", list.join(", ")))
}

fn slope_of(r: &AfemRun, y: impl Fn(&hypercircle::afem::ConvergenceRecord) -> f64) -> f64 {
    let tail = &r.records[r.records.len() / 2..];
    let points: Vec<(f64, f64)> = tail.iter().map(|rec| (rec.n_dofs as f64, y(rec))).collect();
    loglog_slope(&points).unwrap_or(f64::NAN)
}

fn rates(adaptive: &AfemRun) -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    let sine = problem("square_sine")?;
    for k in 1..=2 {
        let config = AfemConfig {
            degree: k,
            theta: 1.0,
            bisections: Bisections::Fixed(1),
            stop: StoppingRule::MaxDofs(30_000),
            ..AfemConfig::default()
        };
        let r = run(&sine, &config)?;
        let s = slope_of(&r, |rec| rec.energy_error().expect("exact"));
        let want = -(k as f64) / 2.0;
        pass &= (s - want).abs() <= 0.1;
        parts.push(format!("sine k={k} uniform {s:.3} (want {want} ± 0.1)"));
    }
    let lshape = problem("lshape_one")?;
    let uniform = run(
        &lshape,
        &AfemConfig {
            theta: 1.0,
            bisections: Bisections::Fixed(1),
            stop: StoppingRule::MaxDofs(100_000),
            ..AfemConfig::default()
        },
    )?;
    let sa = slope_of(adaptive, |rec| rec.estimator);
    let su = slope_of(&uniform, |rec| rec.estimator);
    pass &= (sa + 0.5).abs() <= 0.1 && (su + 1.0 / 3.0).abs() <= 0.05;
    parts.push(format!(
        "lshape adaptive {sa:.3} (want -0.5 ± 0.1, {} dofs) vs uniform {su:.3} (want -1/3 ± 0.05, {} dofs)",
        adaptive.records.last().map_or(0, |r| r.n_dofs),
        uniform.records.last().map_or(0, |r| r.n_dofs)
    ));
    verdict(pass, parts.join("; "))
}

fn equivalence_bracket(adaptive: &AfemRun) -> Result<Verdict> {
    let n = adaptive.levels.len();
    let bracket = |levels: &[hypercircle::afem::Level]| {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for level in levels {
            let r = &level.report;
            for v in 0..r.eta_star.len() {
                let ratio = r.eta_star[v] / (r.eta_res_patch[v] + r.osc_patch[v]);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        (lo, hi)
    };
    let (c1, c2) = bracket(&adaptive.levels);
    let (a1, a2) = bracket(&adaptive.levels[..n / 2]);
    let (b1, b2) = bracket(&adaptive.levels[n / 2..]);
    let stable = |a: f64, b: f64| (a - b).abs() <= 0.2 * a.max(b);
    let pass = c2 / c1 < 50.0 && stable(a1, b1) && stable(a2, b2);
    verdict(
        pass,
        format!(
            "[c1, c2] = [{c1:.4}, {c2:.4}], c2/c1 = {:.2} (< 50); first half [{a1:.4}, {a2:.4}], second half [{b1:.4}, {b2:.4}] (±20%)",
            c2 / c1
        ),
    )
}

fn oscillation_reduction() -> Result<Verdict> {
    let p = problem("square_xy")?;
    let config = AfemConfig { degree: 1, stop: StoppingRule::MaxLevels(10), ..AfemConfig::default() };
    let r = run(&p, &config)?;
    let monotone = r.records.windows(2).all(|w| {
        w[1].totals.osc <= w[0].totals.osc * (1.0 + 1e-12) && w[1].totals.osc_star <= w[0].totals.osc_star * (1.0 + 1e-12)
    });
    let d = check_hypotheses(&r, &p, &consecutive_pairs(r.levels.len()))?;
    let min = |f: fn(&hypercircle::afem::HypothesisRow) -> Option<f64>| {
        d.rows.iter().filter_map(f).fold(f64::INFINITY, f64::min)
    };
    let (le, lp) = (min(|r| r.lambda_elem), min(|r| r.lambda_patch));
    verdict(
        monotone && le > 0.0 && lp > 0.0 && le.is_finite() && lp.is_finite(),
        format!(
            "osc and osc_star non-increasing over {} levels: {monotone}; admissible lambda = {le:.4} (elementwise), {lp:.4} (patchwise)",
            r.records.len()
        ),
    )
}

/// Smallest number of indicators whose squares reach `θ²` of the total, by subset enumeration.
fn exhaustive_min(eta: &[f64], theta: f64) -> usize {
    let sq: Vec<f64> = eta.iter().map(|x| x * x).collect();
    let target = theta * theta * sq.iter().sum::<f64>() * (1.0 - 1e-12);
    (0u32..1 << eta.len())
        .filter(|mask| (0..eta.len()).filter(|i| mask >> i & 1 == 1).map(|i| sq[i]).sum::<f64>() >= target)
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

fn doerfler_minimality() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let eta: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        let theta = rng.random_range(0.01..=1.0);
        let marked = doerfler_mark(&eta, theta)?;
        if marked.len() != exhaustive_min(&eta, theta) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches against exhaustive search in 1000 cases"))
}

fn interior_node_property_check() -> Result<Verdict> {
    let mesh = Mesh::l_shape();
    let j_star = mesh.interior_node_depth();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut ok_jstar, mut failing_b1) = (0, 0);
    for _ in 0..20 {
        let mut marked: Vec<usize> = (0..mesh.n_triangles()).filter(|_| rng.random_bool(0.3)).collect();
        if marked.is_empty() {
            marked.push(rng.random_range(0..mesh.n_triangles()));
        }
        if interior_node_property(&mesh, &mesh.bisect(&marked, j_star)?, &marked)?.ok() {
            ok_jstar += 1;
        }
        if !interior_node_property(&mesh, &mesh.bisect(&marked, 1)?, &marked)?.ok() {
            failing_b1 += 1;
        }
    }
    verdict(
        ok_jstar == 20 && failing_b1 > 0,
        format!("b = j* = {j_star}: {ok_jstar}/20 sets satisfy the property; b = 1: {failing_b1}/20 sets violate it"),
    )
}

fn determinism() -> Result<Verdict> {
    let dir = tempfile::tempdir()?;
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let argv = [
            "afem", "--problem", "lshape_one", "--degree", "2", "--estimator", "star", "--max-dofs", "5000",
            "--out", out.to_str().expect("utf-8 temp dir"),
        ];
        let Invocation::Run(config) = parse_config(argv)? else { unreachable!() };
        execute(&config)?;
        outputs.push(std::fs::read(out.join("run.csv"))?);
    }
    let same = outputs[0] == outputs[1];
    verdict(same, format!("two runs wrote {} and {} bytes of run.csv, identical: {same}", outputs[0].len(), outputs[1].len()))
}

fn report(n: usize, name: &str, start: Instant, v: Result<Verdict>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match v {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("{} {n:>2} {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "equilibration exactness", t, equilibration_exactness());
    let t = Instant::now();
    all &= report(2, "hypercircle identity", t, hypercircle_identity());
    let t = Instant::now();
    all &= report(3, "constant-one reliability", t, constant_one_reliability());
    let t = Instant::now();
    all &= report(4, "polynomial exactness", t, polynomial_exactness());

    let t = Instant::now();
    let lshape = problem("lshape_one").and_then(|p| {
        let config = AfemConfig {
            estimator: EstimatorKind::Delta,
            theta: 0.5,
            bisections: Bisections::Auto,
            stop: StoppingRule::MaxDofs(100_000),
            ..AfemConfig::default()
        };
        run(&p, &config)
    });
    match &lshape {
        Ok(adaptive) => {
            all &= report(5, "rates", t, rates(adaptive));
            let t = Instant::now();
            all &= report(6, "equivalence bracket", t, equivalence_bracket(adaptive));
        }
        Err(e) => {
            println!("FAIL  5 rates: adaptive run failed: {e}");
            println!("FAIL  6 equivalence bracket: adaptive run failed: {e}");
            all = false;
        }
    }

    let t = Instant::now();
    all &= report(7, "oscillation reduction", t, oscillation_reduction());
    let t = Instant::now();
    all &= report(8, "Dörfler minimality", t, doerfler_minimality());
    let t = Instant::now();
    all &= report(9, "interior-node property", t, interior_node_property_check());
    let t = Instant::now();
    all &= report(10, "determinism", t, determinism());
    if !all {
        std::process::exit(1);
    }
}
