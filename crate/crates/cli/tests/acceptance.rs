//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every line is printed regardless of outcome.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use endspin_cli::args::{ChainArgs, EngineChoice};
use endspin_cli::{
    disorder_study, ed_compare, purify_fef, scan_n, scan_record, thread_pool, ScanOutcome,
    ScanRecord,
};
use endspin_core::exactdiag::{two_spin_rdm, ExactDynamics};
use endspin_core::freefermion::{propagator, Propagator};
use endspin_core::{
    build_dynamics, find_tmax, fully_entangled_fraction, realize_couplings, recurrence_step,
    recurrence_step_dense, Anisotropy, BellDiagonal, ChainSpec, Engine,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ideal_chain() -> ChainArgs {
    ChainArgs {
        delta1: Anisotropy::Infinite,
        delta2: 0.0,
        j: 1.0,
        sigma: 0.0,
        seed: 0,
        engine: EngineChoice::Auto,
        horizon: None,
    }
}

fn timed_record(n: usize) -> (ScanRecord, f64) {
    let start = Instant::now();
    let spec = ChainSpec::ideal(n);
    let record = scan_record(&spec, Engine::FreeFermion, None).expect("scan record");
    (record, start.elapsed().as_secs_f64())
}

fn criterion_1() -> Outcome {
    let (r, secs) = timed_record(9);
    let pass = (r.fef_at_tmax - 0.9117).abs() <= 5e-4 && secs < 1.0;
    outcome(
        pass,
        format!(
            "N=9 fef {:.6} at t {:.6}, {secs:.3} s",
            r.fef_at_tmax, r.t_max
        ),
    )
}

fn criterion_2() -> Outcome {
    let (r, secs) = timed_record(151);
    let pass = (r.fef_at_tmax - 0.544).abs() <= 2e-3 && secs < 30.0;
    outcome(
        pass,
        format!(
            "N=151 fef {:.6} at t {:.4}, {secs:.3} s",
            r.fef_at_tmax, r.t_max
        ),
    )
}

fn criterion_3(scan: &ScanOutcome, secs: f64) -> Outcome {
    let worst = scan
        .records
        .iter()
        .min_by(|a, b| a.fef_at_tmax.total_cmp(&b.fef_at_tmax))
        .expect("non-empty scan");
    let pass = scan.records.iter().all(|r| r.fef_at_tmax > 0.5) && secs < 600.0;
    outcome(
        pass,
        format!(
            "{} odd N up to 241, lowest fef {:.6} at N={}, {secs:.1} s",
            scan.records.len(),
            worst.fef_at_tmax,
            worst.n
        ),
    )
}

fn criterion_4(scan: &ScanOutcome) -> Outcome {
    let fit = scan.fit.as_ref().expect("fit over N >= 25");
    let (nu, amp) = (fit.power_law.exponent, fit.power_law.amplitude);
    let pass = (0.13..=0.31).contains(&nu) && (1.33..=1.51).contains(&amp);
    outcome(
        pass,
        format!(
            "nu {nu:.4}, amplitude {amp:.4}, log rms {:.2e}",
            fit.power_law.residual
        ),
    )
}

fn criterion_5(scan: &ScanOutcome) -> Outcome {
    let fit = scan.fit.as_ref().expect("fit over N >= 25");
    let slope = fit.tmax_vs_n.slope;
    let rel = (slope - FRAC_1_PI).abs() / FRAC_1_PI;
    let below = scan
        .records
        .iter()
        .filter(|r| r.n >= 25)
        .all(|r| r.t_max < r.n as f64 / PI);
    outcome(
        rel <= 0.10 && below,
        format!(
            "slope {slope:.4} vs 1/pi {FRAC_1_PI:.4} ({:.1}% off), intercept {:.3}, all T_max < N/pi: {below}",
            100.0 * rel,
            fit.tmax_vs_n.intercept
        ),
    )
}

fn purification(
    source: f64,
    iterations: usize,
    fidelity: (f64, f64),
    pairs: (f64, f64),
) -> Outcome {
    let report = purify_fef(source, 0.99).expect("purification report");
    let its = report.iterations.unwrap_or(0);
    let fin = report
        .fidelities
        .as_ref()
        .and_then(|f| f.last().copied())
        .unwrap_or(f64::NAN);
    let p = report.expected_pairs.unwrap_or(f64::NAN);
    let pass = its == iterations
        && (fin - fidelity.0).abs() <= fidelity.1
        && (pairs.0..=pairs.1).contains(&p);
    outcome(
        pass,
        format!("source {source:.6}: {its} iterations, final {fin:.6}, expected pairs {p:.3}"),
    )
}

fn criterion_6(scan: &ScanOutcome) -> Outcome {
    let r = scan
        .records
        .iter()
        .find(|r| r.n == 151)
        .expect("N=151 in scan");
    purification(r.fef_at_tmax, 5, (0.996, 2e-3), (325.0, 397.0))
}

fn criterion_7(scan: &ScanOutcome) -> Outcome {
    let r = scan.records.iter().find(|r| r.n == 9).expect("N=9 in scan");
    purification(r.fef_at_tmax, 1, (0.991, 1e-3), (2.5, 3.5))
}

fn criterion_8() -> Outcome {
    let pool = thread_pool(0).unwrap();
    let rows = ed_compare(&[3, 5, 7, 9, 11], 50, None, &pool).expect("engine comparison");
    let grid_dev = rows.iter().map(|r| r.max_dev()).fold(0.0, f64::max);
    // Random times as well as the uniform grid.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut random_dev = 0.0f64;
    for n in [3, 5, 7, 9, 11] {
        let spec = ChainSpec::ideal(n);
        let ff = build_dynamics(&spec, Engine::FreeFermion).unwrap();
        let ed = build_dynamics(&spec, Engine::ExactDiag).unwrap();
        for _ in 0..50 {
            let t = rng.random_range(0.0..2.0 * n as f64);
            let dev = ff
                .end_spin_state(t)
                .unwrap()
                .max_deviation(&ed.end_spin_state(t).unwrap());
            random_dev = random_dev.max(dev);
        }
    }
    let worst = grid_dev.max(random_dev);
    outcome(
        worst <= 1e-8,
        format!("max |dev| {grid_dev:.2e} on grid, {random_dev:.2e} at random times"),
    )
}

fn criterion_9() -> Outcome {
    // FEF = max(a, b + |c|) with a = cos²(√2t)/2 and b + |c| = sin²(√2t).
    let dynamics = build_dynamics(&ChainSpec::ideal(3), Engine::FreeFermion).unwrap();
    let (mut branch_dev, mut fef_dev) = (0.0f64, 0.0f64);
    for k in 0..=3000 {
        let t = k as f64 * 1e-3;
        let s = dynamics.end_spin_state(t).unwrap();
        let s2 = (SQRT_2 * t).sin().powi(2);
        branch_dev = branch_dev.max((s.b + s.c.abs() - s2).abs());
        fef_dev = fef_dev.max((fully_entangled_fraction(&s).fef - s2.max(0.5 * (1.0 - s2))).abs());
    }
    let peak = find_tmax(dynamics.as_ref(), 1.0, None).unwrap();
    let t_dev = (peak.t_max - PI / (2.0 * SQRT_2)).abs();
    let f_dev = (peak.fef_at_tmax - 1.0).abs();
    let pass = branch_dev <= 1e-10 && fef_dev <= 1e-10 && t_dev <= 1e-6 && f_dev <= 1e-10;
    outcome(
        pass,
        format!(
            "psi+ branch vs sin^2 {branch_dev:.1e}, fef vs closed form {fef_dev:.1e}, T_max off {t_dev:.1e}, peak off {f_dev:.1e}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let pool = thread_pool(0).unwrap();
    let rows = ed_compare(&[4, 6, 8], 200, None, &pool).expect("engine comparison");
    let neg = rows.iter().map(|r| r.max_negativity).fold(0.0, f64::max);
    let dev = rows.iter().map(|r| r.max_dev()).fold(0.0, f64::max);
    outcome(
        neg <= 1e-10,
        format!("max negativity {neg:.2e} over both engines, engine gap {dev:.2e}"),
    )
}

fn criterion_11() -> Outcome {
    let pool = thread_pool(0).unwrap();
    let clean = scan_record(&ChainSpec::ideal(7), Engine::FreeFermion, None).unwrap();
    let study = disorder_study(7, &ideal_chain(), &[0.0, 0.1, 0.2, 0.3], 100, 0.02, &pool)
        .expect("disorder study");
    let s = &study.summary[1];
    let height = (s.mean_fef_at_tmax - clean.fef_at_tmax).abs() / clean.fef_at_tmax;
    let time = (s.mean_t_max - clean.t_max).abs() / clean.t_max;
    let heights: Vec<f64> = study.summary.iter().map(|s| s.mean_fef_at_tmax).collect();
    let ordered = heights.windows(2).all(|w| w[0] > w[1]);
    let curve_peaks: Vec<f64> = study
        .series
        .iter()
        .map(|c| c.mean_fef.iter().copied().fold(f64::MIN, f64::max))
        .collect();
    let curves_ordered = curve_peaks.windows(2).all(|w| w[0] > w[1]);
    outcome(
        height <= 0.05 && time <= 0.10 && ordered && curves_ordered,
        format!(
            "sigma 0.1: peak off {:.2}%, T_max off {:.2}%; mean peaks {:?}; mean-curve maxima {:?}",
            100.0 * height,
            100.0 * time,
            heights
                .iter()
                .map(|h| format!("{h:.4}"))
                .collect::<Vec<_>>(),
            curve_peaks
                .iter()
                .map(|h| format!("{h:.4}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn group_law_defect(a: &Propagator, b: &Propagator, ab: &Propagator) -> f64 {
    (&a.matrix * &b.matrix - &ab.matrix)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_endspin"))
        .args(args)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    matches!((std::fs::read(a), std::fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn replays_match(dir: &Path) -> bool {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let (scan_a, scan_b) = (dir.join("scan_a.csv"), dir.join("scan_b.csv"));
    let (dis_a, dis_b) = (dir.join("dis_a.csv"), dir.join("dis_b.csv"));
    let ok = run_cli(&[
        "--threads",
        "1",
        "scan-n",
        "--n",
        "3..61:2",
        "--out",
        &s(&scan_a),
    ]) && run_cli(&[
        "--threads",
        "4",
        "replay",
        &s(&dir.join("scan_a.csv.manifest.json")),
        "--out",
        &s(&scan_b),
    ]) && run_cli(&[
        "--threads",
        "1",
        "disorder",
        "--n",
        "7",
        "--realizations",
        "12",
        "--seed",
        "77",
        "--out",
        &s(&dis_a),
    ]) && run_cli(&[
        "--threads",
        "3",
        "replay",
        &s(&dir.join("dis_a.csv.manifest.json")),
        "--out",
        &s(&dis_b),
    ]);
    ok && same_bytes(&scan_a, &scan_b)
        && same_bytes(&dis_a, &dis_b)
        && same_bytes(
            &dir.join("dis_a_summary.csv"),
            &dir.join("dis_b_summary.csv"),
        )
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);

    let (mut unitarity, mut group) = (0.0f64, 0.0f64);
    for k in 0..200u64 {
        let n = rng.random_range(2..=241);
        let sigma = if k % 2 == 0 {
            0.0
        } else {
            rng.random_range(0.0..0.3)
        };
        let spec = ChainSpec {
            disorder_sigma: sigma,
            seed: k,
            ..ChainSpec::ideal(n)
        };
        let r = realize_couplings(&spec);
        let (t1, t2) = (rng.random_range(0.0..30.0), rng.random_range(0.0..30.0));
        let (p1, p2, p12) = (
            propagator(&r, t1).unwrap(),
            propagator(&r, t2).unwrap(),
            propagator(&r, t1 + t2).unwrap(),
        );
        unitarity = unitarity
            .max(p1.unitarity_defect())
            .max(p12.unitarity_defect());
        group = group.max(group_law_defect(&p1, &p2, &p12));
    }

    let mut rdm_failures = 0;
    let mut rdm_worst = 0.0f64;
    for k in 0..60u64 {
        let n = rng.random_range(2..=10);
        let delta1 = if k % 3 == 0 {
            Anisotropy::Infinite
        } else {
            Anisotropy::Finite(rng.random_range(1.5..6.0))
        };
        let spec = ChainSpec {
            delta1,
            delta2: rng.random_range(-2.0..2.0),
            disorder_sigma: rng.random_range(0.0..0.3),
            seed: k,
            ..ChainSpec::ideal(n)
        };
        let r = realize_couplings(&spec);
        let dynamics = match ExactDynamics::quench(&r, spec.delta1, spec.delta2) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let state = dynamics.evolve(rng.random_range(0.0..20.0)).unwrap();
        let i = rng.random_range(1..n);
        let j = rng.random_range(i + 1..=n);
        let rho = two_spin_rdm(&state, i, j).unwrap();
        if rho.validate().is_err() {
            rdm_failures += 1;
        }
        let neg = rho.eigenvalues().iter().copied().fold(0.0, f64::min);
        rdm_worst = rdm_worst
            .max((rho.trace() - 1.0).abs())
            .max(rho.hermiticity_defect())
            .max(-neg);
    }

    let mut oracle = 0.0f64;
    for _ in 0..1000 {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
        let total: f64 = raw.iter().sum();
        let state = BellDiagonal::new(raw.map(|w| w / total)).unwrap();
        let (fast, p_fast) = recurrence_step(&state);
        let (dense, p_dense) = recurrence_step_dense(&state);
        let dev = fast
            .weights
            .iter()
            .zip(dense.weights)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        oracle = oracle.max(dev).max((p_fast - p_dense).abs());
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let replay = replays_match(dir.path());

    let pass = unitarity <= 1e-9
        && group <= 1e-9
        && rdm_failures == 0
        && rdm_worst <= 1e-9
        && oracle <= 1e-12
        && replay;
    outcome(
        pass,
        format!(
            "unitarity {unitarity:.1e}, group law {group:.1e}, rdm worst {rdm_worst:.1e} ({rdm_failures} invalid), recurrence oracle {oracle:.1e} over 1000, replay bit-identical: {replay}"
        ),
    )
}

fn main() {
    let ns: Vec<usize> = (3..=241).step_by(2).collect();
    let pool = thread_pool(0).unwrap();
    let start = Instant::now();
    let scan = scan_n(&ideal_chain(), &ns, false, &pool).expect("full scan");
    let scan_secs = start.elapsed().as_secs_f64();

    let results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3(&scan, scan_secs)),
        (4, criterion_4(&scan)),
        (5, criterion_5(&scan)),
        (6, criterion_6(&scan)),
        (7, criterion_7(&scan)),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10()),
        (11, criterion_11()),
        (12, criterion_12()),
    ];
    let mut failed = 0;
    for (id, o) in &results {
        println!(
            "criterion {id:>2}: {}  {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
