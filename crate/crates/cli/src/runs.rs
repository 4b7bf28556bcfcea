use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

use endspin_core::{
    build_dynamics, default_horizon, exactdiag, find_tmax, fit_power_law, fully_entangled_fraction,
    linear_fit, negativity, purify_until, realization_seed, Anisotropy, BellDiagonal, ChainSpec,
    EndSpinDynamics, EndSpinState, Engine, PurificationTrace, TmaxResult,
};

use crate::args::{
    default_n_list, parse_n_list, ChainArgs, Command, DisorderArgs, EdCompareArgs, PurifyArgs,
    QuenchArgs, ScanArgs,
};
use crate::manifest::{FitSummary, RunManifest};
use crate::output::{fmt_f64, read_csv, sibling, Table};
use crate::{CliError, CliResult, Exit};

/// Largest chain accepted by the engine comparison.
pub const ED_COMPARE_MAX_N: usize = 13;
/// Largest tolerated engine disagreement in (a, b, c).
pub const ED_COMPARE_TOL: f64 = 1e-8;
/// Even chains must stay separable to this precision.
pub const SEPARABILITY_TOL: f64 = 1e-10;
/// Smallest chain entering the scaling fits.
pub const FIT_MIN_N: usize = 25;

pub fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn check_engine(spec: &ChainSpec, engine: Engine) -> CliResult<()> {
    spec.validate()?;
    if engine == Engine::ExactDiag && spec.n > exactdiag::MAX_SITES {
        return Err(CliError::Usage(format!(
            "exact diagonalization is limited to N <= {}; use the free-fermion engine for N = {}",
            exactdiag::MAX_SITES,
            spec.n
        )));
    }
    Ok(())
}

/// `0, step, 2·step, …` up to and including `end` (within rounding).
pub fn uniform_grid(end: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && end >= 0.0 && end.is_finite()) {
        return Err(CliError::Usage(format!(
            "invalid time grid: end {end}, step {step}"
        )));
    }
    let count = (end / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchRow {
    pub state: EndSpinState,
    pub fef: f64,
    pub negativity: f64,
}

pub fn quench_series(spec: &ChainSpec, engine: Engine, times: &[f64]) -> CliResult<Vec<QuenchRow>> {
    check_engine(spec, engine)?;
    if times.is_empty() {
        return Err(CliError::Usage("empty time grid".into()));
    }
    let dynamics = build_dynamics(spec, engine)?;
    times
        .iter()
        .map(|&t| {
            let state = dynamics.end_spin_state(t)?;
            Ok(QuenchRow {
                state,
                fef: fully_entangled_fraction(&state).fef,
                negativity: negativity(&state),
            })
        })
        .collect()
}

pub fn quench_table(rows: &[QuenchRow]) -> Table {
    let mut table = Table::new(vec!["t", "a", "b", "c", "fef", "negativity"]);
    for r in rows {
        let s = &r.state;
        table.push(vec![
            fmt_f64(s.t),
            fmt_f64(s.a),
            fmt_f64(s.b),
            fmt_f64(s.c),
            fmt_f64(r.fef),
            fmt_f64(r.negativity),
        ]);
    }
    table
}

/// One chain length (and realization) of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub n: usize,
    pub delta1: Anisotropy,
    pub delta2: f64,
    pub disorder_sigma: f64,
    pub seed: u64,
    pub t_max: f64,
    pub fef_at_tmax: f64,
    pub engine: Engine,
    pub runtime_ms: u64,
}

pub fn scan_record(
    spec: &ChainSpec,
    engine: Engine,
    horizon: Option<f64>,
) -> CliResult<ScanRecord> {
    check_engine(spec, engine)?;
    let start = Instant::now();
    let dynamics = build_dynamics(spec, engine)?;
    let (t_max, fef_at_tmax) = match find_tmax(dynamics.as_ref(), spec.j, horizon) {
        Ok(peak) => (peak.t_max, peak.fef_at_tmax),
        // Even chains stay separable and never rise above the initial value.
        Err(endspin_core::Error::NoMaximum { .. }) if spec.n.is_multiple_of(2) => {
            (0.0, dynamics.fef(0.0)?)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(ScanRecord {
        n: spec.n,
        delta1: spec.delta1,
        delta2: spec.delta2,
        disorder_sigma: spec.disorder_sigma,
        seed: spec.seed,
        t_max,
        fef_at_tmax,
        engine,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Scan table; the runtime lives in the manifest so reruns stay byte-identical.
pub fn scan_table(records: &[ScanRecord]) -> Table {
    let mut table = Table::new(vec![
        "n",
        "delta1",
        "delta2",
        "disorder_sigma",
        "seed",
        "t_max",
        "fef_at_tmax",
        "engine",
    ]);
    for r in records {
        table.push(vec![
            r.n.to_string(),
            fmt_f64(r.delta1.as_f64()),
            fmt_f64(r.delta2),
            fmt_f64(r.disorder_sigma),
            r.seed.to_string(),
            fmt_f64(r.t_max),
            fmt_f64(r.fef_at_tmax),
            r.engine.to_string(),
        ]);
    }
    table
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    pub records: Vec<ScanRecord>,
    pub fit: Option<FitSummary>,
}

/// Power law of the peak FEF and line of T_max, over records with N ≥ `min_n`.
pub fn fit_scan(records: &[ScanRecord], min_n: usize) -> CliResult<Option<FitSummary>> {
    let used: Vec<&ScanRecord> = records.iter().filter(|r| r.n >= min_n).collect();
    if used.len() < 3 {
        return Ok(None);
    }
    let points: Vec<(f64, f64)> = used.iter().map(|r| (r.n as f64, r.fef_at_tmax)).collect();
    let ns: Vec<f64> = used.iter().map(|r| r.n as f64).collect();
    let ts: Vec<f64> = used.iter().map(|r| r.t_max).collect();
    Ok(Some(FitSummary {
        min_n,
        power_law: fit_power_law(&points)?,
        tmax_vs_n: linear_fit(&ns, &ts)?,
    }))
}

pub fn scan_n(
    chain: &ChainArgs,
    ns: &[usize],
    allow_even: bool,
    pool: &rayon::ThreadPool,
) -> CliResult<ScanOutcome> {
    if let Some(n) = ns.iter().find(|&&n| n % 2 == 0) {
        if !allow_even {
            return Err(CliError::Usage(format!(
                "even chain length {n}: end spins stay separable; pass --allow-even to scan anyway"
            )));
        }
    }
    let records = pool.install(|| {
        ns.par_iter()
            .map(|&n| {
                let spec = chain.spec(n);
                scan_record(&spec, chain.engine.resolve(&spec), chain.horizon)
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    let fit = fit_scan(&records, FIT_MIN_N)?;
    Ok(ScanOutcome { records, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSummary {
    pub sigma: f64,
    pub realizations: usize,
    pub mean_fef_at_tmax: f64,
    pub stderr_fef_at_tmax: f64,
    pub mean_t_max: f64,
    pub stderr_t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSeries {
    pub sigma: f64,
    pub times: Vec<f64>,
    pub mean_fef: Vec<f64>,
    pub stderr_fef: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderOutcome {
    pub series: Vec<DisorderSeries>,
    pub summary: Vec<DisorderSummary>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    // Shifted about the first sample, so identical samples average to themselves exactly.
    let mean = xs[0] + xs.iter().map(|x| x - xs[0]).sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Doublings of the search horizon tried before a realization is declared peakless.
pub const HORIZON_DOUBLINGS: u32 = 3;

/// `find_tmax`, doubling the horizon when a strongly disordered realization
/// peaks late. The first maximum found is the same whichever horizon contains it.
pub fn find_tmax_extending<D: EndSpinDynamics + ?Sized>(
    dynamics: &D,
    j: f64,
    horizon: f64,
) -> endspin_core::Result<TmaxResult> {
    let mut h = horizon;
    for _ in 0..HORIZON_DOUBLINGS {
        match find_tmax(dynamics, j, Some(h)) {
            Err(endspin_core::Error::NoMaximum { .. }) => h *= 2.0,
            other => return other,
        }
    }
    find_tmax(dynamics, j, Some(h))
}

/// Disorder ensemble: realization r of every σ uses seed `master ^ r`.
pub fn disorder_study(
    n: usize,
    chain: &ChainArgs,
    sigmas: &[f64],
    realizations: usize,
    grid_step: f64,
    pool: &rayon::ThreadPool,
) -> CliResult<DisorderOutcome> {
    if realizations == 0 {
        return Err(CliError::Usage("need at least one realization".into()));
    }
    if sigmas.is_empty() {
        return Err(CliError::Usage(
            "need at least one disorder strength".into(),
        ));
    }
    let base = chain.spec(n);
    base.validate()?;
    let engine = chain.engine.resolve(&base);
    let times = uniform_grid(
        chain.horizon.unwrap_or_else(|| default_horizon(n, base.j)),
        grid_step,
    )?;
    let tasks: Vec<(usize, u64)> = (0..sigmas.len())
        .flat_map(|s| (0..realizations as u64).map(move |r| (s, r)))
        .collect();
    let results = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, r)| {
                let spec = ChainSpec {
                    disorder_sigma: sigmas[s],
                    seed: realization_seed(chain.seed, r),
                    ..base
                };
                check_engine(&spec, engine)?;
                let dynamics = build_dynamics(&spec, engine)?;
                let curve = times
                    .iter()
                    .map(|&t| dynamics.fef(t))
                    .collect::<endspin_core::Result<Vec<_>>>()?;
                let peak =
                    find_tmax_extending(dynamics.as_ref(), spec.j, default_horizon(n, spec.j))?;
                Ok((curve, peak))
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let mut series = Vec::with_capacity(sigmas.len());
    let mut summary = Vec::with_capacity(sigmas.len());
    for (s, chunk) in results.chunks(realizations).enumerate() {
        let mut mean_fef = Vec::with_capacity(times.len());
        let mut stderr_fef = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            let column: Vec<f64> = chunk.iter().map(|(curve, _)| curve[k]).collect();
            let (m, e) = mean_and_stderr(&column);
            mean_fef.push(m);
            stderr_fef.push(e);
        }
        let heights: Vec<f64> = chunk.iter().map(|(_, p)| p.fef_at_tmax).collect();
        let peaks: Vec<f64> = chunk.iter().map(|(_, p)| p.t_max).collect();
        let (mean_fef_at_tmax, stderr_fef_at_tmax) = mean_and_stderr(&heights);
        let (mean_t_max, stderr_t_max) = mean_and_stderr(&peaks);
        series.push(DisorderSeries {
            sigma: sigmas[s],
            times: times.clone(),
            mean_fef,
            stderr_fef,
        });
        summary.push(DisorderSummary {
            sigma: sigmas[s],
            realizations,
            mean_fef_at_tmax,
            stderr_fef_at_tmax,
            mean_t_max,
            stderr_t_max,
        });
    }
    Ok(DisorderOutcome { series, summary })
}

pub fn disorder_tables(outcome: &DisorderOutcome) -> (Table, Table) {
    let mut series = Table::new(vec!["sigma", "t", "mean_fef", "stderr_fef"]);
    for s in &outcome.series {
        for k in 0..s.times.len() {
            series.push(vec![
                fmt_f64(s.sigma),
                fmt_f64(s.times[k]),
                fmt_f64(s.mean_fef[k]),
                fmt_f64(s.stderr_fef[k]),
            ]);
        }
    }
    let mut summary = Table::new(vec![
        "sigma",
        "realizations",
        "mean_fef_at_tmax",
        "stderr_fef_at_tmax",
        "mean_t_max",
        "stderr_t_max",
    ]);
    for s in &outcome.summary {
        summary.push(vec![
            fmt_f64(s.sigma),
            s.realizations.to_string(),
            fmt_f64(s.mean_fef_at_tmax),
            fmt_f64(s.stderr_fef_at_tmax),
            fmt_f64(s.mean_t_max),
            fmt_f64(s.stderr_t_max),
        ]);
    }
    (series, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n: usize,
    pub max_dev_a: f64,
    pub max_dev_b: f64,
    pub max_dev_c: f64,
    /// Largest negativity seen by either engine.
    pub max_negativity: f64,
}

impl CompareRow {
    pub fn max_dev(&self) -> f64 {
        self.max_dev_a.max(self.max_dev_b).max(self.max_dev_c)
    }

    pub fn passes(&self) -> bool {
        self.max_dev() <= ED_COMPARE_TOL
            && (self.n % 2 == 1 || self.max_negativity <= SEPARABILITY_TOL)
    }
}

/// Runs both engines on the clean inf -> 0 quench over `points` uniform times.
pub fn ed_compare(
    ns: &[usize],
    points: usize,
    t_end: Option<f64>,
    pool: &rayon::ThreadPool,
) -> CliResult<Vec<CompareRow>> {
    if points < 2 {
        return Err(CliError::Usage("need at least two time points".into()));
    }
    if let Some(&n) = ns.iter().find(|&&n| !(2..=ED_COMPARE_MAX_N).contains(&n)) {
        return Err(CliError::Usage(format!(
            "engine comparison needs 2 <= N <= {ED_COMPARE_MAX_N}, got {n}"
        )));
    }
    pool.install(|| {
        ns.par_iter()
            .map(|&n| {
                let spec = ChainSpec::ideal(n);
                let ff = build_dynamics(&spec, Engine::FreeFermion)?;
                let ed = build_dynamics(&spec, Engine::ExactDiag)?;
                let end = t_end.unwrap_or(2.0 * n as f64);
                let mut row = CompareRow {
                    n,
                    max_dev_a: 0.0,
                    max_dev_b: 0.0,
                    max_dev_c: 0.0,
                    max_negativity: 0.0,
                };
                for k in 0..points {
                    let t = end * k as f64 / (points - 1) as f64;
                    let x = ff.end_spin_state(t)?;
                    let y = ed.end_spin_state(t)?;
                    row.max_dev_a = row.max_dev_a.max((x.a - y.a).abs());
                    row.max_dev_b = row.max_dev_b.max((x.b - y.b).abs());
                    row.max_dev_c = row.max_dev_c.max((x.c - y.c).abs());
                    row.max_negativity = row.max_negativity.max(negativity(&x)).max(negativity(&y));
                }
                Ok(row)
            })
            .collect()
    })
}

pub fn compare_table(rows: &[CompareRow]) -> Table {
    let mut table = Table::new(vec![
        "n",
        "max_dev_a",
        "max_dev_b",
        "max_dev_c",
        "max_negativity",
        "pass",
    ]);
    for r in rows {
        table.push(vec![
            r.n.to_string(),
            fmt_f64(r.max_dev_a),
            fmt_f64(r.max_dev_b),
            fmt_f64(r.max_dev_c),
            fmt_f64(r.max_negativity),
            r.passes().to_string(),
        ]);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurifyReport {
    pub source_fef: f64,
    pub threshold: f64,
    pub purifiable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_probabilities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_pairs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PurificationTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Purifies `f|Ψ⁺⟩⟨Ψ⁺| + (1-f)/2 (|↑↑⟩⟨↑↑| + |↓↓⟩⟨↓↓|)` up to `threshold`.
pub fn purify_fef(fef: f64, threshold: f64) -> CliResult<PurifyReport> {
    let mut report = PurifyReport {
        source_fef: fef,
        threshold,
        purifiable: false,
        iterations: None,
        fidelities: None,
        success_probabilities: None,
        expected_pairs: None,
        trace: None,
        reason: None,
    };
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(CliError::Usage(format!(
            "threshold must lie in (1/2, 1), got {threshold}"
        )));
    }
    if fef <= 0.5 {
        report.reason = Some(format!(
            "fully entangled fraction {fef} does not exceed 1/2"
        ));
        return Ok(report);
    }
    let trace = purify_until(&BellDiagonal::from_fidelity(fef)?, threshold)?;
    report.purifiable = true;
    report.iterations = Some(trace.iterations());
    report.fidelities = Some(
        std::iter::once(fef)
            .chain(trace.steps.iter().map(|s| s.output.fidelity()))
            .collect(),
    );
    report.success_probabilities =
        Some(trace.steps.iter().map(|s| s.success_probability).collect());
    report.expected_pairs = Some(trace.expected_pairs);
    report.trace = Some(trace);
    Ok(report)
}

/// Reads `fef_at_tmax` of chain length `n` from a scan table.
pub fn fef_from_scan(path: &Path, n: usize) -> CliResult<f64> {
    let (header, rows) = read_csv(&std::fs::read_to_string(path)?);
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{} has no column {name:?}", path.display())))
    };
    let (n_col, f_col) = (col("n")?, col("fef_at_tmax")?);
    let row = rows
        .iter()
        .find(|r| r.get(n_col).and_then(|v| v.parse::<usize>().ok()) == Some(n))
        .ok_or_else(|| CliError::Usage(format!("no record for N = {n} in {}", path.display())))?;
    row.get(f_col)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Usage(format!("unreadable fef for N = {n}")))
}

fn write_table(table: &Table, out: Option<&Path>, manifest: &mut RunManifest) -> CliResult<()> {
    table.write(out)?;
    if let Some(p) = out {
        manifest.outputs.push(p.to_path_buf());
    }
    Ok(())
}

fn finish(manifest: &RunManifest, out: Option<&Path>) -> CliResult<()> {
    if let Some(p) = out {
        manifest.write_next_to(p)?;
    }
    Ok(())
}

fn seed_of(command: &Command) -> u64 {
    match command {
        Command::Quench(a) => a.chain.seed,
        Command::ScanN(a) => a.chain.seed,
        Command::Disorder(a) => a.chain.seed,
        _ => 0,
    }
}

fn ground_state_note(chain: &ChainArgs) -> Option<String> {
    matches!(chain.delta1, Anisotropy::Finite(_)).then(|| {
        "finite pre-quench anisotropy: initial state is the equal-weight mixture of the degenerate ground multiplet"
            .to_string()
    })
}

/// Runs one command, writing its outputs and manifest.
pub fn execute(command: &Command, threads: usize) -> CliResult<Exit> {
    let pool = thread_pool(threads)?;
    let mut manifest = RunManifest::new(command.clone(), seed_of(command));
    match command {
        Command::Quench(QuenchArgs {
            n,
            chain,
            grid_step,
            times,
            out,
        }) => {
            let spec = chain.spec(*n);
            let engine = chain.engine.resolve(&spec);
            let grid = match times {
                Some(ts) => ts.clone(),
                None => uniform_grid(
                    chain
                        .horizon
                        .unwrap_or_else(|| default_horizon(*n, chain.j)),
                    *grid_step,
                )?,
            };
            let rows = quench_series(&spec, engine, &grid)?;
            manifest.notes.push(format!("engine: {engine}"));
            manifest.notes.extend(ground_state_note(chain));
            write_table(&quench_table(&rows), out.as_deref(), &mut manifest)?;
            finish(&manifest, out.as_deref())?;
        }
        Command::ScanN(ScanArgs {
            n_list,
            chain,
            allow_even,
            out,
        }) => {
            let ns = match n_list {
                Some(s) => parse_n_list(s).map_err(CliError::Usage)?,
                None => {
                    manifest
                        .notes
                        .push("default chain lengths: odd 3..49, then 51..241 step 10".into());
                    default_n_list()
                }
            };
            let outcome = scan_n(chain, &ns, *allow_even, &pool)?;
            manifest.fit = outcome.fit.clone();
            if ns.iter().any(|n| n % 2 == 0) {
                manifest.notes.push(
                    "even N without a peak above the initial value is recorded at t_max = 0".into(),
                );
            }
            manifest.runtime_ms = outcome.records.iter().map(|r| r.runtime_ms).collect();
            manifest.notes.extend(ground_state_note(chain));
            write_table(&scan_table(&outcome.records), out.as_deref(), &mut manifest)?;
            finish(&manifest, out.as_deref())?;
            if out.is_some() {
                if let Some(fit) = &outcome.fit {
                    eprintln!(
                        "fit over N >= {}: fef ~ {:.4} N^-{:.4}; T_max ~ {:.4} N + {:.4}",
                        fit.min_n,
                        fit.power_law.amplitude,
                        fit.power_law.exponent,
                        fit.tmax_vs_n.slope,
                        fit.tmax_vs_n.intercept
                    );
                }
            }
        }
        Command::Disorder(DisorderArgs {
            n,
            chain,
            sigmas,
            realizations,
            grid_step,
            out,
        }) => {
            let outcome = disorder_study(*n, chain, sigmas, *realizations, *grid_step, &pool)?;
            let (series, summary) = disorder_tables(&outcome);
            manifest
                .notes
                .push("realization r uses seed master_seed XOR r for every sigma".into());
            write_table(&series, out.as_deref(), &mut manifest)?;
            let summary_path = out.as_deref().map(|p| sibling(p, "summary"));
            write_table(&summary, summary_path.as_deref(), &mut manifest)?;
            finish(&manifest, out.as_deref())?;
        }
        Command::EdCompare(EdCompareArgs {
            n_list,
            points,
            t_end,
            out,
        }) => {
            let ns = parse_n_list(n_list).map_err(CliError::Usage)?;
            let rows = ed_compare(&ns, *points, *t_end, &pool)?;
            write_table(&compare_table(&rows), out.as_deref(), &mut manifest)?;
            finish(&manifest, out.as_deref())?;
            if let Some(bad) = rows.iter().find(|r| !r.passes()) {
                eprintln!(
                    "engine mismatch at N = {}: deviation {:e}, negativity {:e}",
                    bad.n,
                    bad.max_dev(),
                    bad.max_negativity
                );
                return Ok(Exit::Validation);
            }
        }
        Command::Purify(PurifyArgs {
            fef,
            scan,
            n,
            threshold,
            out,
        }) => {
            let source = match (fef, scan, n) {
                (Some(f), _, _) => *f,
                (None, Some(path), Some(n)) => fef_from_scan(path, *n)?,
                _ => return Err(CliError::Usage("give --fef or --scan with --n".into())),
            };
            let report = purify_fef(source, *threshold)?;
            manifest
                .notes
                .push("expected pairs: product over rounds of 2 / success probability".into());
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(p) => {
                    std::fs::write(p, &json)?;
                    manifest.outputs.push(p.clone());
                    finish(&manifest, Some(p))?;
                }
                None => print!("{json}"),
            }
            if !report.purifiable {
                eprintln!(
                    "not purifiable: {}",
                    report.reason.as_deref().unwrap_or_default()
                );
                return Ok(Exit::Validation);
            }
        }
        Command::Replay(args) => {
            let recorded = RunManifest::read(&args.manifest)?;
            let command = match &args.out {
                Some(p) => with_output(recorded.command, p.clone()),
                None => recorded.command,
            };
            if matches!(command, Command::Replay(_)) {
                return Err(CliError::Usage("manifest records a replay".into()));
            }
            return execute(&command, threads);
        }
    }
    Ok(Exit::Success)
}

/// `command` with its output path replaced.
pub fn with_output(mut command: Command, path: PathBuf) -> Command {
    match &mut command {
        Command::Quench(a) => a.out = Some(path),
        Command::ScanN(a) => a.out = Some(path),
        Command::Disorder(a) => a.out = Some(path),
        Command::EdCompare(a) => a.out = Some(path),
        Command::Purify(a) => a.out = Some(path),
        Command::Replay(_) => {}
    }
    command
}
