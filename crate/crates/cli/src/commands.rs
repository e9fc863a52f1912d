//! Subcommand implementations: weight tables, zero sets, dynamics sweeps,
//! the verification report, and the combined figure-data bundle.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use leeyang::bath::{
    enumerate_sector_weights, partition_function, transfer_matrix_partition, BathSpec,
    SectorWeights,
};
use leeyang::entanglement::{
    concurrence, concurrence_at_zero_time, concurrence_from_correlators, subspace_concurrence,
    zero_time_matrix, Subspace,
};
use leeyang::oracle::{exact_thermal_rdm, ORACLE_SITE_CAP};
use leeyang::probe::{
    bare_reduced_density_matrix, correlators, evolve_amplitudes, evolve_asymmetric,
    reduced_density_matrix, ProbeParams, ProbeState,
};
use leeyang::zeros::{
    detect_zeros_from_signal, detect_zeros_on_grid, find_zeros, match_zero_times,
    ratio_product_form, zero_times, LeeYangZeroSet, ZeroCheck,
};
use leeyang::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::emit::{config_hash, csv_text, fmt_e12, write_text};

/// Everything a subcommand needs: the parsed config, the fingerprint of
/// its raw bytes, the resolved output root, and the RNG seed.
pub struct Runtime {
    pub config: ExperimentConfig,
    pub hash: String,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Runtime {
    pub fn new(config: ExperimentConfig, raw_config: &[u8], out_dir: PathBuf, seed: u64) -> Self {
        let hash = config_hash(raw_config);
        Self { config, hash, out_dir, seed }
    }
}

/// One temperature point, fully resolved: built bath, computed weights,
/// and the per-temperature output directory `T_<label>`.
struct TempPoint {
    label: String,
    beta: f64,
    spec: BathSpec,
    weights: SectorWeights,
    dir: PathBuf,
}

fn temp_points(rt: &Runtime) -> Result<Vec<TempPoint>> {
    let mut out = Vec::new();
    for t in rt.config.temperatures() {
        let beta = t.beta()?;
        let label = t.label();
        let spec = rt
            .config
            .bath
            .build(beta)
            .with_context(|| format!("building bath at temperature {label}"))?;
        let weights = enumerate_sector_weights(&spec)
            .with_context(|| format!("enumerating sector weights at temperature {label}"))?;
        let dir = rt.out_dir.join(format!("T_{label}"));
        out.push(TempPoint { label, beta, spec, weights, dir });
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct WeightsFile<'a> {
    config_hash: &'a str,
    temperature: &'a str,
    beta: f64,
    n_sites: usize,
    scale: f64,
    weights: &'a [f64],
}

/// Weights go through serde_json's shortest round-trip float form (not
/// %.12e) so `verify` can re-parse them losslessly and revalidate the
/// exact numbers this run produced.
fn emit_weights(rt: &Runtime, p: &TempPoint) -> Result<PathBuf> {
    let file = WeightsFile {
        config_hash: &rt.hash,
        temperature: &p.label,
        beta: p.beta,
        n_sites: p.weights.n_sites,
        scale: p.weights.scale,
        weights: &p.weights.weights,
    };
    let path = p.dir.join("weights.json");
    write_text(&path, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    Ok(path)
}

pub fn cmd_weights(rt: &Runtime) -> Result<()> {
    for p in temp_points(rt)? {
        let path = emit_weights(rt, &p)?;
        println!("wrote {} ({} sectors)", path.display(), p.weights.weights.len());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// zeros
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct ZerosFile<'a> {
    config_hash: &'a str,
    temperature: &'a str,
    beta: f64,
    n_sites: usize,
    angles: Vec<f64>,
    radii: Vec<f64>,
    multiplicity: Vec<usize>,
}

fn emit_zero_files(rt: &Runtime, p: &TempPoint) -> Result<LeeYangZeroSet> {
    let set = find_zeros(&p.weights, rt.config.tolerances().cluster_tol)?;
    let file = ZerosFile {
        config_hash: &rt.hash,
        temperature: &p.label,
        beta: p.beta,
        n_sites: set.n_sites,
        angles: set.zeros.iter().map(|z| z.angle).collect(),
        radii: set.zeros.iter().map(|z| z.radius).collect(),
        multiplicity: set.zeros.iter().map(|z| z.multiplicity).collect(),
    };
    write_text(&p.dir.join("zeros.json"), &(serde_json::to_string_pretty(&file)? + "\n"))?;

    let rows: Vec<String> = set
        .zeros
        .iter()
        .map(|z| {
            let pos = z.position();
            format!(
                "{}, {}, {}, {}",
                fmt_e12(z.angle),
                fmt_e12(pos.re),
                fmt_e12(pos.im),
                z.multiplicity
            )
        })
        .collect();
    write_text(
        &p.dir.join("circle.csv"),
        &csv_text(&rt.hash, "theta, re, im, multiplicity", &rows),
    )?;
    Ok(set)
}

#[derive(Serialize)]
struct DetectedFile<'a> {
    config_hash: &'a str,
    times: Vec<f64>,
    min_abs: Vec<f64>,
}

/// Reads a two-column (time, value) CSV. Comment lines starting with `#`
/// and blank lines are skipped; a single leading non-numeric header line
/// is tolerated.
fn read_signal_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading signal file {}", path.display()))?;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            bail!("{}:{}: expected two comma-separated columns", path.display(), idx + 1);
        };
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(t), Ok(v)) => out.push((t, v)),
            _ if out.is_empty() => continue, // header line
            _ => bail!("{}:{}: expected two numeric columns, got {line:?}", path.display(), idx + 1),
        }
    }
    if out.len() < 3 {
        bail!("signal file {} needs at least 3 data rows", path.display());
    }
    Ok(out)
}

pub fn cmd_zeros(rt: &Runtime, signal: Option<&Path>) -> Result<()> {
    for p in temp_points(rt)? {
        let set = emit_zero_files(rt, &p)?;
        println!(
            "wrote {} ({} distinct zeros, total multiplicity {})",
            p.dir.join("zeros.json").display(),
            set.zeros.len(),
            set.total_multiplicity()
        );
    }
    if let Some(path) = signal {
        let tol = rt.config.tolerances();
        let samples = read_signal_csv(path)?;
        let detected = detect_zeros_from_signal(&samples, tol.detect_threshold, tol.refine_tol)?;
        let file = DetectedFile {
            config_hash: &rt.hash,
            times: detected.iter().map(|d| d.time).collect(),
            min_abs: detected.iter().map(|d| d.min_abs).collect(),
        };
        let out = rt.out_dir.join("detected.json");
        write_text(&out, &(serde_json::to_string_pretty(&file)? + "\n"))?;
        println!("wrote {} ({} detected zeros)", out.display(), detected.len());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------

/// The first fifteen columns are the fixed sweep schema; the trailing two
/// are additions: the bath-free concurrence baseline and a 0/1 flag on
/// rows pinned to predicted zero times.
const TRACE_HEADER: &str = "lambda_t, r1, r2, xz, yz, zx, zy, xx_minus_yy, xy_plus_yx, zz, \
                            xx_plus_yy, xy_minus_yx, sx_sum, sy_sum, concurrence, \
                            concurrence_baseline, marked";

/// Predicted first-order zero times, expressed in lambda*t units and
/// clipped to the sweep window.
fn marked_lambda_ts(
    set: &LeeYangZeroSet,
    params: &ProbeParams,
    start: f64,
    stop: f64,
) -> Result<Vec<f64>> {
    let lambda = params.lambda_a;
    let times = zero_times(set, lambda, 1)?;
    Ok(times
        .times
        .iter()
        .map(|zt| zt.time * lambda)
        .filter(|&x| x >= start && x <= stop)
        .collect())
}

fn trace_row(
    p: &TempPoint,
    state0: &ProbeState,
    params: &ProbeParams,
    lambda_t: f64,
    marked: bool,
) -> Result<String> {
    let t = lambda_t / params.lambda_a;
    let rdm = reduced_density_matrix(state0, params, &p.weights, p.beta, t)?;
    let state_t = evolve_amplitudes(state0, params, t)?;
    let rec = correlators(&rdm, &state_t);
    let conc = concurrence(&rdm)?.concurrence;
    let baseline = concurrence(&bare_reduced_density_matrix(state0, params, t)?)?.concurrence;
    let mut row = String::with_capacity(16 * 20);
    for v in [
        lambda_t,
        rdm.r1,
        rdm.r2,
        rec.xz,
        rec.yz,
        rec.zx,
        rec.zy,
        rec.xx_minus_yy,
        rec.xy_plus_yx,
        rec.zz,
        rec.xx_plus_yy,
        rec.xy_minus_yx,
        rec.sx_sum,
        rec.sy_sum,
        conc,
        baseline,
    ] {
        if !row.is_empty() {
            row.push_str(", ");
        }
        row.push_str(&fmt_e12(v));
    }
    row.push_str(if marked { ", 1" } else { ", 0" });
    Ok(row)
}

/// Builds the sweep CSV: the configured grid plus one pinned row per
/// predicted zero time (an existing grid point within 1e-12 is marked
/// instead of duplicated), so marked rows sit exactly on each t_n.
fn trace_csv(rt: &Runtime, p: &TempPoint, marks: &[f64]) -> Result<(String, usize, usize)> {
    let params = rt.config.probe_params();
    if !params.is_symmetric() {
        bail!(
            "dynamics sweeps use the symmetric mode (lambda_a == lambda_b); asymmetric \
             couplings are available through the library API"
        );
    }
    let state0 = rt.config.initial_state()?;
    let grid = rt.config.time_grid().points()?;
    let mut pts: Vec<(f64, bool)> = grid.iter().map(|&x| (x, false)).collect();
    for &m in marks {
        match pts.iter_mut().find(|(x, _)| (*x - m).abs() <= 1e-12) {
            Some(q) => q.1 = true,
            None => pts.push((m, true)),
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let marked_count = pts.iter().filter(|q| q.1).count();

    let rows: Result<Vec<String>> = pts
        .par_iter()
        .map(|&(lambda_t, marked)| trace_row(p, &state0, &params, lambda_t, marked))
        .collect();
    Ok((csv_text(&rt.hash, TRACE_HEADER, &rows?), pts.len(), marked_count))
}

pub fn cmd_dynamics(rt: &Runtime) -> Result<()> {
    let params = rt.config.probe_params();
    let grid = rt.config.time_grid();
    for p in temp_points(rt)? {
        let marks = if p.spec.is_ferromagnetic() {
            let set = find_zeros(&p.weights, rt.config.tolerances().cluster_tol)?;
            marked_lambda_ts(&set, &params, grid.start, grid.stop)?
        } else {
            eprintln!(
                "note: bath at T = {} is not ferromagnetic; zeros leave the unit circle, \
                 so no zero times are marked",
                p.label
            );
            Vec::new()
        };
        let (text, n_rows, n_marked) = trace_csv(rt, &p, &marks)?;
        let path = p.dir.join("trace.csv");
        write_text(&path, &text)?;
        println!("wrote {} ({n_rows} rows, {n_marked} marked)", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// figures
// ---------------------------------------------------------------------

struct MarkerCounts {
    detected: usize,
    masked: usize,
    missed: usize,
    max_offset: f64,
}

/// Runs the detection loop for one temperature and writes markers.csv.
///
/// The scanned signal is the first-order coherence ratio in product form
/// over the located zero angles, times the free-probe prefactor
/// sin(J t)/4 — the analytic shape of the yz trace for the x-projected
/// pair. The product form stays accurate arbitrarily close to heavily
/// degenerate zeros, where summing the polynomial is pure cancellation.
fn emit_markers(
    rt: &Runtime,
    p: &TempPoint,
    set: &LeeYangZeroSet,
    params: &ProbeParams,
) -> Result<MarkerCounts> {
    let tol = rt.config.tolerances();
    let grid = rt.config.time_grid();
    let lambda = params.lambda_a;
    let j = params.j_xx;
    if j == 0.0 {
        bail!("figures detection needs a nonzero probe coupling: the signal carries sin(J t)");
    }
    let (t_start, t_stop) = (grid.start / lambda, grid.stop / lambda);

    // Pre-flight: the product form rejects zero sets with an angle at
    // unity; a positive-weight bath never has one.
    ratio_product_form(set, 0.0)?;
    let signal =
        move |t: f64| ratio_product_form(set, lambda * t).expect("angles pre-checked") * (j * t).sin() / 4.0;

    let detected = detect_zeros_on_grid(
        signal,
        t_start,
        t_stop,
        grid.samples * 4 + 1,
        tol.detect_threshold,
        tol.refine_tol,
    )?;
    let detected_times: Vec<f64> = detected.iter().map(|d| d.time).collect();

    let predicted = zero_times(set, lambda, 1)?;
    let in_range: Vec<_> =
        predicted.times.iter().filter(|zt| zt.time >= t_start && zt.time <= t_stop).collect();
    let predicted_times: Vec<f64> = in_range.iter().map(|zt| zt.time).collect();

    // Zeros of the sine prefactor inside the window mask any prediction
    // they collide with: the signal vanishes there regardless of the bath.
    let step = PI / j.abs();
    let mut prefactor = Vec::new();
    let mut k = (t_start / step).floor().max(0.0) as u64;
    while k as f64 * step <= t_stop {
        let tk = k as f64 * step;
        if tk >= t_start {
            prefactor.push(tk);
        }
        k += 1;
    }

    let checks = match_zero_times(&predicted_times, &detected_times, &prefactor, tol.refine_tol);

    let mut counts = MarkerCounts { detected: 0, masked: 0, missed: 0, max_offset: 0.0 };
    let rows: Vec<String> = in_range
        .iter()
        .zip(&checks)
        .map(|(zt, check)| {
            let theta = set.zeros[zt.zero_index].angle;
            let (status, detected_col) = match check {
                ZeroCheck::Detected { time } => {
                    counts.detected += 1;
                    counts.max_offset = counts.max_offset.max((time - zt.time).abs() * lambda);
                    ("detected", fmt_e12(time * lambda))
                }
                ZeroCheck::Masked => {
                    counts.masked += 1;
                    ("masked", String::new())
                }
                ZeroCheck::Missed => {
                    counts.missed += 1;
                    ("missed", String::new())
                }
            };
            format!(
                "{}, {}, {}, {}, {}",
                zt.zero_index,
                fmt_e12(theta),
                fmt_e12(zt.time * lambda),
                detected_col,
                status
            )
        })
        .collect();

    write_text(
        &p.dir.join("markers.csv"),
        &csv_text(
            &rt.hash,
            "zero_index, theta, predicted_lambda_t, detected_lambda_t, status",
            &rows,
        ),
    )?;
    Ok(counts)
}

#[derive(Serialize)]
struct SummaryRow {
    label: String,
    beta: f64,
    zero_count: usize,
    total_multiplicity: usize,
    min_angular_gap: f64,
    detected: usize,
    masked: usize,
    missed: usize,
    max_marker_offset: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config_hash: &'a str,
    temperatures: Vec<SummaryRow>,
}

pub fn cmd_figures(rt: &Runtime) -> Result<()> {
    let params = rt.config.probe_params();
    let grid = rt.config.time_grid();
    let mut summary = Vec::new();
    for p in temp_points(rt)? {
        if !p.spec.is_ferromagnetic() {
            bail!(
                "figures requires a ferromagnetic bath (T = {}): zero detection relies on \
                 the unit-circle structure",
                p.label
            );
        }
        emit_weights(rt, &p)?;
        let set = emit_zero_files(rt, &p)?;
        let marks = marked_lambda_ts(&set, &params, grid.start, grid.stop)?;
        let (text, _, _) = trace_csv(rt, &p, &marks)?;
        write_text(&p.dir.join("trace.csv"), &text)?;
        let counts = emit_markers(rt, &p, &set, &params)?;
        println!(
            "T = {}: {} distinct zeros, min gap {:.6}, markers {} detected / {} masked / {} missed",
            p.label,
            set.zeros.len(),
            set.min_angular_gap(),
            counts.detected,
            counts.masked,
            counts.missed
        );
        summary.push(SummaryRow {
            label: p.label.clone(),
            beta: p.beta,
            zero_count: set.zeros.len(),
            total_multiplicity: set.total_multiplicity(),
            min_angular_gap: set.min_angular_gap(),
            detected: counts.detected,
            masked: counts.masked,
            missed: counts.missed,
            max_marker_offset: counts.max_offset,
        });
    }
    let file = SummaryFile { config_hash: &rt.hash, temperatures: summary };
    let path = rt.out_dir.join("summary.json");
    write_text(&path, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------

struct Report {
    lines: Vec<String>,
    passed: usize,
    failed: usize,
    skipped: usize,
}

impl Report {
    fn new(hash: &str) -> Self {
        Self { lines: vec![format!("# config_hash: {hash}")], passed: 0, failed: 0, skipped: 0 }
    }
    fn pass(&mut self, name: &str, detail: String) {
        self.passed += 1;
        self.lines.push(format!("[PASS] {name}: {detail}"));
    }
    fn fail(&mut self, name: &str, detail: String) {
        self.failed += 1;
        self.lines.push(format!("[FAIL] {name}: {detail}"));
    }
    fn skip(&mut self, name: &str, detail: String) {
        self.skipped += 1;
        self.lines.push(format!("[SKIP] {name}: {detail}"));
    }
    fn finish(mut self) -> (String, bool) {
        let ok = self.failed == 0;
        self.lines.push(format!(
            "overall: {} ({} passed, {} failed, {} skipped)",
            if ok { "PASS" } else { "FAIL" },
            self.passed,
            self.failed,
            self.skipped
        ));
        (self.lines.join("\n") + "\n", ok)
    }
}

fn random_state(rng: &mut ChaCha20Rng) -> ProbeState {
    loop {
        let mut a = [Complex64::new(0.0, 0.0); 4];
        for slot in &mut a {
            *slot = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        if a.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-2 {
            return ProbeState::from_unnormalized(a).expect("nonzero by construction");
        }
    }
}

fn random_confined(rng: &mut ChaCha20Rng, branch: Subspace) -> ProbeState {
    let (i, j) = match branch {
        Subspace::Mid => (1, 2),
        Subspace::Outer => (0, 3),
    };
    loop {
        let mut a = [Complex64::new(0.0, 0.0); 4];
        for slot in [i, j] {
            a[slot] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        if a.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-2 {
            return ProbeState::from_unnormalized(a).expect("nonzero by construction");
        }
    }
}

fn random_symmetric(rng: &mut ChaCha20Rng) -> ProbeParams {
    ProbeParams::symmetric(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.1..2.0),
    )
}

fn random_asymmetric(rng: &mut ChaCha20Rng) -> ProbeParams {
    ProbeParams {
        j_xx: 0.0,
        j_zz: rng.random_range(-2.0..2.0),
        h0: rng.random_range(-1.0..1.0),
        lambda_a: rng.random_range(0.1..2.0),
        lambda_b: rng.random_range(0.1..2.0),
    }
}

#[derive(Deserialize)]
struct StoredWeights {
    config_hash: String,
    #[allow(dead_code)]
    temperature: String,
    #[allow(dead_code)]
    beta: f64,
    n_sites: usize,
    scale: f64,
    weights: Vec<f64>,
}

const AGREEMENT_TOL: f64 = 1e-10;

pub fn cmd_verify(rt: &Runtime) -> Result<bool> {
    let points = temp_points(rt)?;
    let tol = rt.config.tolerances();
    let vs = rt.config.verify_section();
    let mut rng = ChaCha20Rng::seed_from_u64(rt.seed);
    let mut report = Report::new(&rt.hash);

    // --- weight-table invariants: positivity and spin-flip symmetry ----
    {
        let mut max_asym = 0.0f64;
        let mut problem: Option<String> = None;
        for p in &points {
            let w = &p.weights.weights;
            let peak = w.iter().cloned().fold(0.0, f64::max);
            if w[0] <= 0.0 {
                problem = Some(format!("T = {}: empty-sector weight is not positive", p.label));
            }
            for (n, &value) in w.iter().enumerate() {
                if !(value >= 0.0) {
                    problem = Some(format!("T = {}: negative weight at sector {n}", p.label));
                }
                max_asym = max_asym.max((value - w[w.len() - 1 - n]).abs() / peak);
            }
        }
        match problem {
            Some(msg) => report.fail("weights-invariants", msg),
            None if max_asym <= 1e-12 => report.pass(
                "weights-invariants",
                format!(
                    "max mirror asymmetry {max_asym:.3e} over {} temperature points (tol 1e-12)",
                    points.len()
                ),
            ),
            None => report.fail(
                "weights-invariants",
                format!("spin-flip symmetry violated: max mirror asymmetry {max_asym:.3e}"),
            ),
        }
    }

    // --- circle theorem: every zero on the unit circle -----------------
    if points.iter().all(|p| p.spec.is_ferromagnetic()) {
        let mut max_dev = 0.0f64;
        let mut problem: Option<String> = None;
        for p in &points {
            let set = find_zeros(&p.weights, tol.cluster_tol)?;
            if set.total_multiplicity() != p.spec.n_sites {
                problem = Some(format!(
                    "T = {}: found total multiplicity {} for {} sites",
                    p.label,
                    set.total_multiplicity(),
                    p.spec.n_sites
                ));
            }
            for z in &set.zeros {
                max_dev = max_dev.max((z.radius - 1.0).abs());
            }
        }
        match problem {
            Some(msg) => report.fail("circle-theorem", msg),
            None if max_dev <= tol.circle_tol => report.pass(
                "circle-theorem",
                format!("max | |z| - 1 | = {max_dev:.3e} (tol {:.1e})", tol.circle_tol),
            ),
            None => report.fail(
                "circle-theorem",
                format!("zero off the unit circle: max | |z| - 1 | = {max_dev:.3e}"),
            ),
        }
    } else {
        report.skip("circle-theorem", "not applicable (non-ferromagnetic)".into());
    }

    // --- transfer matrix vs direct enumeration at complex fields -------
    if rt.config.is_ring() {
        let coupling = rt.config.bath.coupling.unwrap_or(1.0);
        let mut max_rel = 0.0f64;
        let mut count = 0usize;
        for p in &points {
            for _ in 0..vs.fields {
                let h = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let z_enum = partition_function(&p.weights, p.beta, h);
                let z_transfer = transfer_matrix_partition(p.spec.n_sites, coupling, p.beta, h)?;
                max_rel = max_rel.max((z_enum - z_transfer).norm() / z_transfer.norm());
                count += 1;
            }
        }
        if max_rel <= AGREEMENT_TOL {
            report.pass(
                "transfer-matrix-agreement",
                format!("max relative deviation {max_rel:.3e} over {count} complex fields (tol 1e-10)"),
            );
        } else {
            report.fail(
                "transfer-matrix-agreement",
                format!("routes disagree: max relative deviation {max_rel:.3e}"),
            );
        }
    } else {
        report.skip(
            "transfer-matrix-agreement",
            "not applicable (transfer matrix is defined for the ring topology)".into(),
        );
    }

    // --- closed-form density matrix vs the exhaustive oracle -----------
    if points.iter().all(|p| p.spec.n_sites <= ORACLE_SITE_CAP) {
        let mut max_dev = 0.0f64;
        let mut count = 0usize;
        for p in &points {
            for k in 0..vs.draws {
                let state = random_state(&mut rng);
                let t = rng.random_range(0.0..TAU);
                let (rdm, params) = if k % 2 == 0 {
                    let params = random_symmetric(&mut rng);
                    (reduced_density_matrix(&state, &params, &p.weights, p.beta, t)?, params)
                } else {
                    let params = random_asymmetric(&mut rng);
                    (evolve_asymmetric(&state, &params, &p.weights, p.beta, t)?, params)
                };
                let oracle = exact_thermal_rdm(&p.spec, &state, &params, t)?;
                for (a, b) in rdm.matrix.iter().zip(oracle.rdm.iter()) {
                    max_dev = max_dev.max((a - b).norm());
                }
                count += 1;
            }
        }
        if max_dev <= AGREEMENT_TOL {
            report.pass(
                "oracle-equivalence",
                format!("max entry deviation {max_dev:.3e} over {count} draws (tol 1e-10)"),
            );
        } else {
            report.fail(
                "oracle-equivalence",
                format!("closed form disagrees with the oracle: max entry deviation {max_dev:.3e}"),
            );
        }
    } else {
        report.skip(
            "oracle-equivalence",
            format!("not applicable (bath exceeds the {ORACLE_SITE_CAP}-site oracle cap)"),
        );
    }

    // --- zero-time concurrence closed form vs the general path ---------
    {
        let mut max_dev = 0.0f64;
        let n_draws = 5 * vs.draws;
        for _ in 0..n_draws {
            let state = random_state(&mut rng);
            let r2 = rng.random_range(-1.0..1.0);
            let t = rng.random_range(0.0..TAU);
            let closed = concurrence_at_zero_time(&state, r2);
            let general = concurrence(&zero_time_matrix(&state, r2, t))?;
            max_dev = max_dev.max((closed.concurrence - general.concurrence).abs());
        }
        if max_dev <= AGREEMENT_TOL {
            report.pass(
                "concurrence-closed-forms",
                format!("max deviation {max_dev:.3e} over {n_draws} states (tol 1e-10)"),
            );
        } else {
            report.fail(
                "concurrence-closed-forms",
                format!("closed form disagrees with the general path: max deviation {max_dev:.3e}"),
            );
        }
    }

    // --- correlator bridge vs subspace concurrence ---------------------
    {
        let params = rt.config.probe_params();
        if params.is_symmetric() {
            let mut max_dev = 0.0f64;
            let n_draws = 5 * vs.draws;
            for i in 0..n_draws {
                let p = &points[i % points.len()];
                let branch = if i % 2 == 0 { Subspace::Mid } else { Subspace::Outer };
                let state = random_confined(&mut rng, branch);
                let t = rng.random_range(0.0..TAU) / params.lambda_a;
                let rdm = reduced_density_matrix(&state, &params, &p.weights, p.beta, t)?;
                let state_t = evolve_amplitudes(&state, &params, t)?;
                let rec = correlators(&rdm, &state_t);
                let bridge = concurrence_from_correlators(rec.xx(), rec.yx());
                let ratio = match branch {
                    Subspace::Mid => 1.0,
                    Subspace::Outer => rdm.r2,
                };
                let direct = subspace_concurrence(&state, &params, t, ratio, branch)?;
                max_dev = max_dev.max((bridge - direct).abs());
            }
            if max_dev <= AGREEMENT_TOL {
                report.pass(
                    "correlator-bridge",
                    format!("max deviation {max_dev:.3e} over {n_draws} confined states (tol 1e-10)"),
                );
            } else {
                report.fail(
                    "correlator-bridge",
                    format!("correlator route disagrees: max deviation {max_dev:.3e}"),
                );
            }
        } else {
            report.skip(
                "correlator-bridge",
                "needs the symmetric mode (lambda_a == lambda_b)".into(),
            );
        }
    }

    // --- stored weight files: revalidate and compare to recomputation --
    {
        let mut fails: Vec<String> = Vec::new();
        let mut max_rel = 0.0f64;
        let mut n_files = 0usize;
        for p in &points {
            let path = p.dir.join("weights.json");
            if !path.exists() {
                continue;
            }
            n_files += 1;
            let name = path.display().to_string();
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    fails.push(format!("{name}: unreadable ({e})"));
                    continue;
                }
            };
            let stored: StoredWeights = match serde_json::from_str(&text) {
                Ok(s) => s,
                Err(e) => {
                    fails.push(format!("{name}: malformed JSON ({e})"));
                    continue;
                }
            };
            if stored.config_hash != rt.hash {
                fails.push(format!("{name}: produced by a different config (hash mismatch)"));
                continue;
            }
            match SectorWeights::new(stored.n_sites, stored.weights.clone(), stored.scale) {
                Err(e) => fails.push(format!("{name}: {e}")),
                Ok(w) => {
                    if w.n_sites != p.weights.n_sites {
                        fails.push(format!("{name}: site count differs from the config"));
                        continue;
                    }
                    let peak = p.weights.weights.iter().cloned().fold(0.0, f64::max);
                    for (a, b) in w.weights.iter().zip(&p.weights.weights) {
                        max_rel = max_rel.max((a - b).abs() / peak);
                    }
                    if (w.scale - p.weights.scale).abs() > 1e-12 * p.weights.scale.abs().max(1.0) {
                        fails.push(format!("{name}: scale differs from recomputation"));
                    }
                }
            }
        }
        if n_files == 0 {
            report.skip(
                "stored-weights",
                format!("no weights.json files under {}", rt.out_dir.display()),
            );
        } else if !fails.is_empty() {
            report.fail("stored-weights", fails.join("; "));
        } else if max_rel <= 1e-12 {
            report.pass(
                "stored-weights",
                format!("{n_files} files match recomputation (max rel deviation {max_rel:.3e})"),
            );
        } else {
            report.fail(
                "stored-weights",
                format!("stored weights deviate from recomputation by {max_rel:.3e}"),
            );
        }
    }

    let (text, ok) = report.finish();
    print!("{text}");
    write_text(&rt.out_dir.join("verify_report.txt"), &text)?;
    Ok(ok)
}
