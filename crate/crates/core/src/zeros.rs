//! Unit-circle zeros of the fugacity polynomial and their appearance as
//! zeros of time-domain probe signals.
//!
//! Roots come from the balanced companion matrix of the monic rescaled
//! polynomial. Repeated roots of multiplicity m smear into clouds of
//! diameter ~eps^(1/m) there, so multiplicity detection walks candidate
//! clusters from large m down, refines each candidate with Newton on the
//! (m-1)-th derivative (a simple root of that derivative), and only
//! commits the cluster when every lower derivative vanishes to a scaled
//! residual tolerance. Radii are reported as computed, never snapped to
//! the circle: the circle theorem is asserted by tests, not assumed here.

use ndarray::Array2;
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::SectorWeights;
use crate::error::{Error, Result};

/// Default angular tolerance below which two simple roots merge into one
/// reported zero.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

/// Angles closer than this to 0 (mod 2pi) make the product-form
/// denominator 1 - cos(theta) vanish.
pub const ANGLE_FLOOR: f64 = 1e-12;

/// Backward-error scale for multiplicity-m root clouds: a cluster window
/// for m roots opens up to ~3 * CLUSTER_EPS^(1/m).
const CLUSTER_EPS: f64 = 1e-11;

/// Relative residual below which a derivative is considered to vanish
/// when validating a multiplicity candidate.
const MULTIPLICITY_RESIDUAL_TOL: f64 = 1e-8;

/// One zero of the fugacity polynomial.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LeeYangZero {
    /// Angle on the unit circle, in (0, 2pi].
    pub angle: f64,
    /// Measured |z|; 1 for ferromagnetic baths, recorded as computed.
    pub radius: f64,
    pub multiplicity: usize,
}

impl LeeYangZero {
    pub fn position(&self) -> Complex64 {
        Complex64::from_polar(self.radius, self.angle)
    }
}

/// All zeros of one bath's fugacity polynomial, sorted by angle; the
/// multiplicities sum to the polynomial degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeeYangZeroSet {
    pub n_sites: usize,
    pub zeros: Vec<LeeYangZero>,
}

impl LeeYangZeroSet {
    pub fn total_multiplicity(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    /// Smallest angular gap between distinct reported zeros (circular),
    /// or 0 when fewer than two remain distinct.
    pub fn min_angular_gap(&self) -> f64 {
        if self.zeros.len() < 2 {
            return 0.0;
        }
        let mut gap = f64::INFINITY;
        for pair in self.zeros.windows(2) {
            gap = gap.min(pair[1].angle - pair[0].angle);
        }
        let wrap = self.zeros[0].angle + std::f64::consts::TAU - self.zeros.last().unwrap().angle;
        gap.min(wrap)
    }
}

/// Zero times t_n = theta_n / (lambda * delta_m) of one coherence order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroTimes {
    pub lambda: f64,
    pub delta_m: u32,
    pub times: Vec<ZeroTime>,
}

/// One zero time, pointing back at the zero it came from.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZeroTime {
    pub time: f64,
    pub zero_index: usize,
}

/// Locates all roots of the scaled fugacity polynomial.
pub fn find_zeros(weights: &SectorWeights, cluster_tol: f64) -> Result<LeeYangZeroSet> {
    if !(cluster_tol.is_finite() && cluster_tol >= 0.0) {
        return Err(Error::DomainError(format!("cluster_tol must be >= 0, got {cluster_tol}")));
    }
    let degree = match weights.weights.iter().rposition(|&w| w != 0.0) {
        Some(0) | None => {
            return Err(Error::DegenerateInput(
                "fugacity polynomial has no positive-degree term".into(),
            ))
        }
        Some(d) => d,
    };
    let max_w = weights.weights.iter().cloned().fold(0.0f64, f64::max);
    let coeffs: Vec<f64> = weights.weights[..=degree].iter().map(|&w| w / max_w).collect();

    let roots = companion_roots(&coeffs)?;
    let zeros = cluster_roots(&coeffs, roots, cluster_tol);
    Ok(LeeYangZeroSet { n_sites: weights.n_sites, zeros })
}

/// Eigenvalues of the companion matrix of the monic rescaling of `coeffs`
/// (the backend balances before reducing, which is what keeps the wildly
/// ranged low-temperature coefficients benign).
fn companion_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let mut companion = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        companion[(i, d - 1)] = -coeffs[i] / lead;
        if i + 1 < d {
            companion[(i + 1, i)] = 1.0;
        }
    }
    Ok(companion.eigvals()?.to_vec())
}

/// Angle in (0, 2pi].
fn circle_angle(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// k-th derivative coefficients of the polynomial.
fn derivative_coeffs(coeffs: &[f64], k: usize) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    for _ in 0..k {
        c = c.iter().enumerate().skip(1).map(|(j, &cj)| cj * j as f64).collect();
        if c.is_empty() {
            c.push(0.0);
        }
    }
    c
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Window diameter inside which m sorted roots may be one smeared root.
fn cluster_window(m: usize, cluster_tol: f64) -> f64 {
    cluster_tol.max(3.0 * CLUSTER_EPS.powf(1.0 / m as f64))
}

/// Newton iteration on the (m-1)-th derivative from the cloud centroid;
/// a true m-fold root of the polynomial is a well-conditioned simple root
/// there. Returns None when the iteration leaves the cloud or stalls.
fn refine_multiple_root(coeffs: &[f64], centroid: Complex64, m: usize, window: f64) -> Option<Complex64> {
    let f = derivative_coeffs(coeffs, m - 1);
    let fp = derivative_coeffs(coeffs, m);
    let mut z = centroid;
    for _ in 0..60 {
        let denom = eval_poly(&fp, z);
        if denom.norm() == 0.0 {
            return None;
        }
        let step = eval_poly(&f, z) / denom;
        z -= step;
        if (z - centroid).norm() > 2.0 * window {
            return None;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    None
}

/// All derivatives below order m vanish at z to a tolerance scaled by the
/// derivative's coefficient mass on the unit disc.
fn multiplicity_validated(coeffs: &[f64], z: Complex64, m: usize) -> bool {
    let r = z.norm().max(1.0);
    for k in 0..m {
        let dk = derivative_coeffs(coeffs, k);
        let bound: f64 = dk
            .iter()
            .enumerate()
            .map(|(j, &c)| c.abs() * r.powi(j as i32))
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        if eval_poly(&dk, z).norm() > MULTIPLICITY_RESIDUAL_TOL * bound {
            return false;
        }
    }
    true
}

/// Groups companion eigenvalues into reported zeros with multiplicities.
fn cluster_roots(coeffs: &[f64], roots: Vec<Complex64>, cluster_tol: f64) -> Vec<LeeYangZero> {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| circle_angle(roots[a]).total_cmp(&circle_angle(roots[b])));

    let mut assigned = vec![false; roots.len()];
    let mut out: Vec<LeeYangZero> = Vec::new();

    for m in (2..=roots.len()).rev() {
        let window = cluster_window(m, cluster_tol);
        loop {
            let free: Vec<usize> = order.iter().copied().filter(|&i| !assigned[i]).collect();
            if free.len() < m {
                break;
            }
            let mut committed = false;
            for w in free.windows(m) {
                let members: Vec<Complex64> = w.iter().map(|&i| roots[i]).collect();
                let diameter = members
                    .iter()
                    .flat_map(|a| members.iter().map(move |b| (a - b).norm()))
                    .fold(0.0f64, f64::max);
                if diameter > window {
                    continue;
                }
                let centroid = members.iter().sum::<Complex64>() / m as f64;
                let Some(z) = refine_multiple_root(coeffs, centroid, m, window) else {
                    continue;
                };
                if members.iter().any(|r| (r - z).norm() > window) {
                    continue;
                }
                if !multiplicity_validated(coeffs, z, m) {
                    continue;
                }
                for &i in w {
                    assigned[i] = true;
                }
                out.push(LeeYangZero {
                    angle: circle_angle(z),
                    radius: z.norm(),
                    multiplicity: m,
                });
                committed = true;
                break;
            }
            if !committed {
                break;
            }
        }
    }

    for &i in &order {
        if !assigned[i] {
            out.push(LeeYangZero {
                angle: circle_angle(roots[i]),
                radius: roots[i].norm(),
                multiplicity: 1,
            });
        }
    }
    out.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    out
}

/// Times at which the coherence of order `delta_m` crosses each zero.
pub fn zero_times(zeros: &LeeYangZeroSet, lambda: f64, delta_m: u32) -> Result<ZeroTimes> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::DomainError(format!("lambda must be positive, got {lambda}")));
    }
    if !(delta_m == 1 || delta_m == 2) {
        return Err(Error::DomainError(format!(
            "delta_m must be 1 or 2, got {delta_m}"
        )));
    }
    let mut times: Vec<ZeroTime> = zeros
        .zeros
        .iter()
        .enumerate()
        .map(|(zero_index, z)| ZeroTime {
            time: z.angle / (lambda * delta_m as f64),
            zero_index,
        })
        .collect();
    times.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(ZeroTimes { lambda, delta_m, times })
}

/// Coherence ratio in product form over the zero angles,
///
///   prod_n [cos(x/2) - cos(theta_n - x/2)] / prod_n [1 - cos(theta_n)],
///
/// with x = lambda * delta_m * t. Requires every angle to stay clear of
/// z = 1, where the denominator factor vanishes.
pub fn ratio_product_form(zeros: &LeeYangZeroSet, x: f64) -> Result<f64> {
    let half = 0.5 * x;
    let mut num = 1.0f64;
    let mut den = 1.0f64;
    for z in &zeros.zeros {
        let distance_to_unity = z.angle.min(std::f64::consts::TAU - z.angle);
        if distance_to_unity < ANGLE_FLOOR {
            return Err(Error::ZeroAtUnity(distance_to_unity));
        }
        let nf = half.cos() - (z.angle - half).cos();
        let df = 1.0 - z.angle.cos();
        for _ in 0..z.multiplicity {
            num *= nf;
            den *= df;
        }
    }
    Ok(num / den)
}

/// One zero located in a time-domain signal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectedZero {
    pub time: f64,
    /// |signal| at the refined minimum.
    pub min_abs: f64,
}

/// Classification of a predicted zero time against a detection run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZeroCheck {
    /// A detected signal zero lies within the window.
    Detected { time: f64 },
    /// A zero of the multiplying prefactor collides with the prediction,
    /// so the signal vanishes there regardless of the bath.
    Masked,
    Missed,
}

/// Scans |signal| on a uniform grid, keeps interior local minima below
/// `threshold`, and refines each by golden-section search to `refine_tol`.
pub fn detect_zeros_on_grid<F: Fn(f64) -> f64>(
    signal: F,
    t_start: f64,
    t_end: f64,
    samples: usize,
    threshold: f64,
    refine_tol: f64,
) -> Result<Vec<DetectedZero>> {
    if samples < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 samples, got {samples}"
        )));
    }
    if !(t_end > t_start) {
        return Err(Error::DomainError("empty time range".into()));
    }
    check_detection_tols(threshold, refine_tol)?;
    let dt = (t_end - t_start) / (samples - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let t = t_start + dt * i as f64;
            (t, signal(t))
        })
        .collect();
    refine_minima(&grid, &|t| signal(t).abs(), threshold, refine_tol)
}

/// Sample-only variant: works on pre-recorded (t, value) pairs, refining
/// against the piecewise-linear interpolant, so the answer is limited by
/// the sample spacing rather than by `refine_tol`.
pub fn detect_zeros_from_signal(
    samples: &[(f64, f64)],
    threshold: f64,
    refine_tol: f64,
) -> Result<Vec<DetectedZero>> {
    if samples.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    check_detection_tols(threshold, refine_tol)?;
    for pair in samples.windows(2) {
        if !(pair[1].0 > pair[0].0) {
            return Err(Error::DegenerateInput(
                "samples must be sorted by strictly increasing time".into(),
            ));
        }
    }
    if samples.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::DegenerateInput("samples contain non-finite entries".into()));
    }
    let interp = |t: f64| -> f64 {
        let k = match samples.binary_search_by(|&(ts, _)| ts.total_cmp(&t)) {
            Ok(k) => return samples[k].1.abs(),
            Err(0) => 1,
            Err(k) if k == samples.len() => samples.len() - 1,
            Err(k) => k,
        };
        let (t0, v0) = samples[k - 1];
        let (t1, v1) = samples[k];
        let w = (t - t0) / (t1 - t0);
        (v0 + w * (v1 - v0)).abs()
    };
    refine_minima(samples, &interp, threshold, refine_tol)
}

fn check_detection_tols(threshold: f64, refine_tol: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::DomainError(format!("threshold must be positive, got {threshold}")));
    }
    if !(refine_tol.is_finite() && refine_tol > 0.0) {
        return Err(Error::DomainError(format!(
            "refine_tol must be positive, got {refine_tol}"
        )));
    }
    Ok(())
}

/// Interior local minima of |value| below the threshold, each refined
/// within its bracketing pair of neighbours. An empty result is a normal
/// return.
fn refine_minima(
    grid: &[(f64, f64)],
    abs_signal: &dyn Fn(f64) -> f64,
    threshold: f64,
    refine_tol: f64,
) -> Result<Vec<DetectedZero>> {
    let mut out: Vec<DetectedZero> = Vec::new();
    for i in 1..grid.len() - 1 {
        let (prev, here, next) = (grid[i - 1].1.abs(), grid[i].1.abs(), grid[i + 1].1.abs());
        if here >= threshold {
            continue;
        }
        if (here < prev && here <= next) || (here <= prev && here < next) {
            let t = golden_min(abs_signal, grid[i - 1].0, grid[i + 1].0, refine_tol);
            let candidate = DetectedZero { time: t, min_abs: abs_signal(t) };
            match out.last() {
                Some(last) if (candidate.time - last.time).abs() <= refine_tol => {
                    if candidate.min_abs < last.min_abs {
                        *out.last_mut().unwrap() = candidate;
                    }
                }
                _ => out.push(candidate),
            }
        }
    }
    Ok(out)
}

/// Golden-section minimization; the bracket shrinks below `tol` so the
/// returned midpoint is within tol/2 of the interior minimizer.
fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut rounds = 0;
    while b - a > tol && rounds < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        rounds += 1;
    }
    0.5 * (a + b)
}

/// Matches predicted zero times against detections. A prefactor zero
/// inside the window masks the prediction: the signal vanishes there
/// whether or not the bath ratio does.
pub fn match_zero_times(
    predicted: &[f64],
    detected: &[f64],
    prefactor_zeros: &[f64],
    window: f64,
) -> Vec<ZeroCheck> {
    predicted
        .iter()
        .map(|&t| {
            if prefactor_zeros.iter().any(|&p| (p - t).abs() <= window) {
                return ZeroCheck::Masked;
            }
            detected
                .iter()
                .map(|&d| (d, (d - t).abs()))
                .filter(|&(_, dist)| dist <= window)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(d, _)| ZeroCheck::Detected { time: d })
                .unwrap_or(ZeroCheck::Missed)
        })
        .collect()
}
