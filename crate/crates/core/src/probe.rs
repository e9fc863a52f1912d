//! Two probe spins with an XXZ mutual coupling, attached longitudinally
//! to a thermal Ising bath.
//!
//! Every part of the Hamiltonian commutes with every other, so the probe
//! amplitudes evolve in closed form and the bath enters the reduced
//! density matrix only through ratios of the fugacity polynomial
//! evaluated on the unit circle. Coherences between sectors whose total
//! magnetization differs by dm carry the ratio at x = lambda*dm*t, which
//! is why the probe pair's coherences, correlation functions, and
//! entanglement all vanish exactly when x hits a zero angle.
//!
//! Basis order everywhere: (|++>, |+->, |-+>, |-->), spin operators
//! s = sigma/2.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, SectorWeights};
use crate::error::{Error, Result};

/// Norm defect accepted by [`ProbeState::new`].
pub const NORM_TOL: f64 = 1e-12;

/// Largest imaginary residue tolerated when a zero-field ratio is forced
/// real.
const RATIO_IMAG_TOL: f64 = 1e-10;

/// Twice the A-spin magnetization per basis state.
const MAG_A: [i32; 4] = [1, 1, -1, -1];
/// Twice the B-spin magnetization per basis state.
const MAG_B: [i32; 4] = [1, -1, 1, -1];

/// Probe-pair couplings: XX flip-flop strength `j_xx`, Ising part `j_zz`,
/// local field `h0`, and the two longitudinal bath couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub j_xx: f64,
    pub j_zz: f64,
    pub h0: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
}

impl ProbeParams {
    /// Both probes coupled to the bath with the same strength.
    pub fn symmetric(j_xx: f64, j_zz: f64, h0: f64, lambda: f64) -> Self {
        Self { j_xx, j_zz, h0, lambda_a: lambda, lambda_b: lambda }
    }

    pub fn is_symmetric(&self) -> bool {
        self.lambda_a == self.lambda_b
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("j_xx", self.j_xx),
            ("j_zz", self.j_zz),
            ("h0", self.h0),
            ("lambda_a", self.lambda_a),
            ("lambda_b", self.lambda_b),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("probe parameter {name} is not finite")));
            }
        }
        Ok(())
    }
}

/// Pure state of the probe pair, four amplitudes in the fixed basis
/// order, normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeState {
    pub amplitudes: [Complex64; 4],
}

impl ProbeState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("amplitudes must be finite".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state norm-squared {norm_sq} deviates from 1 beyond {NORM_TOL:.0e}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary finite amplitudes.
    pub fn from_unnormalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("amplitudes must be finite".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self { amplitudes: amplitudes.map(|a| a / norm) })
    }

    /// Both probes polarized along +x, with B's sign flipped:
    /// (1, -1, 1, -1)/2. This is the preparation whose yz correlator
    /// isolates the bath ratio times sin(Jt).
    pub fn x_projected() -> Self {
        let h = 0.5;
        Self {
            amplitudes: [
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Probe-pair state with the bath traced out.
///
/// Metadata `r1` and `r2` are the first- and second-order coherence
/// ratios actually used in assembly: for the symmetric coupling these
/// are the ratios at x = lambda*t and 2*lambda*t; for the asymmetric
/// path they are the mid-subspace ((lambda_a - lambda_b)t) and outer
/// ((lambda_a + lambda_b)t) ratios.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub matrix: Array2<Complex64>,
    pub t: f64,
    pub r1: f64,
    pub r2: f64,
}

impl ReducedDensityMatrix {
    /// Checks Hermiticity and unit trace to 1e-12 and positive
    /// semidefiniteness down to -1e-10.
    pub fn validate(&self) -> Result<()> {
        use ndarray_linalg::{EigValsh, UPLO};
        let m = &self.matrix;
        if m.shape() != [4, 4] {
            return Err(Error::InvalidState("density matrix must be 4x4".into()));
        }
        let mut herm = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("Hermiticity defect {herm:.2e}")));
        }
        let trace: Complex64 = (0..4).map(|i| m[(i, i)]).sum();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidState(format!("trace defect {:.2e}", (trace - 1.0).norm())));
        }
        let eigs = m.eigvalsh(UPLO::Lower)?;
        if let Some(&min) = eigs.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < -1e-10 {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
            }
        }
        Ok(())
    }
}

/// All probe-pair correlators at one time. The transverse families carry
/// the bath ratios; `zz`, `xx_plus_yy`, and `xy_minus_yx` are bath-free.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub t: f64,
    pub xz: f64,
    pub yz: f64,
    pub zx: f64,
    pub zy: f64,
    pub xx_minus_yy: f64,
    pub xy_plus_yx: f64,
    pub zz: f64,
    pub xx_plus_yy: f64,
    pub xy_minus_yx: f64,
    pub sx_sum: f64,
    pub sy_sum: f64,
}

impl CorrelationRecord {
    /// <s_A^x s_B^x>, recombined from the stored sum and difference.
    pub fn xx(&self) -> f64 {
        0.5 * (self.xx_plus_yy + self.xx_minus_yy)
    }

    /// <s_A^y s_B^x>, recombined from the stored sum and difference.
    pub fn yx(&self) -> f64 {
        0.5 * (self.xy_plus_yx - self.xy_minus_yx)
    }
}

/// Closed-form amplitude map under the probe-pair Hamiltonian alone:
/// outer amplitudes pick up phases, the middle block rotates by the
/// flip-flop angle j_xx*t/2.
pub(crate) fn amplitude_map(state: &ProbeState, j_xx: f64, j_zz: f64, h0: f64, t: f64) -> ProbeState {
    let [a0, a1, a2, a3] = state.amplitudes;
    let outer_phase = Complex64::from_polar(1.0, -j_zz * t / 4.0);
    let inner_phase = Complex64::from_polar(1.0, j_zz * t / 4.0);
    let field = Complex64::from_polar(1.0, -h0 * t);
    let (s, c) = (j_xx * t / 2.0).sin_cos();
    let rot = Complex64::new(0.0, -s);
    ProbeState {
        amplitudes: [
            a0 * outer_phase * field,
            inner_phase * (a1 * c + a2 * rot),
            inner_phase * (a2 * c + a1 * rot),
            a3 * outer_phase * field.conj(),
        ],
    }
}

/// Evolves the probe amplitudes for time `t` under symmetric-mode
/// parameters; the bath never enters the amplitudes themselves.
pub fn evolve_amplitudes(state0: &ProbeState, params: &ProbeParams, t: f64) -> Result<ProbeState> {
    params.validate()?;
    if !params.is_symmetric() {
        return Err(Error::ModeMismatch(format!(
            "amplitude closed form requires lambda_a = lambda_b, got {} and {}",
            params.lambda_a, params.lambda_b
        )));
    }
    Ok(amplitude_map(state0, params.j_xx, params.j_zz, params.h0, t))
}

/// Scale-free coherence ratio exp(-i n x / 2) * Q(e^{ix}) / Q(1) on an
/// arbitrary base point z0 (1 at zero field, e^{-beta h} otherwise).
fn ratio_at(weights: &SectorWeights, z0: f64, x: f64) -> Complex64 {
    let num = weights.eval(Complex64::from_polar(z0, x));
    let den = weights.eval(Complex64::new(z0, 0.0));
    Complex64::from_polar(1.0, -(weights.n_sites as f64) * x / 2.0) * num / den
}

/// Zero-field coherence ratio at phase x = lambda * dm * t. Real by the
/// spin-flip symmetry of the weights; the imaginary residue is checked
/// rather than assumed, and |ratio| <= 1 always.
pub fn coherence_ratio(weights: &SectorWeights, x: f64) -> Result<f64> {
    let r = ratio_at(weights, 1.0, x);
    if r.im.abs() > RATIO_IMAG_TOL {
        return Err(Error::InvalidState(format!(
            "zero-field coherence ratio has imaginary residue {:.2e} at x = {x}",
            r.im
        )));
    }
    Ok(r.re)
}

/// Magnetization jump between basis states i and j, in integer units.
fn delta_m(i: usize, j: usize) -> i32 {
    (MAG_A[i] + MAG_B[i] - MAG_A[j] - MAG_B[j]) / 2
}

fn projector_entry(a: &[Complex64; 4], i: usize, j: usize) -> Complex64 {
    a[i] * a[j].conj()
}

/// Reduced density matrix of the probe pair at time `t` over a zero-field
/// bath: entry (i, j) is a_i(t) conj(a_j(t)) times the real ratio at
/// x = lambda * dm * t, with dm the magnetization jump.
pub fn reduced_density_matrix(
    state0: &ProbeState,
    params: &ProbeParams,
    weights: &SectorWeights,
    beta: f64,
    t: f64,
) -> Result<ReducedDensityMatrix> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidSpec(format!("beta must be finite and >= 0, got {beta}")));
    }
    let state_t = evolve_amplitudes(state0, params, t)?;
    let lambda = params.lambda_a;
    let r1 = coherence_ratio(weights, lambda * t)?;
    let r2 = coherence_ratio(weights, 2.0 * lambda * t)?;
    let ratio = |dm: i32| -> f64 {
        match dm.abs() {
            0 => 1.0,
            1 => r1,
            _ => r2,
        }
    };
    let mut m = Array2::<Complex64>::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = projector_entry(&state_t.amplitudes, i, j) * ratio(delta_m(i, j));
        }
    }
    Ok(ReducedDensityMatrix { matrix: m, t, r1, r2 })
}

/// Bath-free reference: the evolved pair as a pure projector with both
/// coherence ratios pinned to 1. This is the baseline trace plotted next
/// to the bath-dressed dynamics to show what decoherence removes.
pub fn bare_reduced_density_matrix(
    state0: &ProbeState,
    params: &ProbeParams,
    t: f64,
) -> Result<ReducedDensityMatrix> {
    let state_t = evolve_amplitudes(state0, params, t)?;
    let mut m = Array2::<Complex64>::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = projector_entry(&state_t.amplitudes, i, j);
        }
    }
    Ok(ReducedDensityMatrix { matrix: m, t, r1: 1.0, r2: 1.0 })
}

/// Density-matrix assembly over a bath held at real field `h`, where the
/// coherence ratios become genuinely complex. Metadata stores the real
/// parts of the two ratio values; at h = 0 this path reduces to
/// [`reduced_density_matrix`]. The zero-detection pipeline never uses it.
pub fn reduced_density_matrix_with_field(
    state0: &ProbeState,
    params: &ProbeParams,
    weights: &SectorWeights,
    beta: f64,
    h: f64,
    t: f64,
) -> Result<ReducedDensityMatrix> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidSpec(format!("beta must be finite and >= 0, got {beta}")));
    }
    if !h.is_finite() {
        return Err(Error::InvalidSpec("field h must be finite".into()));
    }
    let state_t = evolve_amplitudes(state0, params, t)?;
    let lambda = params.lambda_a;
    let z0 = (-beta * h).exp();
    let r = |dm: i32| -> Complex64 {
        if dm == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            ratio_at(weights, z0, lambda * dm as f64 * t)
        }
    };
    let mut m = Array2::<Complex64>::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = projector_entry(&state_t.amplitudes, i, j) * r(delta_m(i, j));
        }
    }
    let r1 = r(1).re;
    let r2 = r(2).re;
    Ok(ReducedDensityMatrix { matrix: m, t, r1, r2 })
}

/// Asymmetric couplings lambda_a != lambda_b with a pure Ising probe
/// interaction: amplitudes evolve by phases only, and entry (i, j)
/// carries the ratio at x = (dm_A * lambda_a + dm_B * lambda_b) * t, so
/// four ratio types appear (lambda_a, lambda_b, and their sum and
/// difference). Reduces to the symmetric path when lambda_a = lambda_b.
pub fn evolve_asymmetric(
    state0: &ProbeState,
    params: &ProbeParams,
    weights: &SectorWeights,
    beta: f64,
    t: f64,
) -> Result<ReducedDensityMatrix> {
    params.validate()?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidSpec(format!("beta must be finite and >= 0, got {beta}")));
    }
    if params.j_xx != 0.0 {
        return Err(Error::ModeMismatch(format!(
            "asymmetric bath couplings require j_xx = 0, got {}",
            params.j_xx
        )));
    }
    let state_t = amplitude_map(state0, 0.0, params.j_zz, params.h0, t);
    let mut m = Array2::<Complex64>::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            let da = (MAG_A[i] - MAG_A[j]) / 2;
            let db = (MAG_B[i] - MAG_B[j]) / 2;
            let x = (da as f64 * params.lambda_a + db as f64 * params.lambda_b) * t;
            let ratio = if da == 0 && db == 0 { 1.0 } else { coherence_ratio(weights, x)? };
            m[(i, j)] = projector_entry(&state_t.amplitudes, i, j) * ratio;
        }
    }
    let r1 = coherence_ratio(weights, (params.lambda_a - params.lambda_b) * t)?;
    let r2 = coherence_ratio(weights, (params.lambda_a + params.lambda_b) * t)?;
    Ok(ReducedDensityMatrix { matrix: m, t, r1, r2 })
}

/// All eleven correlators from the evolved amplitudes and the ratios the
/// matrix was assembled with. `rdm` and `state_t` must describe the same
/// symmetric-mode evolution at the same time.
pub fn correlators(rdm: &ReducedDensityMatrix, state_t: &ProbeState) -> CorrelationRecord {
    let [a0, a1, a2, a3] = state_t.amplitudes;
    let (r1, r2) = (rdm.r1, rdm.r2);
    let mid = a1 * a2.conj();
    let outer = a0 * a3.conj();
    CorrelationRecord {
        t: rdm.t,
        xz: 0.5 * r1 * (a0 * a2.conj() - a1 * a3.conj()).re,
        yz: 0.5 * r1 * (a1 * a3.conj() - a0 * a2.conj()).im,
        zx: 0.5 * r1 * (a0 * a1.conj() - a2 * a3.conj()).re,
        zy: 0.5 * r1 * (a2 * a3.conj() - a0 * a1.conj()).im,
        xx_minus_yy: r2 * outer.re,
        xy_plus_yx: -r2 * outer.im,
        zz: 0.25 * (a0.norm_sqr() - a1.norm_sqr() - a2.norm_sqr() + a3.norm_sqr()),
        xx_plus_yy: mid.re,
        xy_minus_yx: mid.im,
        sx_sum: r1 * ((a0 + a3) * (a1 + a2).conj()).re,
        sy_sum: -r1 * ((a0 - a3) * (a1 + a2).conj()).im,
    }
}

/// Full correlator sweep for a ring bath probed from the x-projected
/// initial state with isotropic probe coupling j_xx = j_zz = j_probe and
/// no local field. In that configuration xz vanishes identically and
/// yz(t) carries the first-order ratio times sin(j_probe * t) / 4.
pub fn ring_signal(
    n_sites: usize,
    j_bath: f64,
    j_probe: f64,
    lambda: f64,
    beta: f64,
    t_grid: &[f64],
) -> Result<Vec<CorrelationRecord>> {
    let spec = BathSpec::ring(n_sites, j_bath, beta)?;
    let weights = crate::bath::enumerate_sector_weights(&spec)?;
    let params = ProbeParams::symmetric(j_probe, j_probe, 0.0, lambda);
    let state0 = ProbeState::x_projected();
    t_grid
        .par_iter()
        .map(|&t| {
            let rdm = reduced_density_matrix(&state0, &params, &weights, beta, t)?;
            let state_t = evolve_amplitudes(&state0, &params, t)?;
            Ok(correlators(&rdm, &state_t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::enumerate_sector_weights;
    use crate::zeros::{find_zeros, DEFAULT_CLUSTER_TOL};
    use ndarray_linalg::Trace;
    use std::f64::consts::PI;

    #[test]
    fn bare_matrix_is_the_unit_ratio_projector() {
        let state = random_state(7);
        let params = ProbeParams::symmetric(0.7, -0.3, 0.2, 1.4);
        let bare = bare_reduced_density_matrix(&state, &params, 1.3).unwrap();
        assert_eq!(bare.r1, 1.0);
        assert_eq!(bare.r2, 1.0);
        bare.validate().unwrap();
        // At t = 0 every coherence ratio is 1, so the bath-dressed matrix
        // coincides with the bare projector entry for entry.
        let w = ring_weights(6, 1.0);
        let dressed = reduced_density_matrix(&state, &params, &w, 1.0, 0.0).unwrap();
        let bare0 = bare_reduced_density_matrix(&state, &params, 0.0).unwrap();
        for (a, b) in dressed.matrix.iter().zip(bare0.matrix.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ring_weights(n: usize, beta_j: f64) -> SectorWeights {
        let spec = BathSpec::ring(n, 1.0, beta_j).unwrap();
        enumerate_sector_weights(&spec).unwrap()
    }

    fn random_state(seed: u64) -> ProbeState {
        // Small deterministic congruential stream; good enough to spread
        // amplitudes around the sphere for fixed-seed tests.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        ProbeState::from_unnormalized([
            c(next(), next()),
            c(next(), next()),
            c(next(), next()),
            c(next(), next()),
        ])
        .unwrap()
    }

    #[test]
    fn zero_time_evolution_is_the_identity() {
        let s = random_state(7);
        let p = ProbeParams::symmetric(0.8, -0.3, 0.2, 1.0);
        let out = evolve_amplitudes(&s, &p, 0.0).unwrap();
        for (a, b) in out.amplitudes.iter().zip(&s.amplitudes) {
            assert!((a - b).norm() <= 1e-15);
        }
    }

    #[test]
    fn full_flip_flop_transfers_the_middle_amplitude() {
        let s = ProbeState::new([c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = ProbeParams::symmetric(1.0, 0.0, 0.0, 1.0);
        let out = evolve_amplitudes(&s, &p, PI).unwrap();
        assert!((out.amplitudes[1]).norm() <= 1e-15);
        assert!((out.amplitudes[2] - c(0.0, -1.0)).norm() <= 1e-15);
    }

    #[test]
    fn outer_amplitude_gains_the_advertised_phase() {
        let s = ProbeState::new([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = ProbeParams::symmetric(0.7, 0.4, 0.9, 1.0);
        let t = 1.3;
        let out = evolve_amplitudes(&s, &p, t).unwrap();
        let want = Complex64::from_polar(1.0, -(p.h0 + p.j_zz / 4.0) * t);
        assert!((out.amplitudes[0] - want).norm() <= 1e-15);
        assert!((out.norm() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn evolution_rejects_asymmetric_parameters() {
        let s = random_state(3);
        let p = ProbeParams { j_xx: 0.5, j_zz: 0.0, h0: 0.0, lambda_a: 1.0, lambda_b: 2.0 };
        assert!(matches!(evolve_amplitudes(&s, &p, 1.0), Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn single_site_bath_ratio_is_a_half_angle_cosine() {
        let spec = BathSpec::new(1, vec![], 1.7, 0.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        for i in 0..30 {
            let x = -3.0 + 6.5 * i as f64 / 29.0;
            let r = coherence_ratio(&w, x).unwrap();
            assert!((r - (0.5 * x).cos()).abs() <= 1e-14);
        }
    }

    #[test]
    fn infinite_temperature_ratio_is_a_cosine_power() {
        let w = ring_weights(10, 0.0);
        for i in 0..30 {
            let x = 0.1 + 6.0 * i as f64 / 29.0;
            let r = coherence_ratio(&w, x).unwrap();
            assert!((r - (0.5 * x).cos().powi(10)).abs() <= 1e-13);
            assert!(r.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn zero_time_matrix_is_the_projector() {
        let s = random_state(11);
        let p = ProbeParams::symmetric(0.4, 0.2, -0.1, 0.8);
        let w = ring_weights(6, 1.0);
        let rdm = reduced_density_matrix(&s, &p, &w, 1.0, 0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = s.amplitudes[i] * s.amplitudes[j].conj();
                assert!((rdm.matrix[(i, j)] - want).norm() <= 1e-15);
            }
        }
        rdm.validate().unwrap();
    }

    #[test]
    fn diagonal_is_bath_independent_and_matches_populations() {
        let s = random_state(19);
        let p = ProbeParams::symmetric(0.9, 0.3, 0.1, 1.1);
        let t = 0.77;
        let wa = ring_weights(6, 1.0);
        let wb = ring_weights(9, 4.0);
        let ra = reduced_density_matrix(&s, &p, &wa, 1.0, t).unwrap();
        let rb = reduced_density_matrix(&s, &p, &wb, 4.0, t).unwrap();
        let state_t = evolve_amplitudes(&s, &p, t).unwrap();
        for i in 0..4 {
            assert_eq!(ra.matrix[(i, i)], rb.matrix[(i, i)]);
            assert!((ra.matrix[(i, i)].re - state_t.amplitudes[i].norm_sqr()).abs() <= 1e-15);
            assert_eq!(ra.matrix[(i, i)].im, 0.0);
        }
    }

    #[test]
    fn degenerate_zero_kills_single_jumps_and_revives_double_jumps() {
        let s = random_state(23);
        let p = ProbeParams::symmetric(0.3, 0.5, 0.2, 1.0);
        let w = ring_weights(10, 0.0);
        // lambda t = pi: single-jump ratios are cos^10(pi/2) = 0, but the
        // double-jump evaluation point wraps the whole circle back to
        // z = 1, so those coherences revive with ratio cos^10(pi) = 1.
        let rdm = reduced_density_matrix(&s, &p, &w, 0.0, PI).unwrap();
        let state_t = evolve_amplitudes(&s, &p, PI).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            assert!(rdm.matrix[(i, j)].norm() <= 1e-15, "entry ({i},{j}) survived");
        }
        let bare = state_t.amplitudes[0] * state_t.amplitudes[3].conj();
        assert!((rdm.matrix[(0, 3)] - bare).norm() <= 1e-13);
        assert!((rdm.r2 - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn first_zero_angle_kills_only_the_single_jump_coherences() {
        let w = ring_weights(10, 1.0);
        let zeros = find_zeros(&w, DEFAULT_CLUSTER_TOL).unwrap();
        let theta1 = zeros.zeros[0].angle;
        let s = random_state(31);
        let p = ProbeParams::symmetric(0.3, 0.5, 0.2, 1.0);
        let rdm = reduced_density_matrix(&s, &p, &w, 1.0, theta1).unwrap();
        assert!(rdm.r1.abs() <= 1e-10, "r1 = {:.2e}", rdm.r1);
        assert!(rdm.r2.abs() > 1e-3, "r2 = {:.2e}", rdm.r2);
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            assert!(rdm.matrix[(i, j)].norm() <= 1e-10);
        }
        assert!(rdm.matrix[(0, 3)].norm() > 1e-4);
    }

    #[test]
    fn correlators_match_the_operator_trace_oracle() {
        use ndarray::array;
        let sx = array![[c(0.0, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]];
        let sy = array![[c(0.0, 0.0), c(0.0, -0.5)], [c(0.0, 0.5), c(0.0, 0.0)]];
        let sz = array![[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-0.5, 0.0)]];
        let id = array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let kron = |a: &Array2<Complex64>, b: &Array2<Complex64>| -> Array2<Complex64> {
            let mut out = Array2::zeros((4, 4));
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                        }
                    }
                }
            }
            out
        };
        let expect = |rho: &Array2<Complex64>, op: &Array2<Complex64>| -> f64 {
            let v = rho.dot(op).trace().unwrap();
            assert!(v.im.abs() <= 1e-13);
            v.re
        };

        let s = random_state(41);
        let p = ProbeParams::symmetric(0.83, -0.41, 0.27, 1.3);
        let w = ring_weights(6, 1.0);
        let t = 1.234;
        let rdm = reduced_density_matrix(&s, &p, &w, 1.0, t).unwrap();
        let state_t = evolve_amplitudes(&s, &p, t).unwrap();
        let rec = correlators(&rdm, &state_t);
        let rho = &rdm.matrix;

        let pairs = [
            (rec.xz, expect(rho, &kron(&sx, &sz))),
            (rec.yz, expect(rho, &kron(&sy, &sz))),
            (rec.zx, expect(rho, &kron(&sz, &sx))),
            (rec.zy, expect(rho, &kron(&sz, &sy))),
            (
                rec.xx_minus_yy,
                expect(rho, &kron(&sx, &sx)) - expect(rho, &kron(&sy, &sy)),
            ),
            (
                rec.xy_plus_yx,
                expect(rho, &kron(&sx, &sy)) + expect(rho, &kron(&sy, &sx)),
            ),
            (rec.zz, expect(rho, &kron(&sz, &sz))),
            (
                rec.xx_plus_yy,
                expect(rho, &kron(&sx, &sx)) + expect(rho, &kron(&sy, &sy)),
            ),
            (
                rec.xy_minus_yx,
                expect(rho, &kron(&sx, &sy)) - expect(rho, &kron(&sy, &sx)),
            ),
            (
                rec.sx_sum,
                expect(rho, &kron(&sx, &id)) + expect(rho, &kron(&id, &sx)),
            ),
            (
                rec.sy_sum,
                expect(rho, &kron(&sy, &id)) + expect(rho, &kron(&id, &sy)),
            ),
        ];
        for (k, (got, want)) in pairs.iter().enumerate() {
            assert!((got - want).abs() <= 1e-12, "correlator {k}: {got} vs {want}");
        }
    }

    #[test]
    fn bath_free_correlators_are_identical_across_baths() {
        let s = random_state(53);
        let p = ProbeParams::symmetric(0.6, 1.1, -0.2, 0.9);
        let t = 2.2;
        let state_t = evolve_amplitudes(&s, &p, t).unwrap();
        let recs: Vec<CorrelationRecord> = [(4usize, 0.5), (8, 2.0), (10, 8.0)]
            .iter()
            .map(|&(n, bj)| {
                let w = ring_weights(n, bj);
                let rdm = reduced_density_matrix(&s, &p, &w, bj, t).unwrap();
                correlators(&rdm, &state_t)
            })
            .collect();
        for r in &recs[1..] {
            assert_eq!(r.zz, recs[0].zz);
            assert_eq!(r.xx_plus_yy, recs[0].xx_plus_yy);
            assert_eq!(r.xy_minus_yx, recs[0].xy_minus_yx);
        }
    }

    #[test]
    fn ring_signal_isolates_the_ratio_times_sine() {
        let (n, lambda) = (10, 1.0);
        let j_probe = lambda / (2.0 * PI);
        let w = ring_weights(n, 1.0);
        let t_grid: Vec<f64> = (0..200).map(|i| 6.3 * i as f64 / 199.0).collect();
        let recs = ring_signal(n, 1.0, j_probe, lambda, 1.0, &t_grid).unwrap();
        for rec in &recs {
            let r1 = coherence_ratio(&w, lambda * rec.t).unwrap();
            let want = 0.25 * r1 * (j_probe * rec.t).sin();
            assert_eq!(rec.xz, 0.0);
            assert!((rec.yz - want).abs() <= 1e-12, "t={}: {} vs {want}", rec.t, rec.yz);
        }
        assert_eq!(recs[0].yz, 0.0);
    }

    #[test]
    fn asymmetric_path_requires_ising_only_interaction() {
        let s = random_state(61);
        let w = ring_weights(6, 1.0);
        let p = ProbeParams { j_xx: 0.1, j_zz: 0.4, h0: 0.0, lambda_a: 1.0, lambda_b: 0.5 };
        assert!(matches!(
            evolve_asymmetric(&s, &p, &w, 1.0, 1.0),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn asymmetric_path_reduces_to_the_symmetric_one() {
        let s = random_state(67);
        let w = ring_weights(8, 2.0);
        let p = ProbeParams { j_xx: 0.0, j_zz: 0.7, h0: 0.3, lambda_a: 1.2, lambda_b: 1.2 };
        let t = 1.9;
        let asym = evolve_asymmetric(&s, &p, &w, 2.0, t).unwrap();
        let sym = reduced_density_matrix(&s, &p, &w, 2.0, t).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((asym.matrix[(i, j)] - sym.matrix[(i, j)]).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_probe_keeps_bath_free_coherences() {
        let s = random_state(71);
        let w = ring_weights(8, 1.0);
        let p = ProbeParams { j_xx: 0.0, j_zz: 0.5, h0: 0.1, lambda_a: 1.0, lambda_b: 0.0 };
        let t = 2.4;
        let rdm = evolve_asymmetric(&s, &p, &w, 1.0, t).unwrap();
        let state_t = amplitude_map(&s, 0.0, p.j_zz, p.h0, t);
        // B-side flips leave the bath untouched: lambda_b * t = 0 phase.
        for (i, j) in [(0, 1), (2, 3)] {
            let want = state_t.amplitudes[i] * state_t.amplitudes[j].conj();
            assert!((rdm.matrix[(i, j)] - want).norm() <= 1e-15);
        }
        // A-side flips still carry the bath ratio.
        let r_a = coherence_ratio(&w, p.lambda_a * t).unwrap();
        let want = state_t.amplitudes[0] * state_t.amplitudes[2].conj() * r_a;
        assert!((rdm.matrix[(0, 2)] - want).norm() <= 1e-15);
    }

    #[test]
    fn mid_subspace_coherence_vanishes_at_the_difference_zero_time() {
        let w = ring_weights(10, 1.0);
        let zeros = find_zeros(&w, DEFAULT_CLUSTER_TOL).unwrap();
        let theta1 = zeros.zeros[0].angle;
        let (la, lb) = (1.5, 0.5);
        let p = ProbeParams { j_xx: 0.0, j_zz: 0.4, h0: 0.2, lambda_a: la, lambda_b: lb };
        let s = ProbeState::from_unnormalized([
            c(0.0, 0.0),
            c(0.8, 0.1),
            c(0.5, -0.2),
            c(0.0, 0.0),
        ])
        .unwrap();
        let t = theta1 / (la - lb);
        let rdm = evolve_asymmetric(&s, &p, &w, 1.0, t).unwrap();
        assert!(rdm.matrix[(1, 2)].norm() <= 1e-10, "mid coherence {:.2e}", rdm.matrix[(1, 2)].norm());
        assert!((rdm.r1).abs() <= 1e-10);
    }

    #[test]
    fn field_assembly_reduces_to_the_zero_field_path() {
        let s = random_state(83);
        let p = ProbeParams::symmetric(0.5, 0.3, 0.1, 1.0);
        let w = ring_weights(7, 1.5);
        let t = 1.1;
        let plain = reduced_density_matrix(&s, &p, &w, 1.5, t).unwrap();
        let field = reduced_density_matrix_with_field(&s, &p, &w, 1.5, 0.0, t).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((plain.matrix[(i, j)] - field.matrix[(i, j)]).norm() <= 1e-14);
            }
        }
        let biased = reduced_density_matrix_with_field(&s, &p, &w, 1.5, 0.4, t).unwrap();
        biased.validate().unwrap();
        let mut max_im = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                max_im = max_im.max((biased.matrix[(i, j)] - plain.matrix[(i, j)]).norm());
            }
        }
        assert!(max_im > 1e-6, "field should shift the coherences");
    }
}
