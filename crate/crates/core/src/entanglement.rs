//! Wootters concurrence of the probe pair, its closed forms at the
//! signal zero times and on the two invariant subspaces, and the
//! geometric measure expressible through measured correlators.
//!
//! The general path diagonalizes the non-Hermitian product rho*rho_tilde
//! directly with a dense eigen-solver; its eigenvalues are the squared
//! omegas. The closed forms exist because at a first-order zero time the
//! matrix splits into two 2x2 blocks, and on either invariant subspace
//! only one coherence survives at all.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::probe::{amplitude_map, ProbeParams, ProbeState, ReducedDensityMatrix};

/// Eigenvalues of rho*rho_tilde within this window of zero are solver
/// noise and clamp to zero; anything below the negative edge is an
/// upstream bug. The window is symmetric because the dense eigen-solver
/// resolves eigenvalues only to an absolute floor near machine epsilon
/// times the matrix norm: a structurally zero eigenvalue comes back as
/// +-1e-16 noise either way, and feeding the positive case into the
/// square root would manufacture a spurious omega of ~1e-8.
const EIG_CLAMP_WINDOW: f64 = 1e-12;

/// Largest imaginary part tolerated on an eigenvalue of rho*rho_tilde.
const EIG_IMAG_TOL: f64 = 1e-10;

/// Population allowed outside the declared invariant subspace.
const SUBSPACE_LEAK_TOL: f64 = 1e-12;

/// Which closed form (if any) produced a concurrence value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcurrenceBranch {
    General,
    ZeroTimeW1,
    ZeroTimeW34,
    SubspaceMid,
    SubspaceOuter,
}

/// Concurrence together with the sorted spectrum it came from.
#[derive(Debug, Clone, Copy)]
pub struct ConcurrenceResult {
    /// max(0, w1 - w2 - w3 - w4), in [0, 1].
    pub concurrence: f64,
    /// Square roots of the rho*rho_tilde eigenvalues, sorted descending.
    pub omegas: [f64; 4],
    pub branch: ConcurrenceBranch,
}

/// Spin-flipped matrix: (sigma_y x sigma_y) conj(rho) (sigma_y x sigma_y).
/// The flip operator is the antidiagonal (-1, 1, 1, -1), so entry (i, j)
/// is f_i f_j conj(rho[3-i, 3-j]).
fn spin_flipped(rho: &Array2<Complex64>) -> Array2<Complex64> {
    const F: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
    let mut out = Array2::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            out[(i, j)] = rho[(3 - i, 3 - j)].conj() * (F[i] * F[j]);
        }
    }
    out
}

/// Sorted omegas from the eigenvalues of rho*rho_tilde.
fn omegas_from_product(product: &Array2<Complex64>) -> Result<[f64; 4]> {
    let (eigs, _) = product.eig()?;
    let mut omegas = [0.0f64; 4];
    for (k, ev) in eigs.iter().enumerate() {
        if ev.im.abs() > EIG_IMAG_TOL {
            return Err(Error::InvalidState(format!(
                "rho*rho_tilde eigenvalue has imaginary part {:.2e}",
                ev.im
            )));
        }
        if ev.re < -EIG_CLAMP_WINDOW {
            return Err(Error::InvalidState(format!(
                "rho*rho_tilde eigenvalue {:.2e} below the clamp window",
                ev.re
            )));
        }
        let re = if ev.re.abs() <= EIG_CLAMP_WINDOW { 0.0 } else { ev.re };
        omegas[k] = re.sqrt();
    }
    omegas.sort_by(|a, b| b.total_cmp(a));
    Ok(omegas)
}

fn concurrence_from_omegas(omegas: [f64; 4], branch: ConcurrenceBranch) -> ConcurrenceResult {
    let value = (omegas[0] - omegas[1] - omegas[2] - omegas[3]).max(0.0);
    ConcurrenceResult { concurrence: value, omegas, branch }
}

/// Wootters concurrence of an arbitrary probe-pair density matrix.
pub fn concurrence(rdm: &ReducedDensityMatrix) -> Result<ConcurrenceResult> {
    rdm.validate()?;
    let product = rdm.matrix.dot(&spin_flipped(&rdm.matrix));
    let omegas = omegas_from_product(&product)?;
    Ok(concurrence_from_omegas(omegas, ConcurrenceBranch::General))
}

/// Density matrix at a first-order zero time, where every single-jump
/// coherence carries ratio 0: two 2x2 blocks, the outer one damped by
/// `r2`. `state_t` must already be evolved to that time.
pub fn zero_time_matrix(state_t: &ProbeState, r2: f64, t: f64) -> ReducedDensityMatrix {
    let a = &state_t.amplitudes;
    let mut m = Array2::<Complex64>::zeros((4, 4));
    for i in 0..4 {
        m[(i, i)] = Complex64::new(a[i].norm_sqr(), 0.0);
    }
    m[(1, 2)] = a[1] * a[2].conj();
    m[(2, 1)] = a[2] * a[1].conj();
    m[(0, 3)] = a[0] * a[3].conj() * r2;
    m[(3, 0)] = a[3] * a[0].conj() * r2;
    ReducedDensityMatrix { matrix: m, t, r1: 0.0, r2 }
}

/// Closed-form concurrence at a zero time: w1 = 2|a1 a2|, w2 = 0,
/// w3,4 = |a0 a3| |1 +- r2|. Agrees with the general path on the same
/// matrix; the branch tag records which omega dominated, with exact ties
/// reported as the branch-free general formula.
pub fn concurrence_at_zero_time(state_t: &ProbeState, r2: f64) -> ConcurrenceResult {
    let a = &state_t.amplitudes;
    let mid = (a[1] * a[2]).norm();
    let outer = (a[0] * a[3]).norm();
    let w1 = 2.0 * mid;
    let w3 = outer * (1.0 + r2).abs();
    let w4 = outer * (1.0 - r2).abs();
    let mut omegas = [w1, 0.0, w3, w4];
    omegas.sort_by(|a, b| b.total_cmp(a));
    let branch = if w1 > w3.max(w4) {
        ConcurrenceBranch::ZeroTimeW1
    } else if w1 < w3.max(w4) {
        ConcurrenceBranch::ZeroTimeW34
    } else {
        ConcurrenceBranch::General
    };
    concurrence_from_omegas(omegas, branch)
}

/// The two invariant subspaces of the probe pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// span{|+->, |-+>}: zero total magnetization, bath-free coherence
    /// under symmetric couplings.
    Mid,
    /// span{|++>, |-->}: the double-jump coherence, damped by the
    /// second-order ratio.
    Outer,
}

/// Concurrence of a state supported on one invariant subspace:
/// 2 |amp_i(t) amp_j(t)| |ratio|, where `ratio` is the coherence ratio
/// the surviving off-diagonal entry carries (1 for the symmetric mid
/// branch, the second-order ratio for the symmetric outer branch, the
/// difference/sum ratios in the asymmetric mode).
pub fn subspace_concurrence(
    state0: &ProbeState,
    params: &ProbeParams,
    t: f64,
    ratio: f64,
    branch: Subspace,
) -> Result<f64> {
    params.validate()?;
    if !ratio.is_finite() || !t.is_finite() {
        return Err(Error::DomainError("ratio and t must be finite".into()));
    }
    if !params.is_symmetric() && params.j_xx != 0.0 {
        return Err(Error::ModeMismatch(
            "asymmetric bath couplings require j_xx = 0".into(),
        ));
    }
    let a = &state0.amplitudes;
    let (keep, leak) = match branch {
        Subspace::Mid => ((1, 2), a[0].norm_sqr() + a[3].norm_sqr()),
        Subspace::Outer => ((0, 3), a[1].norm_sqr() + a[2].norm_sqr()),
    };
    if leak > SUBSPACE_LEAK_TOL {
        return Err(Error::SubspaceViolation(leak));
    }
    let state_t = amplitude_map(state0, params.j_xx, params.j_zz, params.h0, t);
    let (i, j) = keep;
    Ok(2.0 * (state_t.amplitudes[i] * state_t.amplitudes[j]).norm() * ratio.abs())
}

/// Geometric entanglement measure from the two measurable correlators:
/// E = (1 - sqrt(1 - 16 xx^2 - 16 yx^2)) / 2.
pub fn geometric_measure(xx: f64, yx: f64) -> Result<f64> {
    let radicand = 1.0 - 16.0 * (xx * xx + yx * yx);
    if radicand < -1e-10 {
        return Err(Error::DomainError(format!(
            "correlators exceed the geometric-measure domain, radicand {radicand:.2e}"
        )));
    }
    Ok(0.5 * (1.0 - radicand.max(0.0).sqrt()))
}

/// Concurrence recovered from the same two correlators on either
/// invariant subspace: C = 4 sqrt(xx^2 + yx^2).
pub fn concurrence_from_correlators(xx: f64, yx: f64) -> f64 {
    4.0 * (xx * xx + yx * yx).sqrt()
}

/// The 2x2 direct-sum blocks of rho, its spin flip, and their product at
/// a zero time. Block index 0 acts on {|+->, |-+>}, block index 1 on
/// {|++>, |-->}. Test oracle for the zero-time closed forms: the product
/// blocks' eigenvalues obey
///
///   mid:   w^2 (w^2 - 4|a1 a2|^2) = 0,
///   outer: w^4 - 2 w^2 |a0 a3|^2 (1 + r2^2) + |a0 a3|^4 (1 - r2^2)^2 = 0.
#[derive(Debug, Clone)]
pub struct ZeroTimeBlocks {
    pub rho: [Array2<Complex64>; 2],
    pub rho_tilde: [Array2<Complex64>; 2],
    pub product: [Array2<Complex64>; 2],
}

pub fn zero_time_blocks(state_t: &ProbeState, r2: f64) -> ZeroTimeBlocks {
    let a = &state_t.amplitudes;
    let block = |i: usize, j: usize, coh: Complex64| -> Array2<Complex64> {
        let mut m = Array2::zeros((2, 2));
        m[(0, 0)] = Complex64::new(a[i].norm_sqr(), 0.0);
        m[(1, 1)] = Complex64::new(a[j].norm_sqr(), 0.0);
        m[(0, 1)] = coh;
        m[(1, 0)] = coh.conj();
        m
    };
    let flip = |m: &Array2<Complex64>| -> Array2<Complex64> {
        // Within either block the spin flip swaps the two basis states
        // and conjugates; the sign factors cancel pairwise.
        let mut out = Array2::zeros((2, 2));
        out[(0, 0)] = m[(1, 1)].conj();
        out[(1, 1)] = m[(0, 0)].conj();
        out[(0, 1)] = m[(1, 0)].conj();
        out[(1, 0)] = m[(0, 1)].conj();
        out
    };
    let rho = [
        block(1, 2, a[1] * a[2].conj()),
        block(0, 3, a[0] * a[3].conj() * r2),
    ];
    let rho_tilde = [flip(&rho[0]), flip(&rho[1])];
    let product = [rho[0].dot(&rho_tilde[0]), rho[1].dot(&rho_tilde[1])];
    ZeroTimeBlocks { rho, rho_tilde, product }
}
