//! Brute-force verifier for the probe dynamics: evolves the full
//! probe-and-bath system configuration by configuration and traces the
//! bath out, never touching the fugacity polynomial.
//!
//! Because the bath operators are diagonal on bath basis states, each
//! configuration contributes an independent 4x4 Hermitian Hamiltonian
//! for the probe pair, exponentiated here by eigendecomposition. The
//! agreement of this route with the ratio-formula assembly is the
//! central correctness check of the library; keeping the two code paths
//! disjoint is what makes that check meaningful.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::probe::{ProbeParams, ProbeState};

/// Largest bath the exhaustive sum will take on.
pub const ORACLE_SITE_CAP: usize = 12;

/// Output of the exhaustive thermal evolution.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Probe-pair density matrix with the bath traced out.
    pub rdm: Array2<Complex64>,
    /// Number of bath configurations summed, 2^N.
    pub n_configs: usize,
    /// Unnormalized thermal weight total; at zero field this is the full
    /// partition sum and must match the sector-weight total within its
    /// exponent scale.
    pub weight_sum: f64,
}

/// Bath-configuration energy at zero probe coupling: -sum J_ij s_i s_j
/// with s = +-1/2 read off the bitmask (set bit = down spin).
fn config_energy(bonds: &[(usize, usize, f64)], config: u64) -> f64 {
    let spin = |site: usize| -> f64 {
        if config >> site & 1 == 1 {
            -0.5
        } else {
            0.5
        }
    };
    -bonds.iter().map(|&(i, j, coupling)| coupling * spin(i) * spin(j)).sum::<f64>()
}

/// Probe-pair Hamiltonian for one bath configuration of magnetization m:
/// the XXZ pair coupling and local field, plus the longitudinal shifts
/// lambda_a m s_A^z + lambda_b m s_B^z.
fn probe_hamiltonian(params: &ProbeParams, m: f64) -> Array2<Complex64> {
    let shift_sum = 0.5 * m * (params.lambda_a + params.lambda_b);
    let shift_diff = 0.5 * m * (params.lambda_a - params.lambda_b);
    let quarter_zz = 0.25 * params.j_zz;
    let mut h = Array2::<Complex64>::zeros((4, 4));
    h[(0, 0)] = Complex64::new(quarter_zz + params.h0 + shift_sum, 0.0);
    h[(1, 1)] = Complex64::new(-quarter_zz + shift_diff, 0.0);
    h[(2, 2)] = Complex64::new(-quarter_zz - shift_diff, 0.0);
    h[(3, 3)] = Complex64::new(quarter_zz - params.h0 - shift_sum, 0.0);
    h[(1, 2)] = Complex64::new(0.5 * params.j_xx, 0.0);
    h[(2, 1)] = Complex64::new(0.5 * params.j_xx, 0.0);
    h
}

/// psi(t) = V exp(-i E t) V^H psi(0) from the eigendecomposition of one
/// configuration's Hamiltonian.
fn propagate(h: &Array2<Complex64>, psi0: &[Complex64; 4], t: f64) -> Result<[Complex64; 4]> {
    let (evals, evecs) = h.eigh(UPLO::Lower)?;
    let mut coef = [Complex64::new(0.0, 0.0); 4];
    for k in 0..4 {
        for i in 0..4 {
            coef[k] += evecs[(i, k)].conj() * psi0[i];
        }
        coef[k] *= Complex64::from_polar(1.0, -evals[k] * t);
    }
    let mut psi_t = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        for k in 0..4 {
            psi_t[i] += evecs[(i, k)] * coef[k];
        }
    }
    Ok(psi_t)
}

/// Exhaustive thermal reduced density matrix: every bath configuration
/// is weighted by its Boltzmann factor (field included when the spec
/// carries one) and contributes the exactly evolved probe projector.
/// Valid for any parameter combination, symmetric or not, since the
/// per-configuration evolution never relies on the ratio closed forms.
pub fn exact_thermal_rdm(
    spec: &BathSpec,
    state0: &ProbeState,
    params: &ProbeParams,
    t: f64,
) -> Result<OracleResult> {
    if spec.n_sites > ORACLE_SITE_CAP {
        return Err(Error::SizeExceeded { n_sites: spec.n_sites, cap: ORACLE_SITE_CAP });
    }
    params.validate()?;
    if !t.is_finite() {
        return Err(Error::DomainError(format!("time must be finite, got {t}")));
    }
    let n = spec.n_sites;
    let n_configs = 1usize << n;
    let psi0 = state0.amplitudes;

    // Per-configuration weights and evolved probe states, kept in
    // configuration order so the reduction below is deterministic.
    let contributions: Vec<(f64, [Complex64; 4])> = (0..n_configs as u64)
        .into_par_iter()
        .map(|config| {
            let magnetization = 0.5 * n as f64 - config.count_ones() as f64;
            let energy = config_energy(&spec.bonds, config) - spec.field_h * magnetization;
            let weight = (-spec.beta * energy).exp();
            let psi_t = if t == 0.0 {
                Ok(psi0)
            } else {
                propagate(&probe_hamiltonian(params, magnetization), &psi0, t)
            }?;
            Ok((weight, psi_t))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut weight_sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut rdm = Array2::<Complex64>::zeros((4, 4));
    for (weight, psi_t) in &contributions {
        let fresh = weight - comp;
        let grown = weight_sum + fresh;
        comp = (grown - weight_sum) - fresh;
        weight_sum = grown;
        for i in 0..4 {
            for j in 0..4 {
                rdm[(i, j)] += psi_t[i] * psi_t[j].conj() * *weight;
            }
        }
    }
    if !(weight_sum.is_finite() && weight_sum > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "thermal weight sum is {weight_sum}; beta or couplings out of range"
        )));
    }
    if t == 0.0 {
        // Every propagator is the identity, so the thermal average is the
        // initial projector by identity rather than by accumulation.
        for i in 0..4 {
            for j in 0..4 {
                rdm[(i, j)] = psi0[i] * psi0[j].conj();
            }
        }
    } else {
        rdm.mapv_inplace(|z| z / weight_sum);
    }
    Ok(OracleResult { rdm, n_configs, weight_sum })
}
