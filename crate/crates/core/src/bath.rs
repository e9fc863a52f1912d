//! Ising spin baths: exact sector weights and partition functions.
//!
//! A bath of N spin-1/2 sites with pair couplings J_ij has zero-field
//! energies E_0(c) = -sum_ij J_ij s_i s_j over configurations c, with
//! s = +-1/2. Binning Boltzmann factors by the number n of down spins
//! gives sector weights p_n, and the full partition function factors
//! through the fugacity polynomial Q(z) = sum_n p_n z^n as
//!
//!   Z(beta, h) = exp(beta N h / 2) * Q(exp(-beta h)).
//!
//! For ferromagnetic couplings (all J_ij >= 0) every zero of Q lies on
//! the unit circle; module `zeros` locates them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on exact enumeration (2^N configurations).
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Configurations are processed in fixed-size chunks so parallel sweeps
/// reduce in a thread-count-independent order.
const CHUNK_BITS: u32 = 14;

/// Couplings and thermodynamic parameters of one Ising bath.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BathSpec {
    pub n_sites: usize,
    /// Undirected bonds (i, j, J_ij); indices are distinct and each
    /// unordered pair appears at most once.
    pub bonds: Vec<(usize, usize, f64)>,
    /// Inverse temperature; 0 is the infinite-temperature limit.
    pub beta: f64,
    /// Real longitudinal field. The zero-detection pipeline runs at h = 0;
    /// the field only enters explicit partition-function evaluations.
    pub field_h: f64,
}

impl BathSpec {
    /// Validates and builds a bath spec.
    pub fn new(
        n_sites: usize,
        bonds: Vec<(usize, usize, f64)>,
        beta: f64,
        field_h: f64,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSpec("n_sites must be at least 1".into()));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "beta must be finite and non-negative, got {beta}"
            )));
        }
        if !field_h.is_finite() {
            return Err(Error::InvalidSpec("field_h must be finite".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j, j_ij) in &bonds {
            if i >= n_sites || j >= n_sites {
                return Err(Error::InvalidSpec(format!(
                    "bond ({i}, {j}) references a site outside 0..{n_sites}"
                )));
            }
            if i == j {
                return Err(Error::InvalidSpec(format!("bond ({i}, {j}) is a self-loop")));
            }
            if !j_ij.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "coupling on bond ({i}, {j}) is not finite"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidSpec(format!("duplicate bond ({i}, {j})")));
            }
        }
        Ok(Self { n_sites, bonds, beta, field_h })
    }

    /// Uniform nearest-neighbour ring of `n_sites` spins at zero field.
    pub fn ring(n_sites: usize, coupling: f64, beta: f64) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::TopologyUnsupported(format!(
                "ring needs at least 3 sites, got {n_sites}"
            )));
        }
        let bonds = (0..n_sites).map(|i| (i, (i + 1) % n_sites, coupling)).collect();
        Self::new(n_sites, bonds, beta, 0.0)
    }

    /// True when every coupling is non-negative, the hypothesis under
    /// which all fugacity zeros lie on the unit circle.
    pub fn is_ferromagnetic(&self) -> bool {
        self.bonds.iter().all(|&(_, _, j)| j >= 0.0)
    }

    /// Parses the JSON form, accepting either an explicit bond list or the
    /// `"topology": "ring"` shortcut with a single `coupling`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawBathConfig = serde_json::from_str(text)?;
        let beta = raw
            .beta
            .ok_or_else(|| Error::InvalidSpec("bath JSON is missing beta".into()))?;
        raw.build(beta)
    }
}

/// Serde mirror of the bath JSON schema; `build` resolves the topology
/// shortcut once an inverse temperature is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBathConfig {
    pub n_sites: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonds: Option<Vec<(usize, usize, f64)>>,
    #[serde(default)]
    pub field_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl RawBathConfig {
    pub fn build(&self, beta: f64) -> Result<BathSpec> {
        match (self.topology.as_deref(), &self.bonds) {
            (Some("ring"), None) => {
                let mut spec = BathSpec::ring(self.n_sites, self.coupling.unwrap_or(1.0), beta)?;
                spec.field_h = self.field_h;
                if !spec.field_h.is_finite() {
                    return Err(Error::InvalidSpec("field_h must be finite".into()));
                }
                Ok(spec)
            }
            (Some(other), None) => Err(Error::TopologyUnsupported(other.to_string())),
            (Some(_), Some(_)) => Err(Error::InvalidSpec(
                "give either a topology shortcut or an explicit bond list, not both".into(),
            )),
            (None, Some(bonds)) => BathSpec::new(self.n_sites, bonds.clone(), beta, self.field_h),
            (None, None) => BathSpec::new(self.n_sites, Vec::new(), beta, self.field_h),
        }
    }
}

/// Zero-field sector sums p_n over configurations with n down spins,
/// stored as p_n * exp(-scale) with the max-exponent normalization
/// scale = -beta * min E_0, so entries stay inside f64 range at large
/// beta * J.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorWeights {
    pub n_sites: usize,
    /// Scaled weights, length n_sites + 1.
    pub weights: Vec<f64>,
    /// Common log factor: true p_n = weights[n] * exp(scale).
    pub scale: f64,
}

impl SectorWeights {
    /// Validates the construction invariants: length N + 1, finite
    /// non-negative entries, a strictly positive all-up sector, and the
    /// spin-flip symmetry p_n = p_{N-n}.
    pub fn new(n_sites: usize, weights: Vec<f64>, scale: f64) -> Result<Self> {
        if weights.len() != n_sites + 1 {
            return Err(Error::InvalidSpec(format!(
                "sector weights: expected {} entries for {} sites, got {}",
                n_sites + 1,
                n_sites,
                weights.len()
            )));
        }
        if !scale.is_finite() {
            return Err(Error::InvalidSpec("sector weights: scale is not finite".into()));
        }
        let mut max = 0.0f64;
        for (n, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "sector weights: entry {n} is {w}, expected finite and non-negative"
                )));
            }
            max = max.max(w);
        }
        if weights[0] <= 0.0 {
            return Err(Error::InvalidSpec(
                "sector weights: all-up sector weight must be positive".into(),
            ));
        }
        for n in 0..=n_sites / 2 {
            let (a, b) = (weights[n], weights[n_sites - n]);
            if (a - b).abs() > 1e-12 * max {
                return Err(Error::InvalidSpec(format!(
                    "sector weights: spin-flip symmetry violated at sector {n} ({a} vs {b})"
                )));
            }
        }
        Ok(Self { n_sites, weights, scale })
    }

    /// Horner evaluation of the scaled fugacity polynomial
    /// sum_n weights[n] z^n; the true Q(z) is exp(scale) times this.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &w in self.weights.iter().rev() {
            acc = acc * z + w;
        }
        acc
    }

    /// Scaled Q(1) = sum of weights.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Exact sector weights by configuration enumeration, capped at
/// [`DEFAULT_ENUMERATION_CAP`] sites.
pub fn enumerate_sector_weights(spec: &BathSpec) -> Result<SectorWeights> {
    enumerate_sector_weights_capped(spec, DEFAULT_ENUMERATION_CAP)
}

/// Exact sector weights with an explicit enumeration cap.
pub fn enumerate_sector_weights_capped(spec: &BathSpec, cap: usize) -> Result<SectorWeights> {
    if spec.n_sites > cap {
        return Err(Error::SizeExceeded { n_sites: spec.n_sites, cap });
    }
    let n = spec.n_sites;
    let total: u64 = 1 << n;
    let chunk: u64 = 1 << CHUNK_BITS.min(n as u32);
    let n_chunks = total.div_ceil(chunk);
    let bonds: Vec<(u32, u32, f64)> =
        spec.bonds.iter().map(|&(i, j, j_ij)| (i as u32, j as u32, 0.25 * j_ij)).collect();

    // Energy of one configuration; bit set = spin down, aligned bonds
    // contribute -J/4 and anti-aligned ones +J/4.
    let energy = |c: u64| -> f64 {
        let mut e = 0.0;
        for &(i, j, j4) in &bonds {
            if ((c >> i) ^ (c >> j)) & 1 == 0 {
                e -= j4;
            } else {
                e += j4;
            }
        }
        e
    };

    let e_min = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let start = ci * chunk;
            let end = (start + chunk).min(total);
            (start..end).map(energy).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);

    // Per-sector Kahan sums inside fixed chunks, merged in chunk order so
    // the result does not depend on the worker count.
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut sums = vec![0.0f64; n + 1];
            let mut comp = vec![0.0f64; n + 1];
            let start = ci * chunk;
            let end = (start + chunk).min(total);
            for c in start..end {
                let k = c.count_ones() as usize;
                let term = (-spec.beta * (energy(c) - e_min)).exp();
                let y = term - comp[k];
                let t = sums[k] + y;
                comp[k] = (t - sums[k]) - y;
                sums[k] = t;
            }
            (sums, comp)
        })
        .collect();

    let mut weights = vec![0.0f64; n + 1];
    let mut comp = vec![0.0f64; n + 1];
    for (sums, residues) in &partials {
        for k in 0..=n {
            for term in [sums[k], -residues[k]] {
                let y = term - comp[k];
                let t = weights[k] + y;
                comp[k] = (t - weights[k]) - y;
                weights[k] = t;
            }
        }
    }

    SectorWeights::new(n, weights, -spec.beta * e_min)
}

/// Full partition function Z(beta, h) = exp(beta N h / 2) Q(exp(-beta h))
/// at a complex field. `beta` must match the one the weights were built
/// with; the exp(scale) factor is applied, so extreme beta * J can
/// overflow here even though the weights themselves are safe.
pub fn partition_function(weights: &SectorWeights, beta: f64, h: Complex64) -> Complex64 {
    let z = (-beta * h).exp();
    let prefactor = (beta * h * (weights.n_sites as f64) / 2.0).exp();
    weights.eval(z) * prefactor * weights.scale.exp()
}

/// Ring partition function from the two transfer-matrix eigenvalues,
///
///   z_pm = exp(beta J / 4) [cosh(beta h / 2) +- sqrt(sinh^2(beta h / 2) + exp(-beta J))],
///   Z = z_+^N + z_-^N,
///
/// with the principal square-root branch; the symmetric combination makes
/// the branch choice immaterial. Rejects N < 3: the two-site "ring" would
/// double-count its single bond.
pub fn transfer_matrix_partition(
    n_sites: usize,
    coupling: f64,
    beta: f64,
    h: Complex64,
) -> Result<Complex64> {
    if n_sites < 3 {
        return Err(Error::InvalidSpec(format!(
            "transfer matrix needs a ring of at least 3 sites, got {n_sites}"
        )));
    }
    let bh = beta * h / 2.0;
    let root = (bh.sinh() * bh.sinh() + Complex64::new((-beta * coupling).exp(), 0.0)).sqrt();
    let front = (beta * coupling / 4.0).exp();
    let zp = front * (bh.cosh() + root);
    let zm = front * (bh.cosh() - root);
    Ok(zp.powu(n_sites as u32) + zm.powu(n_sites as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> f64 {
        let mut acc = 1.0f64;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc.round()
    }

    #[test]
    fn single_site_has_unit_weights() {
        let spec = BathSpec::new(1, vec![], 2.5, 0.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        assert_eq!(w.weights, vec![1.0, 1.0]);
        assert_eq!(w.scale, 0.0);
    }

    #[test]
    fn bonded_pair_weights() {
        // Configurations: aligned pair at E = -J/4 (twice), anti-aligned at
        // +J/4 (twice), so p = [e^{bJ/4}, 2 e^{-bJ/4}, e^{bJ/4}].
        let spec = BathSpec::new(2, vec![(0, 1, 1.0)], 2.0, 0.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        assert!((w.scale - 0.5).abs() < 1e-15);
        assert!((w.weights[0] - 1.0).abs() < 1e-15);
        assert!((w.weights[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((w.weights[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_ring_weights_match_hand_enumeration() {
        // All-up energy -3J/4; one flip breaks two bonds, energy +J/4.
        let spec = BathSpec::ring(3, 1.0, 1.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        let expected = [0.75f64.exp(), 3.0 * (-0.25f64).exp()];
        for (n, want) in [(0, expected[0]), (1, expected[1]), (2, expected[1]), (3, expected[0])] {
            let got = w.weights[n] * w.scale.exp();
            assert!(
                (got - want).abs() <= 1e-12 * want,
                "sector {n}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn infinite_temperature_weights_are_exact_binomials() {
        let spec = BathSpec::ring(10, 1.0, 0.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        assert_eq!(w.scale, 0.0);
        for n in 0..=10 {
            assert_eq!(w.weights[n], binomial(10, n));
        }
    }

    #[test]
    fn sector_symmetry_holds_on_an_irregular_graph() {
        let bonds = vec![(0, 1, 0.7), (1, 2, 0.3), (2, 3, 1.1), (0, 3, 0.2), (1, 3, 0.5)];
        let spec = BathSpec::new(4, bonds, 1.3, 0.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        let max = w.weights.iter().cloned().fold(0.0, f64::max);
        for n in 0..=4 {
            assert!((w.weights[n] - w.weights[4 - n]).abs() <= 1e-14 * max);
        }
        assert!(w.weights[0] > 0.0);
    }

    #[test]
    fn rejects_malformed_specs() {
        assert!(matches!(
            BathSpec::new(0, vec![], 1.0, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            BathSpec::new(3, vec![(0, 3, 1.0)], 1.0, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            BathSpec::new(3, vec![(1, 1, 1.0)], 1.0, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            BathSpec::new(3, vec![(0, 1, 1.0), (1, 0, 0.5)], 1.0, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            BathSpec::new(3, vec![(0, 1, f64::NAN)], 1.0, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            BathSpec::new(3, vec![], f64::INFINITY, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(BathSpec::ring(2, 1.0, 1.0), Err(Error::TopologyUnsupported(_))));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let spec = BathSpec::new(25, vec![], 1.0, 0.0).unwrap();
        assert!(matches!(
            enumerate_sector_weights(&spec),
            Err(Error::SizeExceeded { n_sites: 25, cap: 24 })
        ));
        assert!(enumerate_sector_weights_capped(&spec, 25).is_ok());
    }

    #[test]
    fn corrupted_weights_are_rejected_by_name() {
        let err = SectorWeights::new(2, vec![1.0, 2.0, 1.5], 0.0).unwrap_err();
        assert!(err.to_string().contains("spin-flip symmetry"));
        let err = SectorWeights::new(2, vec![0.0, 2.0, 0.0], 0.0).unwrap_err();
        assert!(err.to_string().contains("all-up sector"));
        let err = SectorWeights::new(2, vec![1.0, -2.0, 1.0], 0.0).unwrap_err();
        assert!(err.to_string().contains("non-negative"));
        let err = SectorWeights::new(2, vec![1.0, 2.0], 0.0).unwrap_err();
        assert!(err.to_string().contains("expected 3 entries"));
    }

    #[test]
    fn ring_partition_closed_form_at_zero_field() {
        // Z = e^{10 bJ/4} [(1 + e^{-bJ/2})^10 + (1 - e^{-bJ/2})^10].
        let (beta, j) = (1.0, 1.0);
        let q = (-beta * j / 2.0f64).exp();
        let want = (10.0 * beta * j / 4.0).exp() * ((1.0 + q).powi(10) + (1.0 - q).powi(10));

        let tm = transfer_matrix_partition(10, j, beta, Complex64::new(0.0, 0.0)).unwrap();
        assert!((tm.re - want).abs() <= 1e-12 * want);
        assert!(tm.im.abs() <= 1e-12 * want);

        let spec = BathSpec::ring(10, j, beta).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        let z = partition_function(&w, beta, Complex64::new(0.0, 0.0));
        assert!((z.re - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn transfer_matrix_agrees_with_enumeration_at_complex_field() {
        let (beta, j) = (0.7, 1.0);
        let h = Complex64::new(0.3, 0.2);
        let spec = BathSpec::ring(6, j, beta).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        let a = transfer_matrix_partition(6, j, beta, h).unwrap();
        let b = partition_function(&w, beta, h);
        assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn transfer_matrix_rejects_degenerate_rings() {
        for n in [0, 1, 2] {
            assert!(transfer_matrix_partition(n, 1.0, 1.0, Complex64::new(0.0, 0.0)).is_err());
        }
    }

    #[test]
    fn infinite_temperature_partition_is_a_power_of_two() {
        let spec = BathSpec::ring(8, 1.0, 0.0).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        let z = partition_function(&w, 0.0, Complex64::new(0.0, 0.0));
        assert_eq!(z.re, 256.0);
        let tm = transfer_matrix_partition(8, 1.0, 0.0, Complex64::new(0.0, 0.0)).unwrap();
        assert!((tm.re - 256.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_and_ring_shortcut() {
        let spec =
            BathSpec::from_json(r#"{"n_sites": 4, "topology": "ring", "coupling": 0.5, "beta": 1.25}"#)
                .unwrap();
        assert_eq!(spec.bonds.len(), 4);
        assert_eq!(spec.beta, 1.25);
        assert!(spec.is_ferromagnetic());

        let spec2 = BathSpec::from_json(
            r#"{"n_sites": 3, "bonds": [[0, 1, 1.0], [1, 2, -0.25]], "field_h": 0.1, "beta": 2.0}"#,
        )
        .unwrap();
        assert_eq!(spec2.bonds[1], (1, 2, -0.25));
        assert!(!spec2.is_ferromagnetic());

        assert!(matches!(
            BathSpec::from_json(r#"{"n_sites": 4, "topology": "star", "beta": 1.0}"#),
            Err(Error::TopologyUnsupported(_))
        ));
        assert!(BathSpec::from_json(r#"{"n_sites": 4, "topology": "ring"}"#).is_err());
    }

    #[test]
    fn weight_sum_matches_direct_configuration_sum() {
        // Same numbers, independent grouping: direct sweep without sector
        // binning against the binned total.
        let spec = BathSpec::ring(9, 0.8, 1.7).unwrap();
        let w = enumerate_sector_weights(&spec).unwrap();
        let mut direct = 0.0;
        for c in 0u64..(1 << 9) {
            let mut e = 0.0;
            for &(i, j, j_ij) in &spec.bonds {
                let aligned = ((c >> i) ^ (c >> j)) & 1 == 0;
                e += if aligned { -0.25 * j_ij } else { 0.25 * j_ij };
            }
            direct += (-spec.beta * e - w.scale).exp();
        }
        assert!((w.total() - direct).abs() <= 1e-12 * direct);
    }
}
