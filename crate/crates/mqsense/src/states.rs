//! Model cluster states and coherence-order spectra.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use crate::symbasis::{Label, SymOperator, SymmetricBasis};
use crate::{C64, Error, Result};

/// How off-diagonal coherence weight is spread across sectors when building
/// a cluster state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Every supported even sector carries the same total intensity.
    Equal,
    /// Sector q carries intensity ∝ exp(−q²/(2w²)).
    Gaussian,
}

/// Recipe for a model correlated-cluster density operator.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ClusterSpec {
    pub n_spins: u32,
    /// Largest populated coherence order; even.
    pub co_max: u32,
    pub weight_mode: WeightMode,
    /// Gaussian intensity width; defaults to n_spins/3.5.
    #[serde(default)]
    pub gaussian_width: Option<f64>,
    /// Extra admixture of the maximally mixed state in [0, 1]. 0 keeps the
    /// largest coherence content the positivity bound allows; 1 is fully
    /// mixed.
    #[serde(default)]
    pub mixing: f64,
}

impl ClusterSpec {
    pub fn new(n_spins: u32, co_max: u32, weight_mode: WeightMode) -> Self {
        ClusterSpec {
            n_spins,
            co_max,
            weight_mode,
            gaussian_width: None,
            mixing: 0.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.gaussian_width.unwrap_or(self.n_spins as f64 / 3.5)
    }

    fn validate(&self) -> Result<()> {
        if self.co_max % 2 != 0 {
            return Err(Error::SpecError(format!(
                "co_max = {} must be even",
                self.co_max
            )));
        }
        if self.co_max > self.n_spins {
            return Err(Error::SpecError(format!(
                "co_max = {} exceeds n_spins = {}",
                self.co_max, self.n_spins
            )));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::SpecError("mixing must lie in [0, 1]".into()));
        }
        if self.width() <= 0.0 {
            return Err(Error::SpecError("gaussian width must be positive".into()));
        }
        Ok(())
    }
}

/// Map from coherence order q to non-negative intensity.
#[derive(Clone, Debug)]
pub struct CoherenceSpectrum {
    intensities: BTreeMap<i64, f64>,
    n_spins: u32,
    normalized: bool,
}

impl CoherenceSpectrum {
    pub fn from_map(intensities: BTreeMap<i64, f64>, n_spins: u32) -> Self {
        CoherenceSpectrum {
            intensities,
            n_spins,
            normalized: false,
        }
    }

    pub fn intensity(&self, q: i64) -> f64 {
        self.intensities.get(&q).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.intensities.iter().map(|(&q, &v)| (q, v))
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Total intensity over all orders.
    pub fn total(&self) -> f64 {
        self.intensities.values().sum()
    }

    pub fn max_order(&self) -> i64 {
        self.intensities
            .keys()
            .map(|q| q.abs())
            .max()
            .unwrap_or(0)
    }

    /// Rescales so the intensities over even non-negative orders sum to 1.
    pub fn normalize_even_nonneg(&self) -> Result<CoherenceSpectrum> {
        let sum: f64 = self
            .intensities
            .iter()
            .filter(|(&q, _)| q >= 0 && q % 2 == 0)
            .map(|(_, &v)| v)
            .sum();
        if sum <= 0.0 {
            return Err(Error::InputError(
                "spectrum has no even non-negative weight to normalize".into(),
            ));
        }
        let mut out = self.clone();
        for v in out.intensities.values_mut() {
            *v /= sum;
        }
        out.normalized = true;
        Ok(out)
    }

    /// CSV with columns `q,intensity`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "q,intensity")?;
        for (q, v) in self.iter() {
            writeln!(w, "{},{:.16e}", q, v)?;
        }
        Ok(())
    }
}

/// Coherence-order content of an operator: intensities(q) = Σ |coeff|² over
/// labels with m − n = q. The total equals the squared HS norm.
pub fn coherence_spectrum(rho: &SymOperator) -> CoherenceSpectrum {
    let basis = rho.basis();
    let mut map = BTreeMap::new();
    for (i, &l) in basis.labels().iter().enumerate() {
        let w = rho.coeffs()[i].norm_sqr();
        if w > 0.0 {
            *map.entry(l.order()).or_insert(0.0) += w;
        }
    }
    CoherenceSpectrum::from_map(map, basis.n_spins())
}

/// The maximally mixed state 1/2^N.
pub fn maximally_mixed(basis: &Arc<SymmetricBasis>) -> SymOperator {
    let dim = (1u64 << basis.n_spins()) as f64;
    SymOperator::identity(basis).scale(C64::new(1.0 / dim, 0.0))
}

/// Traceless thermal deviation ∝ Σ_i I^z_i, scaled to unit HS norm.
pub fn thermal_state(basis: &Arc<SymmetricBasis>) -> SymOperator {
    let n = basis.n_spins();
    let mut op = SymOperator::zero(basis);
    for j in 0..=n {
        let l = Label::new(j, j, 0);
        let i = basis.index_of(l).unwrap();
        let w = (j as f64 - n as f64 / 2.0) * basis.norm(i);
        op.coeffs_mut()[i] = C64::new(w, 0.0);
    }
    let norm = op.hs_norm();
    op.scale(C64::new(1.0 / norm, 0.0))
}

/// Collective I^z = Σ_i I^z_i as a symmetric operator (unnormalized).
pub fn collective_z_operator(basis: &Arc<SymmetricBasis>) -> SymOperator {
    let n = basis.n_spins();
    let mut op = SymOperator::zero(basis);
    for j in 0..=n {
        let l = Label::new(j, j, 0);
        let i = basis.index_of(l).unwrap();
        op.coeffs_mut()[i] = C64::new((j as f64 - n as f64 / 2.0) * basis.norm(i), 0.0);
    }
    op
}

/// GHZ density matrix: ½(|0…0⟩ + |1…1⟩)(⟨0…0| + ⟨1…1|), which is
/// permutation symmetric and hence representable.
pub fn ghz_state(basis: &Arc<SymmetricBasis>) -> SymOperator {
    let n = basis.n_spins();
    let mut op = SymOperator::zero(basis);
    let half = C64::new(0.5, 0.0);
    op.set_coeff(Label::new(n, n, 0), half).unwrap();
    op.set_coeff(Label::new(0, 0, 0), half).unwrap();
    op.set_coeff(Label::new(n, 0, n), half).unwrap();
    op.set_coeff(Label::new(0, n, n), half).unwrap();
    op
}

/// Builds a Hermitian, unit-trace, positive density operator whose
/// coherence spectrum sits on even orders 0..co_max.
///
/// Off-diagonal content: within sector q the amplitude of label (m,n,h) is
/// proportional to its norm k(m,n,h) (every elementary matrix element of
/// that order enters with the same weight), rescaled so each supported
/// sector carries the requested total intensity; in gaussian mode weights
/// below 1e−12 of the maximum are dropped. Positivity holds by mixing with
/// the maximally mixed state: ρ = 1/2^N + λ·C where C is the traceless
/// unit-HS-norm coherence content and λ = (1 − mixing)/2^N, since the
/// spectral norm of C is bounded by its HS norm.
pub fn build_cluster(spec: &ClusterSpec, basis: &Arc<SymmetricBasis>) -> Result<SymOperator> {
    spec.validate()?;
    if basis.n_spins() != spec.n_spins {
        return Err(Error::BasisMismatch(basis.n_spins(), spec.n_spins));
    }
    let dim = (1u64 << spec.n_spins) as f64;

    if spec.co_max == 0 {
        return Ok(maximally_mixed(basis));
    }

    // Per-sector intensity weights over positive even orders.
    let sectors: Vec<u32> = (1..=spec.co_max / 2).map(|k| 2 * k).collect();
    let mut weights: Vec<f64> = match spec.weight_mode {
        WeightMode::Equal => vec![1.0; sectors.len()],
        WeightMode::Gaussian => {
            let w = spec.width();
            sectors
                .iter()
                .map(|&q| (-((q * q) as f64) / (2.0 * w * w)).exp())
                .collect()
        }
    };
    let max_w = weights.iter().cloned().fold(0.0, f64::max);
    for w in &mut weights {
        if *w < 1e-12 * max_w {
            *w = 0.0;
        }
    }
    let sum_w: f64 = weights.iter().sum();
    if sum_w <= 0.0 {
        return Err(Error::SpecError("all sector weights vanished".into()));
    }

    // C: unit HS norm, Hermitian, traceless, zero diagonal.
    let mut c = SymOperator::zero(basis);
    for (&q, &w) in sectors.iter().zip(weights.iter()) {
        if w == 0.0 {
            continue;
        }
        // Intensity w/(2 sum) per signed sector; shape ∝ k within the sector.
        let mut shape_sq = 0.0;
        for (i, l) in basis.labels().iter().enumerate() {
            if l.order() == q as i64 {
                shape_sq += basis.norm(i) * basis.norm(i);
            }
        }
        let scale = (w / (2.0 * sum_w) / shape_sq).sqrt();
        for (i, l) in basis.labels().iter().enumerate() {
            if l.order().unsigned_abs() == q as u64 {
                c.coeffs_mut()[i] = C64::new(scale * basis.norm(i), 0.0);
            }
        }
    }

    let lambda = (1.0 - spec.mixing) / dim;
    let rho = maximally_mixed(basis).add(&c.scale(C64::new(lambda, 0.0)))?;
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use crate::oracle;

    #[test]
    fn thermal_state_is_diagonal_with_unit_norm() {
        let b = SymmetricBasis::new(5).unwrap();
        let th = thermal_state(&b);
        assert!((th.hs_norm() - 1.0).abs() < 1e-12);
        assert!(th.trace().norm() < 1e-12);
        let spec = coherence_spectrum(&th);
        assert!((spec.intensity(0) - 1.0).abs() < 1e-12);
        assert_eq!(spec.iter().count(), 1);
    }

    #[test]
    fn thermal_state_matches_exact_collective_z() {
        let b = SymmetricBasis::new(4).unwrap();
        let th = thermal_state(&b);
        let dense = oracle::embed(&th);
        let iz = oracle::collective_z(4);
        let norm: f64 = iz.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let want = iz.map(|x| x / C64::new(norm, 0.0));
        let diff = &dense - &want;
        assert!(diff.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() < 1e-12);
    }

    #[test]
    fn ghz_spectrum_by_hs_weight() {
        let b = SymmetricBasis::new(3).unwrap();
        let g = ghz_state(&b);
        let spec = coherence_spectrum(&g);
        assert!((spec.intensity(0) - 0.5).abs() < 1e-14);
        assert!((spec.intensity(3) - 0.25).abs() < 1e-14);
        assert!((spec.intensity(-3) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn ghz_matches_bell_state_from_oracle() {
        let b = SymmetricBasis::new(2).unwrap();
        let g = ghz_state(&b);
        let dense = oracle::embed(&g);
        let want = oracle::ghz_exact(2);
        let diff = &dense - &want;
        assert!(diff.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() < 1e-13);
    }

    #[test]
    fn maximally_mixed_spectrum_is_purity() {
        let b = SymmetricBasis::new(6).unwrap();
        let mm = maximally_mixed(&b);
        let spec = coherence_spectrum(&mm);
        assert!((spec.intensity(0) - 1.0 / 64.0).abs() < 1e-15);
        assert!((spec.total() - mm.hs_norm().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn cluster_with_no_coherences_is_diagonal() {
        let b = SymmetricBasis::new(4).unwrap();
        let spec = ClusterSpec::new(4, 0, WeightMode::Equal);
        let rho = build_cluster(&spec, &b).unwrap();
        let s = coherence_spectrum(&rho);
        assert_eq!(s.iter().count(), 1);
        let sn = s.normalize_even_nonneg().unwrap();
        assert!((sn.intensity(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cluster_spec_validation() {
        let b = SymmetricBasis::new(4).unwrap();
        let mut spec = ClusterSpec::new(4, 3, WeightMode::Equal);
        assert!(build_cluster(&spec, &b).is_err()); // odd
        spec.co_max = 6;
        assert!(build_cluster(&spec, &b).is_err()); // > n_spins
        spec.co_max = 4;
        spec.mixing = 1.5;
        assert!(build_cluster(&spec, &b).is_err());
    }

    #[test]
    fn cluster_is_positive_unit_trace_even_support() {
        let b = SymmetricBasis::new(4).unwrap();
        let spec = ClusterSpec::new(4, 4, WeightMode::Equal);
        let rho = build_cluster(&spec, &b).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.is_hermitian(1e-14));
        let s = coherence_spectrum(&rho);
        let orders: Vec<i64> = s.iter().map(|(q, _)| q).collect();
        assert_eq!(orders, vec![-4, -2, 0, 2, 4]);
        // positivity by exact diagonalization
        let dense = oracle::embed(&rho);
        let (vals, _) = eigh(&dense);
        assert!(vals.iter().all(|&v| v > -1e-12), "min {}", vals.min());
        // equal sector weights
        assert!((s.intensity(2) - s.intensity(4)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_cluster_follows_the_requested_profile() {
        let b = SymmetricBasis::new(40).unwrap();
        let spec = ClusterSpec::new(40, 40, WeightMode::Gaussian);
        let rho = build_cluster(&spec, &b).unwrap();
        let s = coherence_spectrum(&rho);
        let w = 40.0 / 3.5;
        let base = s.intensity(2) / (-4.0f64 / (2.0 * w * w)).exp();
        for q in [4i64, 8, 12, 20] {
            let want = base * (-((q * q) as f64) / (2.0 * w * w)).exp();
            assert!(
                (s.intensity(q) - want).abs() < 1e-12 * base.max(1.0),
                "q={q}"
            );
        }
    }

    #[test]
    fn spectrum_symmetry_for_hermitian_states() {
        let b = SymmetricBasis::new(6).unwrap();
        let spec = ClusterSpec::new(6, 6, WeightMode::Gaussian);
        let rho = build_cluster(&spec, &b).unwrap();
        let s = coherence_spectrum(&rho);
        for (q, v) in s.iter() {
            assert!((v - s.intensity(-q)).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_even_nonneg_sums_to_one() {
        let b = SymmetricBasis::new(6).unwrap();
        let spec = ClusterSpec::new(6, 4, WeightMode::Equal);
        let rho = build_cluster(&spec, &b).unwrap();
        let s = coherence_spectrum(&rho).normalize_even_nonneg().unwrap();
        let sum: f64 = s.iter().filter(|&(q, _)| q >= 0 && q % 2 == 0).map(|(_, v)| v).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(s.is_normalized());
    }

    #[test]
    fn mixing_interpolates_to_maximally_mixed() {
        let b = SymmetricBasis::new(4).unwrap();
        let mut spec = ClusterSpec::new(4, 2, WeightMode::Equal);
        spec.mixing = 1.0;
        let rho = build_cluster(&spec, &b).unwrap();
        let mm = maximally_mixed(&b);
        assert!(rho.sub(&mm).unwrap().hs_norm() < 1e-14);
    }
}
