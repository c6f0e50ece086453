//! Evolutions and channels on the symmetric subspace: double-quantum
//! Hamiltonian, z-rotations, dephasing, the pulse-width-jitter dissipator,
//! and the phase-scan readout pipeline.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::states::{thermal_state, CoherenceSpectrum};
use crate::symbasis::{Label, SuperOperatorMatrix, SymOperator, SymmetricBasis};
use crate::{C64, Error, Result};

/// Dissipator constant of the eight-pulse cycle, for κ = c δ² τ_c with δ in
/// units of τ_{π/2}: c = (π²/96) Σ_k γ_k² = 25π²/6912 from the per-pulse
/// error responses γ = (4.5, 2.5, 3.5, 1.5, −2.5, −0.5, −1.5, 0.5)/12.
/// `oracle::cycle_dissipator_constant` re-derives this numerically.
pub const DQ_CYCLE_DISSIPATOR_C: f64 = 25.0 * PI * PI / 6912.0;

/// How the reversal block handles L1 ≠ L2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunPlan {
    /// L2 jittered reverse loops followed by L1−L2 clean reverse loops, so
    /// the echo is always length-matched.
    #[default]
    EchoMatched,
    /// Only the L2 jittered reverse loops; residual forward evolution is
    /// left unreversed.
    PartialReversal,
}

/// Parameters of one evolution/readout run.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EvolutionConfig {
    /// Uniform double-quantum coupling d, rad/s. The jitter operator V uses
    /// the toggled-frame coupling d' = 4d of the same cycle.
    pub d: f64,
    /// Cycle time τ_c in seconds; one loop evolves for τ_c.
    pub tau_c: f64,
    /// Preparation loops.
    pub l1: u32,
    /// Jittered reversal loops.
    pub l2: u32,
    /// Pulse-width jitter amplitude δ, in units of τ_{π/2}.
    pub delta: f64,
    /// Dissipator constant c in κ = c δ² τ_c.
    #[serde(default = "default_dissipator_c")]
    pub dissipator_c: f64,
    /// Integrator steps per loop.
    #[serde(default = "default_steps_per_loop")]
    pub steps_per_loop: usize,
    #[serde(default)]
    pub run_plan: RunPlan,
}

fn default_dissipator_c() -> f64 {
    DQ_CYCLE_DISSIPATOR_C
}

fn default_steps_per_loop() -> usize {
    32
}

impl EvolutionConfig {
    pub fn new(d: f64, tau_c: f64, l1: u32, l2: u32, delta: f64) -> Self {
        EvolutionConfig {
            d,
            tau_c,
            l1,
            l2,
            delta,
            dissipator_c: default_dissipator_c(),
            steps_per_loop: default_steps_per_loop(),
            run_plan: RunPlan::default(),
        }
    }

    /// Dissipator rate κ = c δ² τ_c.
    pub fn kappa(&self) -> f64 {
        self.dissipator_c * self.delta * self.delta * self.tau_c
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_c <= 0.0 {
            return Err(Error::ParameterError("tau_c must be positive".into()));
        }
        if self.delta < 0.0 {
            return Err(Error::ParameterError("delta must be ≥ 0".into()));
        }
        if self.kappa() < 0.0 {
            return Err(Error::ParameterError("kappa must be ≥ 0".into()));
        }
        if self.steps_per_loop < 1 {
            return Err(Error::ParameterError("steps_per_loop must be ≥ 1".into()));
        }
        if self.run_plan == RunPlan::EchoMatched && self.l2 > self.l1 {
            return Err(Error::ParameterError(
                "echo-matched plan needs l2 ≤ l1".into(),
            ));
        }
        Ok(())
    }
}

/// Double-quantum Hamiltonian −(d/2) Σ_{i≠j} (I⁺_iI⁺_j + I⁻_iI⁻_j) with
/// uniform coupling; carries coherence orders ±2 only.
pub fn dq_hamiltonian(basis: &Arc<SymmetricBasis>, d: f64) -> SymOperator {
    let n = basis.n_spins();
    let mut op = SymOperator::zero(basis);
    if n < 2 {
        return op;
    }
    for j in 0..=(n - 2) {
        for l in [Label::new(j + 2, j, 2), Label::new(j, j + 2, 2)] {
            let i = basis.index_of(l).unwrap();
            op.coeffs_mut()[i] = C64::new(-d * basis.norm(i), 0.0);
        }
    }
    op
}

/// Cross-coupling operator V = (3/2) Σ_{i<j} d' (I^y_iI^z_j + I^z_iI^y_j)
/// with uniform d'; Hermitian and traceless, coherence orders ±1.
pub fn v_operator(basis: &Arc<SymmetricBasis>, d_prime: f64) -> SymOperator {
    let n = basis.n_spins();
    let mut op = SymOperator::zero(basis);
    if n < 2 {
        return op;
    }
    for j in 0..n {
        // amplitude on each elementary term of type (#σ⁺=1, #|0⟩⟨0|=j)
        let w = 0.25 * (2.0 * j as f64 - n as f64 + 1.0) * 1.5 * d_prime;
        let lp = Label::new(j + 1, j, 1);
        let i = basis.index_of(lp).unwrap();
        op.coeffs_mut()[i] = C64::new(0.0, w * basis.norm(i));
        let lm = Label::new(j, j + 1, 1);
        let i = basis.index_of(lm).unwrap();
        op.coeffs_mut()[i] = C64::new(0.0, -w * basis.norm(i));
    }
    op
}

/// Collective z-rotation: the (m,n,h) coefficient picks up e^{−iφ(m−n)}.
pub fn rotate_z(rho: &SymOperator, phi: f64) -> SymOperator {
    let basis = rho.basis().clone();
    let mut out = rho.clone();
    for (i, &l) in basis.labels().iter().enumerate() {
        let q = l.order() as f64;
        out.coeffs_mut()[i] *= C64::new(0.0, -phi * q).exp();
    }
    out
}

/// Global dephasing of strength p: the (m,n,h) coefficient scales by
/// (1−p)^{h/2}. Trace preserving and Hermiticity preserving.
pub fn dephase(rho: &SymOperator, p: f64) -> Result<SymOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterError(format!(
            "dephasing strength {p} outside [0, 1]"
        )));
    }
    let basis = rho.basis().clone();
    let root = (1.0 - p).sqrt();
    let mut out = rho.clone();
    for (i, &l) in basis.labels().iter().enumerate() {
        out.coeffs_mut()[i] *= C64::new(root.powi(l.h as i32), 0.0);
    }
    Ok(out)
}

/// Result of a master-equation propagation.
pub struct Propagation {
    pub state: SymOperator,
    /// |Tr ρ(t) − Tr ρ(0)| after integration.
    pub trace_drift: f64,
    /// HS-norm drift; only meaningful for κ = 0.
    pub norm_drift: f64,
    pub steps_used: usize,
    /// Set when the step-halving loop gave up before reaching tolerance.
    pub accuracy_warning: bool,
}

/// Precomputed generator of dρ/dt = −i[H,ρ] − κ[V,[V,ρ]] acting on
/// coefficient vectors. Immutable; safe to share across scan points.
pub struct Liouvillian {
    comm_h: SuperOperatorMatrix,
    comm_v: Option<SuperOperatorMatrix>,
    kappa: f64,
    dim: usize,
}

impl Liouvillian {
    pub fn new(h: &SymOperator, v: &SymOperator, kappa: f64) -> Self {
        Liouvillian {
            comm_h: h.commutator_superop(),
            comm_v: if kappa > 0.0 {
                Some(v.commutator_superop())
            } else {
                None
            },
            kappa,
            dim: h.basis().len(),
        }
    }

    fn rhs(&self, y: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        self.comm_h.apply(y, out);
        let mi = C64::new(0.0, -1.0);
        for v in out.iter_mut() {
            *v *= mi;
        }
        if let Some(cv) = &self.comm_v {
            cv.apply(y, scratch);
            let tmp: Vec<C64> = scratch.to_vec();
            cv.apply(&tmp, scratch);
            let k = C64::new(self.kappa, 0.0);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o -= k * s;
            }
        }
    }

    /// Classic fixed-step fourth-order integration over time t.
    pub fn integrate(&self, y0: &[C64], t: f64, steps: usize) -> Vec<C64> {
        let dt = t / steps as f64;
        let n = self.dim;
        let mut y = y0.to_vec();
        let mut k1 = vec![C64::new(0.0, 0.0); n];
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        let mut tmp = k1.clone();
        let mut scratch = k1.clone();
        let half = C64::new(dt / 2.0, 0.0);
        let full = C64::new(dt, 0.0);
        for _ in 0..steps {
            self.rhs(&y, &mut k1, &mut scratch);
            for i in 0..n {
                tmp[i] = y[i] + half * k1[i];
            }
            self.rhs(&tmp, &mut k2, &mut scratch);
            for i in 0..n {
                tmp[i] = y[i] + half * k2[i];
            }
            self.rhs(&tmp, &mut k3, &mut scratch);
            for i in 0..n {
                tmp[i] = y[i] + full * k3[i];
            }
            self.rhs(&tmp, &mut k4, &mut scratch);
            let w = dt / 6.0;
            for i in 0..n {
                y[i] += C64::new(w, 0.0) * (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]);
            }
        }
        y
    }
}

const DRIFT_TOL: f64 = 1e-9;
const MAX_HALVINGS: u32 = 12;

/// Integrates dρ/dt = −i[H,ρ] − κ[V,[V,ρ]] for time t, starting from
/// `steps` fixed steps and halving the step until the trace (and, for
/// κ = 0, HS-norm) drift passes 1e−9; gives up with a warning after 12
/// halvings.
pub fn propagate(
    rho0: &SymOperator,
    h: &SymOperator,
    v: &SymOperator,
    kappa: f64,
    t: f64,
    steps: usize,
) -> Result<Propagation> {
    if kappa < 0.0 {
        return Err(Error::ParameterError("kappa must be ≥ 0".into()));
    }
    if t < 0.0 {
        return Err(Error::ParameterError("time must be ≥ 0".into()));
    }
    if steps < 1 {
        return Err(Error::ParameterError("steps must be ≥ 1".into()));
    }
    if t == 0.0 {
        return Ok(Propagation {
            state: rho0.clone(),
            trace_drift: 0.0,
            norm_drift: 0.0,
            steps_used: 0,
            accuracy_warning: false,
        });
    }
    let gen = Liouvillian::new(h, v, kappa);
    propagate_with(&gen, rho0, t, steps)
}

/// Same as [`propagate`] but reusing a prebuilt [`Liouvillian`].
pub fn propagate_with(
    gen: &Liouvillian,
    rho0: &SymOperator,
    t: f64,
    steps: usize,
) -> Result<Propagation> {
    let basis = rho0.basis().clone();
    let tr0 = rho0.trace();
    let n0 = rho0.hs_norm();
    let mut steps = steps.max(1);
    let mut halvings = 0;
    loop {
        let y = gen.integrate(rho0.coeffs(), t, steps);
        let state = SymOperator::from_coeffs(&basis, y)?;
        let trace_drift = (state.trace() - tr0).norm();
        let norm_drift = (state.hs_norm() - n0).abs();
        let tr_ok = trace_drift <= DRIFT_TOL * tr0.norm().max(1.0);
        let norm_ok = gen.kappa > 0.0 || norm_drift <= DRIFT_TOL * n0.max(1.0);
        if tr_ok && norm_ok {
            return Ok(Propagation {
                state,
                trace_drift,
                norm_drift,
                steps_used: steps,
                accuracy_warning: false,
            });
        }
        if halvings >= MAX_HALVINGS {
            return Ok(Propagation {
                state,
                trace_drift,
                norm_drift,
                steps_used: steps,
                accuracy_warning: true,
            });
        }
        steps *= 2;
        halvings += 1;
    }
}

/// Dimension cap for the dense matrix-exponential path.
pub const EXPM_DIM_CAP: usize = 4000;

/// Propagation by exponentiating the dense Liouvillian; available for
/// basis dimensions up to 4000. An independent route used to cross-check
/// the fixed-step integrator.
pub fn propagate_expm(
    rho0: &SymOperator,
    h: &SymOperator,
    v: &SymOperator,
    kappa: f64,
    t: f64,
) -> Result<SymOperator> {
    let basis = rho0.basis().clone();
    let dim = basis.len();
    if dim > EXPM_DIM_CAP {
        return Err(Error::ParameterError(format!(
            "dimension {dim} exceeds the matrix-exponential cap {EXPM_DIM_CAP}"
        )));
    }
    let mh = h.commutator_superop().to_dense();
    let mi = C64::new(0.0, -1.0);
    let mut l = mh.map(|x| x * mi);
    if kappa > 0.0 {
        let mv = v.commutator_superop().to_dense();
        l -= (&mv * &mv).map(|x| x * C64::new(kappa, 0.0));
    }
    let prop = crate::linalg::expm(&l.map(|x| x * C64::new(t, 0.0)));
    let y = nalgebra::DVector::from_column_slice(rho0.coeffs());
    let out = prop * y;
    SymOperator::from_coeffs(&basis, out.as_slice().to_vec())
}

fn check_grid(phis: &[f64]) -> Result<()> {
    if phis.is_empty() {
        return Err(Error::GridError("empty phase grid".into()));
    }
    let eps = 1e-12;
    for w in phis.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::GridError("grid must be strictly ascending".into()));
        }
    }
    if phis[0] < -eps || *phis.last().unwrap() > PI + eps {
        return Err(Error::GridError("grid must lie inside [0, π]".into()));
    }
    Ok(())
}

/// Uniform grid of `points` phases covering [0, π] inclusive.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| PI * k as f64 / (points as f64 - 1.0))
        .collect()
}

/// Phase-scan readout: prepare with L1 forward loops, phase-label with a
/// z-rotation by φ, reverse with L2 loops under −H (with the jitter
/// dissipator when δ > 0, plus L1−L2 clean reverse loops in the
/// echo-matched plan), undo the rotation and detect along the normalized
/// collective I^z. Returns S(φ) for every grid point.
pub fn phase_scan(
    seed: &SymOperator,
    config: &EvolutionConfig,
    phis: &[f64],
) -> Result<Vec<f64>> {
    config.validate()?;
    check_grid(phis)?;
    let basis = seed.basis().clone();
    let h = dq_hamiltonian(&basis, config.d);
    let minus_h = h.scale(C64::new(-1.0, 0.0));
    let v = v_operator(&basis, 4.0 * config.d);
    let kappa = config.kappa();

    let observable = thermal_state(&basis);

    // Preparation is shared by all scan points.
    let prep = if config.l1 > 0 {
        let gen = Liouvillian::new(&h, &v, 0.0);
        propagate_with(
            &gen,
            seed,
            config.l1 as f64 * config.tau_c,
            config.steps_per_loop * config.l1 as usize,
        )?
        .state
    } else {
        seed.clone()
    };

    let reverse_jit = Liouvillian::new(&minus_h, &v, kappa);
    let reverse_clean = Liouvillian::new(&minus_h, &v, 0.0);
    let makeup_loops = match config.run_plan {
        RunPlan::EchoMatched => config.l1 - config.l2,
        RunPlan::PartialReversal => 0,
    };

    let signals: Result<Vec<f64>> = phis
        .par_iter()
        .map(|&phi| {
            let mut rho = rotate_z(&prep, phi);
            if config.l2 > 0 {
                rho = propagate_with(
                    &reverse_jit,
                    &rho,
                    config.l2 as f64 * config.tau_c,
                    config.steps_per_loop * config.l2 as usize,
                )?
                .state;
            }
            if makeup_loops > 0 {
                rho = propagate_with(
                    &reverse_clean,
                    &rho,
                    makeup_loops as f64 * config.tau_c,
                    config.steps_per_loop * makeup_loops as usize,
                )?
                .state;
            }
            let rho = rotate_z(&rho, -phi);
            let s = observable.hs_inner(&rho)?;
            debug_assert!(s.im.abs() < 1e-10, "signal has imaginary part {}", s.im);
            Ok(s.re)
        })
        .collect();
    signals
}

/// Recovers the coherence-order distribution from phase-scan signals by a
/// discrete Fourier transform.
///
/// The grid must be uniform, start at 0 and cover one full π period —
/// either endpoint-inclusive ([0, π] in M+1 points, the duplicate endpoint
/// is dropped) or endpoint-exclusive. Even-order signals are π-periodic, so
/// DFT bin n reports order q = −2n (bins above M/2 fold to negative n);
/// resolvable orders satisfy |q| < M. With `suppress_zero` the signal mean
/// is subtracted before the transform and the zero-order intensity is
/// reported as 0.
pub fn spectrum_from_scan(
    phis: &[f64],
    signals: &[f64],
    suppress_zero: bool,
    max_order: Option<u32>,
) -> Result<CoherenceSpectrum> {
    if phis.len() != signals.len() {
        return Err(Error::GridError("grid/signal length mismatch".into()));
    }
    if phis.len() < 2 {
        return Err(Error::ResolutionError("need at least 2 samples".into()));
    }
    check_grid(phis)?;
    if phis[0].abs() > 1e-9 {
        return Err(Error::GridError("grid must start at 0".into()));
    }
    let dphi = (phis[phis.len() - 1] - phis[0]) / (phis.len() - 1) as f64;
    for (k, &p) in phis.iter().enumerate() {
        if (p - k as f64 * dphi).abs() > 1e-9 {
            return Err(Error::GridError("grid must be uniform".into()));
        }
    }
    // One full period: either the last point duplicates φ = 0 + π or the
    // grid stops one step short of π.
    let m = if ((phis.len() - 1) as f64 * dphi - PI).abs() < 1e-9 {
        phis.len() - 1
    } else if (phis.len() as f64 * dphi - PI).abs() < 1e-9 {
        phis.len()
    } else {
        return Err(Error::GridError(
            "grid must cover one full period of length π".into(),
        ));
    };

    let resolvable = 2 * ((m - 1) / 2) as u32;
    if let Some(mo) = max_order {
        if mo > resolvable {
            return Err(Error::ResolutionError(format!(
                "order {mo} requested but only |q| ≤ {resolvable} resolvable from {m} samples"
            )));
        }
    }

    let mean = signals[..m].iter().sum::<f64>() / m as f64;
    let mut buf: Vec<C64> = signals[..m]
        .iter()
        .map(|&s| C64::new(if suppress_zero { s - mean } else { s }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let mut map = std::collections::BTreeMap::new();
    let peak = buf.iter().map(|c| c.re.abs()).fold(0.0, f64::max) / m as f64;
    for (n, c) in buf.iter().enumerate() {
        if m % 2 == 0 && n == m / 2 {
            continue; // ambiguous Nyquist bin
        }
        let signed = if n <= m / 2 { n as i64 } else { n as i64 - m as i64 };
        let q = -2 * signed;
        if let Some(mo) = max_order {
            if q.unsigned_abs() > mo as u64 {
                continue;
            }
        }
        let v = (c.re / m as f64).max(0.0);
        if v > 1e-14 * peak.max(1e-300) {
            map.insert(q, v);
        }
    }
    if suppress_zero {
        map.insert(0, 0.0);
    }
    let mut spec = CoherenceSpectrum::from_map(map, resolvable);
    if suppress_zero {
        // mean subtraction only moves bin 0
    }
    let _ = &mut spec;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::states::{coherence_spectrum, ghz_state};
    use crate::symbasis::basis_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_diff(a: &nalgebra::DMatrix<C64>, b: &nalgebra::DMatrix<C64>) -> f64 {
        crate::linalg::fro_norm(&(a - b))
    }

    #[test]
    fn dq_matches_exact_two_spin_matrix() {
        let b = SymmetricBasis::new(2).unwrap();
        let h = dq_hamiltonian(&b, 0.7);
        let sys = oracle::SpinSystem::uniform(2, 0.7).unwrap();
        assert!(dense_diff(&oracle::embed(&h), &oracle::dq_exact(&sys)) < 1e-13);
    }

    #[test]
    fn dq_components_have_order_two() {
        let b = SymmetricBasis::new(5).unwrap();
        let h = dq_hamiltonian(&b, 1.0);
        for (l, _) in h.support() {
            assert_eq!(l.order().abs(), 2);
        }
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn v_matches_exact_embedding() {
        for n in [2u32, 3, 4] {
            let b = SymmetricBasis::new(n).unwrap();
            let v = v_operator(&b, 1.3);
            let sys = oracle::SpinSystem::uniform(n, 1.3).unwrap();
            assert!(
                dense_diff(&oracle::embed(&v), &oracle::v_exact(&sys)) < 1e-12,
                "n = {n}"
            );
            assert!(v.is_hermitian(1e-14));
        }
    }

    #[test]
    fn v_is_traceless_against_identity() {
        let b = SymmetricBasis::new(4).unwrap();
        let v = v_operator(&b, 1.0);
        let id = SymOperator::identity(&b);
        assert!(v.hs_inner(&id).unwrap().norm() < 1e-14);
    }

    #[test]
    fn rotate_z_at_zero_is_identity_and_preserves_norm() {
        let b = SymmetricBasis::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = oracle::random_symmetric_hermitian(&b, &mut rng);
        let r0 = rotate_z(&rho, 0.0);
        assert!(rho.sub(&r0).unwrap().hs_norm() < 1e-15);
        let r = rotate_z(&rho, 1.234);
        assert!((r.hs_norm() - rho.hs_norm()).abs() < 1e-13);
    }

    #[test]
    fn rotate_z_matches_exact_conjugation() {
        let b = SymmetricBasis::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = oracle::random_symmetric_hermitian(&b, &mut rng);
        let phi = 0.83;
        let engine = oracle::embed(&rotate_z(&rho, phi));
        let exact = oracle::rotate_z_exact(&oracle::embed(&rho), phi);
        assert!(dense_diff(&engine, &exact) < 1e-12);
    }

    #[test]
    fn rotation_leaves_spectrum_invariant() {
        let b = SymmetricBasis::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = oracle::random_symmetric_hermitian(&b, &mut rng);
        let s0 = coherence_spectrum(&rho);
        let s1 = coherence_spectrum(&rotate_z(&rho, 2.2));
        for (q, v) in s0.iter() {
            assert!((v - s1.intensity(q)).abs() < 1e-13);
        }
    }

    #[test]
    fn dephase_limits_and_range() {
        let b = SymmetricBasis::new(3).unwrap();
        let g = ghz_state(&b);
        let d0 = dephase(&g, 0.0).unwrap();
        assert!(g.sub(&d0).unwrap().hs_norm() < 1e-15);
        let d1 = dephase(&g, 1.0).unwrap();
        for (l, _) in d1.support() {
            assert_eq!(l.h, 0);
        }
        assert!((d1.trace() - g.trace()).norm() < 1e-14);
        assert!(dephase(&g, -0.1).is_err());
        assert!(dephase(&g, 1.1).is_err());
    }

    #[test]
    fn dephase_agrees_with_kraus_product_channel() {
        for n in 2..=5u32 {
            let b = SymmetricBasis::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let rho = oracle::random_symmetric_density(&b, &mut rng);
            let p = 0.42;
            let engine = oracle::embed(&dephase(&rho, p).unwrap());
            let kraus = oracle::dephase_kraus(&oracle::embed(&rho), p).unwrap();
            assert!(dense_diff(&engine, &kraus) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn dephase_is_a_semigroup_in_survival() {
        let b = SymmetricBasis::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = oracle::random_symmetric_hermitian(&b, &mut rng);
        let (p1, p2) = (0.3, 0.55);
        let a = dephase(&dephase(&rho, p1).unwrap(), p2).unwrap();
        let bb = dephase(&rho, 1.0 - (1.0 - p1) * (1.0 - p2)).unwrap();
        assert!(a.sub(&bb).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn propagate_zero_time_returns_input() {
        let b = SymmetricBasis::new(3).unwrap();
        let h = dq_hamiltonian(&b, 1.0);
        let v = v_operator(&b, 4.0);
        let rho = thermal_state(&b);
        let p = propagate(&rho, &h, &v, 0.1, 0.0, 8).unwrap();
        assert!(p.state.sub(&rho).unwrap().hs_norm() < 1e-15);
        assert!(propagate(&rho, &h, &v, -0.1, 1.0, 8).is_err());
    }

    #[test]
    fn unitary_propagation_matches_oracle() {
        for n in 2..=5u32 {
            let b = SymmetricBasis::new(n).unwrap();
            let h = dq_hamiltonian(&b, 1.0);
            let v = v_operator(&b, 4.0);
            let mut rng = ChaCha8Rng::seed_from_u64(20 + n as u64);
            let rho = oracle::random_symmetric_density(&b, &mut rng);
            let t = 0.5;
            let out = propagate(&rho, &h, &v, 0.0, t, 256).unwrap();
            assert!(!out.accuracy_warning);
            let sys = oracle::SpinSystem::uniform(n, 1.0).unwrap();
            let exact = oracle::evolve_unitary(&oracle::embed(&rho), &oracle::dq_exact(&sys), t);
            let dist = crate::linalg::trace_distance(&oracle::embed(&out.state), &exact);
            assert!(dist < 1e-8, "n = {n}: {dist}");
        }
    }

    #[test]
    fn dissipative_propagation_matches_liouville_exponential() {
        for n in 2..=4u32 {
            let b = SymmetricBasis::new(n).unwrap();
            let h = dq_hamiltonian(&b, 1.0);
            let v = v_operator(&b, 4.0);
            let mut rng = ChaCha8Rng::seed_from_u64(40 + n as u64);
            let rho = oracle::random_symmetric_density(&b, &mut rng);
            let (kappa, t) = (0.02, 0.4);
            let rk = propagate(&rho, &h, &v, kappa, t, 256).unwrap();
            // engine dense-exponential route
            let em = propagate_expm(&rho, &h, &v, kappa, t).unwrap();
            assert!(rk.state.sub(&em).unwrap().hs_norm() < 1e-8);
            // oracle Hilbert-space Liouvillian route
            let sys = oracle::SpinSystem::uniform(n, 1.0).unwrap();
            let exact = oracle::evolve_master(
                &oracle::embed(&rho),
                &oracle::dq_exact(&sys),
                &oracle::v_exact(&oracle::SpinSystem::uniform(n, 4.0).unwrap()),
                kappa,
                t,
            );
            let dist = crate::linalg::trace_distance(&oracle::embed(&rk.state), &exact);
            assert!(dist < 1e-8, "n = {n}: {dist}");
        }
    }

    #[test]
    fn dissipative_flow_contracts_hs_norm() {
        let b = SymmetricBasis::new(4).unwrap();
        let h = dq_hamiltonian(&b, 1.0);
        let v = v_operator(&b, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rho = oracle::random_symmetric_density(&b, &mut rng);
        let mut prev = rho.hs_norm();
        for k in 1..=4 {
            let out = propagate(&rho, &h, &v, 0.05, 0.2 * k as f64, 64).unwrap();
            let norm = out.state.hs_norm();
            assert!(norm <= prev + 1e-10);
            prev = norm;
        }
    }

    #[test]
    fn even_order_selection_rule_holds() {
        let b = SymmetricBasis::new(6).unwrap();
        let h = dq_hamiltonian(&b, 1.0);
        let v = v_operator(&b, 4.0);
        let rho = thermal_state(&b);
        let out = propagate(&rho, &h, &v, 0.0, 0.8, 128).unwrap();
        let spec = coherence_spectrum(&out.state);
        let total = spec.total();
        for (q, val) in spec.iter() {
            if q % 2 != 0 {
                assert!(val < 1e-9 * total, "odd order {q} populated: {val}");
            }
        }
    }

    #[test]
    fn scan_grid_validation() {
        let b = SymmetricBasis::new(2).unwrap();
        let cfg = EvolutionConfig::new(1.0, 0.1, 1, 1, 0.0);
        let seed = thermal_state(&b);
        assert!(phase_scan(&seed, &cfg, &[]).is_err());
        assert!(phase_scan(&seed, &cfg, &[0.0, 3.5]).is_err());
        assert!(phase_scan(&seed, &cfg, &[0.2, 0.1]).is_err());
        let mut bad = EvolutionConfig::new(1.0, 0.1, 1, 2, 0.0);
        bad.run_plan = RunPlan::EchoMatched;
        assert!(phase_scan(&seed, &bad, &[0.0, 0.1]).is_err());
    }

    #[test]
    fn single_coherence_content_gives_cosine_signal() {
        // At N = 2 the prepared state carries a single even coherence
        // sector (q = ±2), so the scan reduces to S(φ) = I₀ + 2I₂cos(2φ).
        let b = SymmetricBasis::new(2).unwrap();
        let seed = thermal_state(&b);
        let cfg = EvolutionConfig::new(1.0, 0.5, 1, 1, 0.0);
        let phis = phase_grid(61);
        let signals = phase_scan(&seed, &cfg, &phis).unwrap();
        // mean over one exact period (the last point duplicates φ = 0)
        let m = signals.len() - 1;
        let mean = signals[..m].iter().sum::<f64>() / m as f64;
        let centered: Vec<f64> = signals.iter().map(|s| s - mean).collect();
        let amp = centered[0];
        assert!(amp.abs() > 1e-3, "no coherence developed");
        for (k, &phi) in phis.iter().enumerate() {
            let want = amp * (2.0 * phi).cos();
            assert!(
                (centered[k] - want).abs() < 1e-6 * amp.abs(),
                "phi = {phi}: {} vs {want}",
                centered[k]
            );
        }
    }

    #[test]
    fn perfect_echo_recovers_full_signal_at_zero_phase() {
        let b = SymmetricBasis::new(4).unwrap();
        let seed = thermal_state(&b);
        let cfg = EvolutionConfig::new(1.0, 0.3, 3, 3, 0.0);
        let signals = phase_scan(&seed, &cfg, &[0.0, 0.5]).unwrap();
        // At φ = 0 the reversal exactly undoes preparation: S = ⟨I_z, I_z⟩ = 1.
        assert!((signals[0] - 1.0).abs() < 1e-7, "{}", signals[0]);
        // The scan is genuinely φ-dependent once coherences develop.
        assert!((signals[1] - signals[0]).abs() > 1e-4);
    }

    #[test]
    fn scan_and_direct_spectra_agree() {
        let b = SymmetricBasis::new(4).unwrap();
        let seed = thermal_state(&b);
        let cfg = EvolutionConfig::new(1.0, 0.4, 2, 2, 0.0);
        let phis = phase_grid(41);
        let signals = phase_scan(&seed, &cfg, &phis).unwrap();
        let spec = spectrum_from_scan(&phis, &signals, false, None).unwrap();

        let h = dq_hamiltonian(&b, 1.0);
        let v = v_operator(&b, 4.0);
        let prep = propagate(&seed, &h, &v, 0.0, 2.0 * 0.4, 256).unwrap().state;
        let direct = coherence_spectrum(&prep);
        for q in -4..=4i64 {
            assert!(
                (spec.intensity(q) - direct.intensity(q)).abs() < 1e-8,
                "q = {q}: scan {} direct {}",
                spec.intensity(q),
                direct.intensity(q)
            );
        }
    }

    #[test]
    fn constant_signal_with_suppression_is_empty() {
        let phis = phase_grid(41);
        let signals = vec![0.7; 41];
        let spec = spectrum_from_scan(&phis, &signals, true, None).unwrap();
        assert!(spec.intensity(0) == 0.0);
        assert!(spec.total() < 1e-12);
    }

    #[test]
    fn pure_tone_lands_on_its_order() {
        let phis = phase_grid(181);
        let signals: Vec<f64> = phis.iter().map(|&p| (4.0 * p).cos()).collect();
        let spec = spectrum_from_scan(&phis, &signals, false, None).unwrap();
        assert!((spec.intensity(4) - 0.5).abs() < 1e-12);
        assert!((spec.intensity(-4) - 0.5).abs() < 1e-12);
        assert!(spec.intensity(2) < 1e-12);
    }

    #[test]
    fn suppression_only_moves_the_zero_bin() {
        let phis = phase_grid(91);
        let signals: Vec<f64> = phis.iter().map(|&p| 0.3 + (2.0 * p).cos()).collect();
        let raw = spectrum_from_scan(&phis, &signals, false, None).unwrap();
        let sup = spectrum_from_scan(&phis, &signals, true, None).unwrap();
        assert_eq!(sup.intensity(0), 0.0);
        assert!((raw.intensity(0) - 0.3).abs() < 1e-12);
        for q in [-2i64, 2] {
            assert!((raw.intensity(q) - sup.intensity(q)).abs() < 1e-14);
        }
    }

    #[test]
    fn scan_resolution_limits() {
        let phis = phase_grid(5);
        let signals = vec![0.0; 5];
        assert!(spectrum_from_scan(&phis, &signals, false, Some(40)).is_err());
        assert!(spectrum_from_scan(&phis[..1], &signals[..1], false, None).is_err());
        // non-uniform grid
        let bad = [0.0, 0.1, 0.3, 0.9, PI];
        assert!(spectrum_from_scan(&bad, &signals, false, None).is_err());
        // uniform but not a full period
        let partial: Vec<f64> = (0..10).map(|k| k as f64 * 0.05).collect();
        assert!(spectrum_from_scan(&partial, &vec![0.0; 10], false, None).is_err());
    }

    #[test]
    fn dissipator_constant_agrees_with_cycle_analysis() {
        let seq = oracle::eight_pulse_cycle(1.0, 0.05).unwrap();
        let c = oracle::cycle_dissipator_constant(&seq);
        assert!((c - DQ_CYCLE_DISSIPATOR_C).abs() < 1e-9);
    }
}
