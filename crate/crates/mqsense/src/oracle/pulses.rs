//! Eight-pulse double-quantum cycle: exact propagation, toggling-frame
//! analysis, and Monte Carlo averaging over pulse-width jitter.
//!
//! The cycle interleaves eight π/2 pulses with free-evolution windows of
//! durations (1/2, 2, 1, 2, 1, 2, 1, 2, 1/2)·Δ, pulses 1–4 about +x and
//! 5–8 about −x. Its time-weighted toggled-frame average at zero pulse
//! error equals the double-quantum Hamiltonian built from the same
//! couplings; width errors enter, to first order, through a single
//! cross-coupling direction V, which is what turns uniform width jitter
//! into the double-commutator dissipator −κ[V,[V,ρ]] with κ = c δ² τ_c.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{eigh, hs_inner_dense};
use crate::{C64, Error, Result};

use super::{collective_x, collective_y, commutator, h_dd, v_exact, CMat, SpinSystem};

/// Pulse rotation axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl Axis {
    fn sign(self) -> f64 {
        match self {
            Axis::PlusX | Axis::PlusY => 1.0,
            Axis::MinusX | Axis::MinusY => -1.0,
        }
    }

    fn is_x(self) -> bool {
        matches!(self, Axis::PlusX | Axis::MinusX)
    }
}

/// One event of a pulse sequence.
#[derive(Clone, Copy, Debug)]
pub enum PulseEvent {
    /// Free evolution for the given duration (seconds).
    Delay(f64),
    /// A pulse about `axis` with nominal flip `angle` (radians) delivered
    /// over `width` seconds.
    Pulse { axis: Axis, angle: f64, width: f64 },
}

/// A timed pulse sequence with its cycle metadata.
#[derive(Clone, Debug)]
pub struct PulseSequence {
    pub events: Vec<PulseEvent>,
    /// Base delay Δ.
    pub delta: f64,
    /// Long window Δ' = 2Δ + τ_{π/2} (pulse centre to pulse centre).
    pub delta_prime: f64,
    /// Nominal π/2 pulse width.
    pub tau_pulse: f64,
}

impl PulseSequence {
    pub fn n_pulses(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, PulseEvent::Pulse { .. }))
            .count()
    }

    /// Total free-evolution time.
    pub fn free_evolution_time(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                PulseEvent::Delay(d) => *d,
                _ => 0.0,
            })
            .sum()
    }

    /// Wall-clock cycle duration for the given pulse mode.
    pub fn cycle_time(&self, mode: PulseMode) -> f64 {
        let pulses: f64 = self
            .events
            .iter()
            .map(|e| match e {
                PulseEvent::Pulse { width, .. } => *width,
                _ => 0.0,
            })
            .sum();
        match mode {
            PulseMode::Delta => self.free_evolution_time(),
            PulseMode::Finite => self.free_evolution_time() + pulses,
        }
    }
}

/// Whether pulses are instantaneous rotations or square pulses of their
/// stated width with the coupling Hamiltonian still active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PulseMode {
    Delta,
    Finite,
}

/// Reference frame of the returned state.
///
/// Width errors leave each cycle with a net collective rotation
/// exp(−i ε_net I^x), ε_net = Σ_k s_k(θ_k − π/2) — for an all-x cycle the
/// pulse generators commute, so this factorization is exact. The jitter
/// master equation evolves the pulse-locked (toggling) frame, where that
/// closure rotation is absorbed; `PulseLocked` undoes it at every cycle
/// boundary and is the right frame for master-equation comparisons. `Lab`
/// keeps the raw lab-frame state, closure error and all.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameLock {
    Lab,
    PulseLocked,
}

/// Uniform pulse-width jitter: widths are drawn from
/// [τ_{π/2} − δ/2, τ_{π/2} + δ/2], reproducibly from `seed`.
#[derive(Clone, Copy, Debug)]
pub struct JitterModel {
    /// Jitter amplitude δ in seconds (full width of the uniform interval).
    pub amplitude: f64,
    pub seed: u64,
}

impl JitterModel {
    pub fn new(amplitude: f64, seed: u64) -> Result<Self> {
        if amplitude < 0.0 {
            return Err(Error::ParameterError("jitter amplitude must be ≥ 0".into()));
        }
        Ok(JitterModel { amplitude, seed })
    }
}

/// Builds the eight-pulse cycle: free-evolution windows
/// (1/2, 2, 1, 2, 1, 2, 1, 2, 1/2)·Δ around pulses (+x ×4, −x ×4).
pub fn eight_pulse_cycle(delta: f64, tau_pulse: f64) -> Result<PulseSequence> {
    if delta <= 0.0 || tau_pulse <= 0.0 {
        return Err(Error::ParameterError(
            "delay and pulse width must be positive".into(),
        ));
    }
    let half = std::f64::consts::FRAC_PI_2;
    let axes = [
        Axis::PlusX,
        Axis::PlusX,
        Axis::PlusX,
        Axis::PlusX,
        Axis::MinusX,
        Axis::MinusX,
        Axis::MinusX,
        Axis::MinusX,
    ];
    let gaps = [0.5, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 0.5];
    let mut events = Vec::with_capacity(17);
    for (k, &g) in gaps.iter().enumerate() {
        events.push(PulseEvent::Delay(g * delta));
        if k < 8 {
            events.push(PulseEvent::Pulse {
                axis: axes[k],
                angle: half,
                width: tau_pulse,
            });
        }
    }
    Ok(PulseSequence {
        events,
        delta,
        delta_prime: 2.0 * delta + tau_pulse,
        tau_pulse,
    })
}

fn rotation_generator(n: u32, axis: Axis) -> CMat {
    let base = if axis.is_x() {
        collective_x(n)
    } else {
        collective_y(n)
    };
    base.map(|x| x * C64::new(axis.sign(), 0.0))
}

/// Toggled-frame Hamiltonians, one per free-evolution window. Pulse k
/// carries the flip-angle error `eps[k]` (radians) on top of its nominal
/// angle; the toggling frame follows the actual, erroneous rotations.
pub fn toggled_hamiltonians(sys: &SpinSystem, seq: &PulseSequence, eps: &[f64]) -> Vec<CMat> {
    let n = sys.n_spins();
    let h = h_dd(sys);
    let dim = sys.dim();
    let mut acc = CMat::identity(dim, dim);
    let mut out = Vec::new();
    let mut pulse_idx = 0usize;
    for ev in &seq.events {
        match ev {
            PulseEvent::Delay(_) => {
                out.push(acc.adjoint() * &h * &acc);
            }
            PulseEvent::Pulse { axis, angle, .. } => {
                let err = eps.get(pulse_idx).copied().unwrap_or(0.0);
                pulse_idx += 1;
                let gen = rotation_generator(n, *axis);
                let u = crate::linalg::unitary_from_hermitian(&gen, angle + err);
                acc = u * acc;
            }
        }
    }
    out
}

/// Duration-weighted average of the toggled-frame Hamiltonians. At zero
/// error this reproduces the double-quantum Hamiltonian of the same
/// couplings exactly.
pub fn toggling_average(sys: &SpinSystem, seq: &PulseSequence, eps: &[f64]) -> CMat {
    let toggled = toggled_hamiltonians(sys, seq, eps);
    weighted_average(seq, &toggled, |_| true)
}

fn weighted_average(seq: &PulseSequence, toggled: &[CMat], keep: impl Fn(usize) -> bool) -> CMat {
    let durations: Vec<f64> = seq
        .events
        .iter()
        .filter_map(|e| match e {
            PulseEvent::Delay(d) => Some(*d),
            _ => None,
        })
        .collect();
    let total: f64 = durations.iter().sum();
    let dim = toggled[0].nrows();
    let mut avg = CMat::zeros(dim, dim);
    for (k, (t, d)) in toggled.iter().zip(durations.iter()).enumerate() {
        if keep(k) {
            avg += t.map(|x| x * C64::new(d / total, 0.0));
        }
    }
    avg
}

fn projection(direction: &CMat, m: &CMat) -> f64 {
    let num = hs_inner_dense(direction, m);
    let den = hs_inner_dense(direction, direction).re;
    num.re / den
}

/// First-order response of the cycle average to each pulse error, split by
/// toggled sector. Returns (y-window row, z-window row): the coefficient of
/// i[I^x, H_y] in the y-window average derivative and of i[I^x, H_z] in the
/// z-window one, per unit error, for each of the eight pulses.
pub fn error_coefficient_rows(sys: &SpinSystem, seq: &PulseSequence) -> ([f64; 8], [f64; 8]) {
    let n = sys.n_spins();
    let h = h_dd(sys);
    let ix = collective_x(n);
    // Base toggled directions: H_z-window base is the coupling Hamiltonian
    // itself, the H_y-window base is its image under one ideal +x pulse.
    let u = crate::linalg::unitary_from_hermitian(&collective_x(n), std::f64::consts::FRAC_PI_2);
    let hy_base = u.adjoint() * &h * &u;
    let i_c = C64::new(0.0, 1.0);
    let by = commutator(&ix, &hy_base).map(|x| x * i_c);
    let bz = commutator(&ix, &h).map(|x| x * i_c);

    let step = 1e-6;
    let mut row_y = [0.0f64; 8];
    let mut row_z = [0.0f64; 8];
    for k in 0..8 {
        let mut ep = [0.0f64; 8];
        ep[k] = step;
        let mut em = [0.0f64; 8];
        em[k] = -step;
        let tp = toggled_hamiltonians(sys, seq, &ep);
        let tm = toggled_hamiltonians(sys, seq, &em);
        // y windows follow pulses 1,3,5,7 (0-based toggled indices 1,3,5,7)
        let ap = weighted_average(seq, &tp, |i| i % 2 == 1);
        let am = weighted_average(seq, &tm, |i| i % 2 == 1);
        let dy = (&ap - &am).map(|x| x / C64::new(2.0 * step, 0.0));
        row_y[k] = projection(&by, &dy);
        let ap = weighted_average(seq, &tp, |i| i % 2 == 0);
        let am = weighted_average(seq, &tm, |i| i % 2 == 0);
        let dz = (&ap - &am).map(|x| x / C64::new(2.0 * step, 0.0));
        row_z[k] = projection(&bz, &dz);
    }
    (row_y, row_z)
}

/// Ensemble-mean cycle Hamiltonian for i.i.d. zero-mean flip-angle errors
/// of variance `eps_var`: H̄(0) + (eps_var/2) Σ_k ∂²H̄/∂ε_k², the
/// second-order term evaluated by central differences. This is the
/// coherent part of the width-jittered cycle; the fluctuating first-order
/// part is what the V dissipator captures.
pub fn mean_cycle_hamiltonian(
    sys: &SpinSystem,
    seq: &PulseSequence,
    eps_var: f64,
) -> CMat {
    let base = toggling_average(sys, seq, &[0.0; 8]);
    if eps_var == 0.0 {
        return base;
    }
    let h = 1e-3;
    let mut shift = CMat::zeros(base.nrows(), base.ncols());
    for k in 0..8 {
        let mut ep = [0.0f64; 8];
        ep[k] = h;
        let mut em = [0.0f64; 8];
        em[k] = -h;
        let second = (toggling_average(sys, seq, &ep) + toggling_average(sys, seq, &em)
            - base.map(|x| x * C64::new(2.0, 0.0)))
        .map(|x| x / C64::new(h * h, 0.0));
        shift += second;
    }
    base + shift.map(|x| x * C64::new(0.5 * eps_var, 0.0))
}

/// Dissipator constant c for κ = c δ² τ_c, with δ the jitter amplitude in
/// units of τ_{π/2} and τ_c the cycle time: derived from the per-pulse
/// error responses γ_k of the cycle average along the V direction,
/// c = (π²/96) Σ_k γ_k². Uniform width jitter of relative amplitude δ gives
/// flip-angle errors of variance (π/2)²δ²/12, hence the π²/96 with the
/// factor 1/2 from the Gaussian kick average.
pub fn cycle_dissipator_constant(seq: &PulseSequence) -> f64 {
    let sys = SpinSystem::uniform(2, 1.0).expect("probe system");
    let dp = SpinSystem::uniform(2, 4.0).expect("probe system");
    let v_dir = v_exact(&dp);
    let step = 1e-6;
    let mut sum_sq = 0.0;
    for k in 0..8 {
        let mut ep = [0.0f64; 8];
        ep[k] = step;
        let mut em = [0.0f64; 8];
        em[k] = -step;
        let ap = toggling_average(&sys, seq, &ep);
        let am = toggling_average(&sys, seq, &em);
        let d = (&ap - &am).map(|x| x / C64::new(2.0 * step, 0.0));
        let gamma = projection(&v_dir, &d);
        sum_sq += gamma * gamma;
    }
    std::f64::consts::PI.powi(2) / 96.0 * sum_sq
}

/// Propagators for a fixed sequence reused across jitter realizations.
struct CyclePropagators {
    delays: Vec<(f64, CMat)>,
    /// Eigen pairs for building pulse unitaries: per axis, (values, vectors).
    pulse_eigs: Vec<(Axis, Vec<f64>, CMat)>,
    /// Eigen pairs of the bare collective generators, for frame closure.
    lock_eigs: [(Vec<f64>, CMat); 2],
    mode: PulseMode,
    tau: f64,
}

impl CyclePropagators {
    fn new(sys: &SpinSystem, seq: &PulseSequence, mode: PulseMode) -> Self {
        let h = h_dd(sys);
        let mut delays: Vec<(f64, CMat)> = Vec::new();
        for ev in &seq.events {
            if let PulseEvent::Delay(d) = ev {
                if !delays.iter().any(|(x, _)| x == d) {
                    delays.push((*d, crate::linalg::unitary_from_hermitian(&h, *d)));
                }
            }
        }
        let mut axes: Vec<Axis> = Vec::new();
        for ev in &seq.events {
            if let PulseEvent::Pulse { axis, .. } = ev {
                if !axes.contains(axis) {
                    axes.push(*axis);
                }
            }
        }
        let n = sys.n_spins();
        let pulse_eigs = axes
            .into_iter()
            .map(|axis| {
                let gen = match mode {
                    // Instantaneous rotation: only the axis generator.
                    PulseMode::Delta => rotation_generator(n, axis),
                    // Square pulse: RF field plus couplings, so the pulse
                    // unitary for width w is exp(-i (ω₁·axis + H) w).
                    PulseMode::Finite => {
                        let omega1 = std::f64::consts::FRAC_PI_2 / seq.tau_pulse;
                        rotation_generator(n, axis).map(|x| x * C64::new(omega1, 0.0)) + &h
                    }
                };
                let (vals, vecs) = eigh(&gen);
                (axis, vals.iter().copied().collect::<Vec<f64>>(), vecs)
            })
            .collect();
        let lock_eigs = [collective_x(n), collective_y(n)].map(|g| {
            let (vals, vecs) = eigh(&g);
            (vals.iter().copied().collect::<Vec<f64>>(), vecs)
        });
        CyclePropagators {
            delays,
            pulse_eigs,
            lock_eigs,
            mode,
            tau: seq.tau_pulse,
        }
    }

    /// Rotation exp(−i angle · I^{x/y}) from the cached eigen pairs.
    fn lock_rotation(&self, is_x: bool, angle: f64) -> CMat {
        let (vals, vecs) = &self.lock_eigs[if is_x { 0 } else { 1 }];
        let dim = vecs.nrows();
        let mut m = CMat::zeros(dim, dim);
        for (k, &l) in vals.iter().enumerate() {
            let phase = C64::new(0.0, -l * angle).exp();
            for r in 0..dim {
                m[(r, k)] = vecs[(r, k)] * phase;
            }
        }
        m * vecs.adjoint()
    }

    fn delay(&self, d: f64) -> &CMat {
        &self.delays.iter().find(|(x, _)| *x == d).unwrap().1
    }

    /// Pulse unitary for a drawn width. In delta mode the width only sets
    /// the flip angle; in finite mode it is the actual duration.
    fn pulse(&self, axis: Axis, nominal_angle: f64, width: f64) -> CMat {
        let (_, vals, vecs) = self
            .pulse_eigs
            .iter()
            .find(|(a, _, _)| *a == axis)
            .unwrap();
        let t = match self.mode {
            PulseMode::Delta => nominal_angle * width / self.tau,
            PulseMode::Finite => width,
        };
        let dim = vecs.nrows();
        let mut m = CMat::zeros(dim, dim);
        for (k, &l) in vals.iter().enumerate() {
            let phase = C64::new(0.0, -l * t).exp();
            for r in 0..dim {
                m[(r, k)] = vecs[(r, k)] * phase;
            }
        }
        m * vecs.adjoint()
    }
}

fn sequence_unitary(
    props: &CyclePropagators,
    seq: &PulseSequence,
    n_cycles: usize,
    frame: FrameLock,
    mut width_of: impl FnMut(usize) -> f64,
) -> CMat {
    let dim = props.delays[0].1.nrows();
    let mut u = CMat::identity(dim, dim);
    let mut pulse_counter = 0usize;
    for _ in 0..n_cycles {
        // accumulated flip-angle closure error about x and y
        let mut eps_net = [0.0f64; 2];
        for ev in &seq.events {
            match ev {
                PulseEvent::Delay(d) => {
                    u = props.delay(*d) * u;
                }
                PulseEvent::Pulse { axis, angle, .. } => {
                    let w = width_of(pulse_counter);
                    pulse_counter += 1;
                    let err = angle * (w - props.tau) / props.tau;
                    eps_net[if axis.is_x() { 0 } else { 1 }] += axis.sign() * err;
                    u = props.pulse(*axis, *angle, w) * u;
                }
            }
        }
        if frame == FrameLock::PulseLocked {
            if eps_net[0] != 0.0 {
                u = props.lock_rotation(true, -eps_net[0]) * u;
            }
            if eps_net[1] != 0.0 {
                u = props.lock_rotation(false, -eps_net[1]) * u;
            }
        }
    }
    u
}

/// Exact propagation of `rho0` through `n_cycles` repetitions of the
/// sequence. `widths`, when given, overrides the width of every pulse in
/// order (length ≥ pulses × cycles); otherwise nominal widths are used.
pub fn propagate_sequence(
    rho0: &CMat,
    sys: &SpinSystem,
    seq: &PulseSequence,
    mode: PulseMode,
    frame: FrameLock,
    n_cycles: usize,
    widths: Option<&[f64]>,
) -> Result<CMat> {
    let needed = seq.n_pulses() * n_cycles;
    if let Some(w) = widths {
        if w.len() < needed {
            return Err(Error::InputError(format!(
                "{} pulse widths supplied, {needed} needed",
                w.len()
            )));
        }
    }
    let props = CyclePropagators::new(sys, seq, mode);
    let u = sequence_unitary(&props, seq, n_cycles, frame, |k| match widths {
        Some(w) => w[k],
        None => seq.tau_pulse,
    });
    Ok(&u * rho0 * u.adjoint())
}

/// Ensemble average of the exact finite- or delta-pulse propagation over
/// i.i.d. per-pulse width draws. Deterministic given the jitter seed and
/// independent of the worker count: samples are processed in fixed chunks
/// with per-sample derived seeds.
pub fn monte_carlo_jitter(
    rho0: &CMat,
    sys: &SpinSystem,
    seq: &PulseSequence,
    jitter: &JitterModel,
    mode: PulseMode,
    frame: FrameLock,
    n_cycles: usize,
    n_samples: usize,
) -> Result<CMat> {
    if n_samples < 1 {
        return Err(Error::ParameterError("need at least one sample".into()));
    }
    let props = CyclePropagators::new(sys, seq, mode);
    let tau = seq.tau_pulse;
    let delta = jitter.amplitude;
    let dim = rho0.nrows();

    const CHUNK: usize = 64;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let chunk_sums: Vec<CMat> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n_samples);
            let mut acc = CMat::zeros(dim, dim);
            for s in lo..hi {
                let mut rng = sample_rng(jitter.seed, s as u64);
                let u = sequence_unitary(&props, seq, n_cycles, frame, |_| {
                    if delta == 0.0 {
                        tau
                    } else {
                        tau + delta * (rng.gen::<f64>() - 0.5)
                    }
                });
                acc += &u * rho0 * u.adjoint();
            }
            acc
        })
        .collect();

    let mut total = CMat::zeros(dim, dim);
    for c in chunk_sums {
        total += c;
    }
    Ok(total.map(|x| x / C64::new(n_samples as f64, 0.0)))
}

fn sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&sample.to_le_bytes());
    s[16] = 0x6d; // domain tag
    ChaCha8Rng::from_seed(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, trace_distance};
    use crate::oracle::{dq_exact, evolve_unitary};

    fn cycle() -> PulseSequence {
        eight_pulse_cycle(1.0, 0.1).unwrap()
    }

    #[test]
    fn cycle_structure() {
        let seq = cycle();
        assert_eq!(seq.n_pulses(), 8);
        assert!((seq.free_evolution_time() - 12.0).abs() < 1e-12);
        assert!((seq.delta_prime - (2.0 + 0.1)).abs() < 1e-12);
        assert!(eight_pulse_cycle(-1.0, 0.1).is_err());
    }

    #[test]
    fn error_free_average_is_double_quantum_form() {
        let sys = SpinSystem::uniform(3, 0.8).unwrap();
        let avg = toggling_average(&sys, &cycle(), &[0.0; 8]);
        let target = dq_exact(&sys);
        // scale fit
        let alpha = hs_inner_dense(&target, &avg).re / hs_inner_dense(&target, &target).re;
        let resid = fro_norm(&(&avg - &target.map(|x| x * C64::new(alpha, 0.0))));
        assert!(resid / fro_norm(&avg) < 1e-12, "residual {resid}");
        assert!((alpha - 1.0).abs() < 1e-12, "alpha {alpha}");
    }

    #[test]
    fn error_rows_match_cycle_bookkeeping() {
        let sys = SpinSystem::uniform(2, 1.0).unwrap();
        let (ry, rz) = error_coefficient_rows(&sys, &cycle());
        let want_y = [8.0, 6.0, 6.0, 4.0, -4.0, -2.0, -2.0, 0.0].map(|x: f64| x / 12.0);
        let want_z = [7.0, 7.0, 5.0, 5.0, -3.0, -3.0, -1.0, -1.0].map(|x: f64| x / 24.0);
        for k in 0..8 {
            let dy = (ry[k] - want_y[k]).abs();
            let dz = (rz[k] - want_z[k]).abs();
            assert!(dy < 1e-8, "y row k={k}: {} vs {}", ry[k], want_y[k]);
            assert!(dz < 1e-8, "z row k={k}: {} vs {}", rz[k], want_z[k]);
        }
    }

    #[test]
    fn perturbing_pulse_five_flips_sign_relative_to_four() {
        let sys = SpinSystem::uniform(2, 1.0).unwrap();
        let (ry, _) = error_coefficient_rows(&sys, &cycle());
        assert!(ry[3] > 0.0 && ry[4] < 0.0);
    }

    #[test]
    fn dissipator_constant_matches_closed_form() {
        // Σ γ² = 50/144 gives c = 25π²/6912.
        let c = cycle_dissipator_constant(&cycle());
        let closed = 25.0 * std::f64::consts::PI.powi(2) / 6912.0;
        assert!((c - closed).abs() < 1e-9, "c = {c}, closed form {closed}");
    }

    #[test]
    fn delta_cycle_reproduces_average_hamiltonian_evolution() {
        // One cycle with delta pulses and no errors tracks exp(-i H̄ t_c);
        // the gap shrinks quadratically as Δ is halved.
        let sys = SpinSystem::uniform(3, 0.05).unwrap();
        let basis = crate::symbasis::SymmetricBasis::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho0 = crate::oracle::embed(&crate::oracle::random_symmetric_density(&basis, &mut rng));
        let hbar = dq_exact(&sys);
        let mut errs = Vec::new();
        for delta in [1.0, 0.5] {
            let seq = eight_pulse_cycle(delta, 0.01).unwrap();
            let tc = seq.free_evolution_time();
            let exact = propagate_sequence(&rho0, &sys, &seq, PulseMode::Delta, FrameLock::Lab, 1, None).unwrap();
            let avg = evolve_unitary(&rho0, &hbar, tc);
            errs.push(trace_distance(&exact, &avg));
        }
        assert!(errs[1] < errs[0] * 0.3, "errors {errs:?}");
    }

    #[test]
    fn zero_jitter_equals_deterministic_propagation() {
        let sys = SpinSystem::uniform(2, 0.5).unwrap();
        let seq = cycle();
        let basis = crate::symbasis::SymmetricBasis::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho0 = crate::oracle::embed(&crate::oracle::random_symmetric_density(&basis, &mut rng));
        let jm = JitterModel::new(0.0, 9).unwrap();
        let mc = monte_carlo_jitter(&rho0, &sys, &seq, &jm, PulseMode::Delta, FrameLock::Lab, 3, 5).unwrap();
        let det = propagate_sequence(&rho0, &sys, &seq, PulseMode::Delta, FrameLock::Lab, 3, None).unwrap();
        assert!(trace_distance(&mc, &det) < 1e-12);
        // unitary samples keep the trace exactly
        assert!((mc.trace() - rho0.trace()).norm() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_deterministic_given_seed() {
        let sys = SpinSystem::uniform(2, 0.5).unwrap();
        let seq = cycle();
        let rho0 = crate::oracle::ghz_exact(2);
        let jm = JitterModel::new(0.02, 123).unwrap();
        let a = monte_carlo_jitter(&rho0, &sys, &seq, &jm, PulseMode::Delta, FrameLock::PulseLocked, 2, 130).unwrap();
        let b = monte_carlo_jitter(&rho0, &sys, &seq, &jm, PulseMode::Delta, FrameLock::PulseLocked, 2, 130).unwrap();
        assert!(fro_norm(&(&a - &b)) == 0.0);
        assert!(JitterModel::new(-0.1, 0).is_err());
    }

    #[test]
    fn finite_pulse_mode_runs_and_preserves_trace() {
        let sys = SpinSystem::uniform(2, 0.3).unwrap();
        let seq = eight_pulse_cycle(1.5e-6, 2.9e-6).unwrap();
        let rho0 = crate::oracle::ghz_exact(2);
        let out = propagate_sequence(&rho0, &sys, &seq, PulseMode::Finite, FrameLock::Lab, 1, None).unwrap();
        assert!((out.trace() - rho0.trace()).norm() < 1e-12);
    }
}
