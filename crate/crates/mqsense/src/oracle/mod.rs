//! Exact full-Hilbert-space simulator for small spin systems.
//!
//! Everything here works with dense 2^N × 2^N matrices and is capped at 12
//! spins. The oracle exists to validate the symmetric engine: it builds the
//! same operators site by site, multiplies and evolves them exactly, and
//! projects results back onto the symmetric basis for comparison.
//!
//! Conventions. |0⟩ is spin-up (I^z eigenvalue +1/2) and σ⁺ = |0⟩⟨1|.
//! The y axis is oriented so that I^y = (i/2)(σ⁺ − σ⁻); with that choice
//! the cross-coupling operator of the eight-pulse cycle satisfies
//! V = −i[I^x, H_z] = +i[I^x, H_y] with a positive prefactor. Computational
//! basis index bit i (least significant = site 0) is 0 for |0⟩.

mod pulses;

pub use pulses::{
    cycle_dissipator_constant, eight_pulse_cycle, error_coefficient_rows, mean_cycle_hamiltonian,
    monte_carlo_jitter,
    propagate_sequence, toggled_hamiltonians, toggling_average, Axis, FrameLock, JitterModel,
    PulseEvent, PulseMode, PulseSequence,
};

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg::{eigh, expm, unitary_from_hermitian};
use crate::symbasis::{Label, SymOperator, SymmetricBasis};
use crate::{C64, Error, Result};

/// Dense-simulation spin cap: 4096×4096 matrices at most.
pub const ORACLE_SPIN_CAP: u32 = 12;

pub type CMat = DMatrix<C64>;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// A small spin system with symmetric pair couplings (zero diagonal),
/// in rad/s.
#[derive(Clone)]
pub struct SpinSystem {
    n_spins: u32,
    couplings: DMatrix<f64>,
}

impl SpinSystem {
    /// Uniform all-to-all coupling `d`.
    pub fn uniform(n_spins: u32, d: f64) -> Result<Self> {
        if n_spins < 1 || n_spins > ORACLE_SPIN_CAP {
            return Err(Error::DimensionCap(n_spins, ORACLE_SPIN_CAP));
        }
        let mut couplings = DMatrix::<f64>::from_element(n_spins as usize, n_spins as usize, d);
        for i in 0..n_spins as usize {
            couplings[(i, i)] = 0.0;
        }
        Self::with_couplings(n_spins, couplings)
    }

    pub fn with_couplings(n_spins: u32, couplings: DMatrix<f64>) -> Result<Self> {
        if n_spins < 1 || n_spins > ORACLE_SPIN_CAP {
            return Err(Error::DimensionCap(n_spins, ORACLE_SPIN_CAP));
        }
        let n = n_spins as usize;
        if couplings.nrows() != n || couplings.ncols() != n {
            return Err(Error::InputError("coupling matrix has wrong shape".into()));
        }
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(Error::InputError("coupling diagonal must be zero".into()));
            }
            for j in 0..n {
                if (couplings[(i, j)] - couplings[(j, i)]).abs() > 0.0 {
                    return Err(Error::InputError("coupling matrix must be symmetric".into()));
                }
            }
        }
        Ok(SpinSystem { n_spins, couplings })
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[(i, j)]
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_spins
    }
}

// Single-site operators as 2×2 tables, [ket][bra] with index 0 = |0⟩.
type Site = [[C64; 2]; 2];

fn site_sp() -> Site {
    let mut s = [[czero(); 2]; 2];
    s[0][1] = C64::new(1.0, 0.0);
    s
}
fn site_sm() -> Site {
    let mut s = [[czero(); 2]; 2];
    s[1][0] = C64::new(1.0, 0.0);
    s
}
fn site_x() -> Site {
    let mut s = [[czero(); 2]; 2];
    s[0][1] = C64::new(0.5, 0.0);
    s[1][0] = C64::new(0.5, 0.0);
    s
}
fn site_y() -> Site {
    // I^y = (i/2)(σ⁺ − σ⁻)
    let mut s = [[czero(); 2]; 2];
    s[0][1] = C64::new(0.0, 0.5);
    s[1][0] = C64::new(0.0, -0.5);
    s
}
fn site_z() -> Site {
    let mut s = [[czero(); 2]; 2];
    s[0][0] = C64::new(0.5, 0.0);
    s[1][1] = C64::new(-0.5, 0.0);
    s
}

fn bit(s: usize, i: usize) -> usize {
    (s >> i) & 1
}

fn with_bit(s: usize, i: usize, b: usize) -> usize {
    (s & !(1usize << i)) | (b << i)
}

/// Adds `w · op1_i · op2_j` (i ≠ j) into `m`.
fn add_two_site(m: &mut CMat, op1: &Site, op2: &Site, i: usize, j: usize, w: C64) {
    let dim = m.nrows();
    for s in 0..dim {
        let bi = bit(s, i);
        let bj = bit(s, j);
        for (ai, arow) in op1.iter().enumerate() {
            let c1 = arow[bi];
            if c1 == czero() {
                continue;
            }
            for (aj, brow) in op2.iter().enumerate() {
                let c2 = brow[bj];
                if c2 == czero() {
                    continue;
                }
                let sp = with_bit(with_bit(s, i, ai), j, aj);
                m[(sp, s)] += w * c1 * c2;
            }
        }
    }
}

fn add_one_site(m: &mut CMat, op: &Site, i: usize, w: C64) {
    let dim = m.nrows();
    for s in 0..dim {
        let bi = bit(s, i);
        for (ai, arow) in op.iter().enumerate() {
            let c = arow[bi];
            if c == czero() {
                continue;
            }
            m[(with_bit(s, i, ai), s)] += w * c;
        }
    }
}

fn collective(n: u32, op: &Site) -> CMat {
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    for i in 0..n as usize {
        add_one_site(&mut m, op, i, C64::new(1.0, 0.0));
    }
    m
}

/// Collective I^x = Σ_i I^x_i.
pub fn collective_x(n: u32) -> CMat {
    collective(n, &site_x())
}

/// Collective I^y = Σ_i I^y_i.
pub fn collective_y(n: u32) -> CMat {
    collective(n, &site_y())
}

/// Collective I^z = Σ_i I^z_i.
pub fn collective_z(n: u32) -> CMat {
    collective(n, &site_z())
}

fn pair_sum(sys: &SpinSystem, build: impl Fn(&mut CMat, usize, usize, f64)) -> CMat {
    let dim = sys.dim();
    let mut m = CMat::zeros(dim, dim);
    let n = sys.n_spins as usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sys.coupling(i, j);
            if d != 0.0 {
                build(&mut m, i, j, d);
            }
        }
    }
    m
}

/// Secular dipolar Hamiltonian Σ_{i≠j} d_ij (3 I^z_iI^z_j − I_i·I_j),
/// the sum running over ordered pairs.
pub fn h_dd(sys: &SpinSystem) -> CMat {
    pair_sum(sys, |m, i, j, d| {
        let w = C64::new(2.0 * d, 0.0);
        add_two_site(m, &site_z(), &site_z(), i, j, w * C64::new(2.0, 0.0));
        add_two_site(m, &site_x(), &site_x(), i, j, -w);
        add_two_site(m, &site_y(), &site_y(), i, j, -w);
    })
}

/// Σ_{i<j} d'_ij [I^z_iI^z_j − (I^y_iI^y_j + I^x_iI^x_j)/2], with the
/// system couplings read as d'. Toggling [`h_dd`] with couplings d produces
/// exactly this form with d' = 4d.
pub fn h_z(sys: &SpinSystem) -> CMat {
    pair_sum(sys, |m, i, j, d| {
        let w = C64::new(d, 0.0);
        add_two_site(m, &site_z(), &site_z(), i, j, w);
        add_two_site(m, &site_y(), &site_y(), i, j, w * C64::new(-0.5, 0.0));
        add_two_site(m, &site_x(), &site_x(), i, j, w * C64::new(-0.5, 0.0));
    })
}

/// Σ_{i<j} d'_ij [I^y_iI^y_j − (I^z_iI^z_j + I^x_iI^x_j)/2].
pub fn h_y(sys: &SpinSystem) -> CMat {
    pair_sum(sys, |m, i, j, d| {
        let w = C64::new(d, 0.0);
        add_two_site(m, &site_y(), &site_y(), i, j, w);
        add_two_site(m, &site_z(), &site_z(), i, j, w * C64::new(-0.5, 0.0));
        add_two_site(m, &site_x(), &site_x(), i, j, w * C64::new(-0.5, 0.0));
    })
}

/// Σ_{i<j} d'_ij [I^x_iI^x_j − (I^y_iI^y_j + I^z_iI^z_j)/2]; together with
/// [`h_y`] and [`h_z`] it sums to zero.
pub fn h_x(sys: &SpinSystem) -> CMat {
    pair_sum(sys, |m, i, j, d| {
        let w = C64::new(d, 0.0);
        add_two_site(m, &site_x(), &site_x(), i, j, w);
        add_two_site(m, &site_y(), &site_y(), i, j, w * C64::new(-0.5, 0.0));
        add_two_site(m, &site_z(), &site_z(), i, j, w * C64::new(-0.5, 0.0));
    })
}

/// Double-quantum Hamiltonian −(1/2) Σ_{i≠j} d_ij (I⁺_iI⁺_j + I⁻_iI⁻_j),
/// ordered-pair sum.
pub fn dq_exact(sys: &SpinSystem) -> CMat {
    pair_sum(sys, |m, i, j, d| {
        let w = C64::new(-d, 0.0);
        add_two_site(m, &site_sp(), &site_sp(), i, j, w);
        add_two_site(m, &site_sm(), &site_sm(), i, j, w);
    })
}

/// Cross-coupling operator (3/2) Σ_{i<j} d'_ij (I^y_iI^z_j + I^z_iI^y_j).
pub fn v_exact(sys: &SpinSystem) -> CMat {
    pair_sum(sys, |m, i, j, d| {
        let w = C64::new(1.5 * d, 0.0);
        add_two_site(m, &site_y(), &site_z(), i, j, w);
        add_two_site(m, &site_z(), &site_y(), i, j, w);
    })
}

pub(crate) fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Enumerates the distinct site assignments of a label's operator multiset,
/// yielding (row_bits, col_bits) for each elementary term.
fn for_each_assignment(n: u32, l: Label, mut f: impl FnMut(usize, usize)) {
    let (plus, minus, p00, p11) = l.counts(n);
    // counts[op]: 0 = σ⁺, 1 = σ⁻, 2 = |0⟩⟨0|, 3 = |1⟩⟨1|
    let mut counts = [plus, minus, p00, p11];
    // (ket bit, bra bit) per op
    const BITS: [(usize, usize); 4] = [(0, 1), (1, 0), (0, 0), (1, 1)];
    fn rec(
        site: usize,
        n: usize,
        row: usize,
        col: usize,
        counts: &mut [u32; 4],
        f: &mut impl FnMut(usize, usize),
    ) {
        if site == n {
            f(row, col);
            return;
        }
        for op in 0..4 {
            if counts[op] == 0 {
                continue;
            }
            counts[op] -= 1;
            let (kb, bb) = BITS[op];
            rec(site + 1, n, row | (kb << site), col | (bb << site), counts, f);
            counts[op] += 1;
        }
    }
    rec(0, n as usize, 0, 0, &mut counts, &mut f);
}

/// Dense matrix of one symmetric basis element.
pub fn dense_basis_element(basis: &SymmetricBasis, l: Label) -> CMat {
    let n = basis.n_spins();
    let dim = 1usize << n;
    let i = basis.index_of(l).expect("valid label");
    let inv_k = C64::new(1.0 / basis.norm(i), 0.0);
    let mut m = CMat::zeros(dim, dim);
    for_each_assignment(n, l, |row, col| {
        m[(row, col)] += inv_k;
    });
    m
}

/// Embeds a symmetric-basis operator into the full Hilbert space.
pub fn embed(op: &SymOperator) -> CMat {
    let basis = op.basis();
    let n = basis.n_spins();
    assert!(n <= ORACLE_SPIN_CAP, "embedding beyond the oracle cap");
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    for (l, c) in op.support() {
        let i = basis.index_of(l).unwrap();
        let w = c / basis.norm(i);
        for_each_assignment(n, l, |row, col| {
            m[(row, col)] += w;
        });
    }
    m
}

/// Projects a dense operator onto the symmetric basis. Exact when the input
/// is permutation symmetric; otherwise this is the orthogonal projection.
pub fn project(m: &CMat, basis: &Arc<SymmetricBasis>) -> SymOperator {
    let n = basis.n_spins();
    assert_eq!(m.nrows(), 1usize << n);
    let mut out = SymOperator::zero(basis);
    for (i, &l) in basis.labels().iter().enumerate() {
        let mut acc = czero();
        for_each_assignment(n, l, |row, col| {
            acc += m[(row, col)];
        });
        out.coeffs_mut()[i] = acc / basis.norm(i);
    }
    out
}

/// Structure constants by brute force: dense product followed by projection.
pub fn brute_structure_constants(
    basis: &Arc<SymmetricBasis>,
    e1: Label,
    e2: Label,
) -> Result<Vec<(u32, C64)>> {
    basis
        .index_of(e1)
        .ok_or(Error::LabelError(e1.m, e1.n, e1.h))?;
    basis
        .index_of(e2)
        .ok_or(Error::LabelError(e2.m, e2.n, e2.h))?;
    let t1 = dense_basis_element(basis, e1);
    let t2 = dense_basis_element(basis, e2);
    let prod = &t1 * &t2;
    let mut out = Vec::new();
    let n = basis.n_spins();
    if e1.m + e2.n > 2 * n {
        return Ok(out);
    }
    let lo = e1.m.abs_diff(e2.n);
    let hi = (e1.m + e2.n).min(2 * n - e1.m - e2.n);
    let mut h = lo;
    while h <= hi {
        let l = Label::new(e1.m, e2.n, h);
        let t = dense_basis_element(basis, l);
        let mut acc = czero();
        for (a, b) in t.iter().zip(prod.iter()) {
            acc += a.conj() * b;
        }
        if acc.norm() > 1e-14 {
            out.push((h, acc));
        }
        h += 2;
    }
    Ok(out)
}

/// Unitary evolution ρ ↦ e^{-iHt} ρ e^{+iHt}.
pub fn evolve_unitary(rho: &CMat, h: &CMat, t: f64) -> CMat {
    let u = unitary_from_hermitian(h, t);
    &u * rho * u.adjoint()
}

/// Master-equation evolution dρ/dt = −i[H,ρ] − κ[V,[V,ρ]] by exponentiating
/// the dense Liouvillian. Column-major vectorization; dimension (2^N)².
pub fn evolve_master(rho: &CMat, h: &CMat, v: &CMat, kappa: f64, t: f64) -> CMat {
    let dim = rho.nrows();
    let id = CMat::identity(dim, dim);
    // vec(AX) = (I ⊗ A) vec X, vec(XA) = (Aᵀ ⊗ I) vec X
    let lmul = |a: &CMat| id.kronecker(a);
    let rmul = |a: &CMat| a.transpose().kronecker(&id);
    let comm_h = lmul(h) - rmul(h);
    let comm_v = lmul(v) - rmul(v);
    let mi = C64::new(0.0, -1.0);
    let liouville = comm_h.map(|x| x * mi) - (&comm_v * &comm_v).map(|x| x * C64::new(kappa, 0.0));
    let prop = expm(&liouville.map(|x| x * C64::new(t, 0.0)));
    let vec = DMatrix::from_column_slice(dim * dim, 1, rho.as_slice());
    let out = prop * vec;
    CMat::from_column_slice(dim, dim, out.as_slice())
}

/// ρ ↦ e^{-iφ I^z} ρ e^{+iφ I^z}; diagonal in the computational basis.
pub fn rotate_z_exact(rho: &CMat, phi: f64) -> CMat {
    let dim = rho.nrows();
    let n = dim.trailing_zeros() as usize;
    let iz = |s: usize| 0.5 * (n as f64 - 2.0 * (s.count_ones() as f64));
    let mut out = rho.clone();
    for s in 0..dim {
        for t in 0..dim {
            let phase = C64::new(0.0, -phi * (iz(s) - iz(t))).exp();
            out[(s, t)] *= phase;
        }
    }
    out
}

/// Per-spin phase-damping channel with Kraus pair
/// E₁ = diag(1, √(1−p)), E₂ = diag(0, √p), applied as a product over spins.
pub fn dephase_kraus(rho: &CMat, p: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterError(format!(
            "dephasing strength {p} outside [0, 1]"
        )));
    }
    let dim = rho.nrows();
    let n = dim.trailing_zeros() as usize;
    let e1 = [1.0, (1.0 - p).sqrt()];
    let e2 = [0.0, p.sqrt()];
    let mut out = rho.clone();
    for i in 0..n {
        let mut next = CMat::zeros(dim, dim);
        for s in 0..dim {
            for t in 0..dim {
                let (bs, bt) = (bit(s, i), bit(t, i));
                let w = e1[bs] * e1[bt] + e2[bs] * e2[bt];
                next[(s, t)] = out[(s, t)] * C64::new(w, 0.0);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Quantum Fisher information by spectral decomposition:
/// F = 2 Σ_{ij} (λ_i − λ_j)² |G_ij|² / (λ_i + λ_j), pairs with
/// λ_i + λ_j ≤ 1e−12 skipped.
pub fn qfi_exact(rho: &CMat, g: &CMat) -> Result<f64> {
    let (vals, vecs) = eigh(rho);
    if vals.iter().any(|&l| l < -1e-9) {
        return Err(Error::InputError(format!(
            "state is not positive (min eigenvalue {:.3e})",
            vals.min()
        )));
    }
    let gt = vecs.adjoint() * g * &vecs;
    let n = vals.len();
    let mut f = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = vals[i] + vals[j];
            if s <= 1e-12 {
                continue;
            }
            let d = vals[i] - vals[j];
            f += d * d / s * gt[(i, j)].norm_sqr();
        }
    }
    Ok(2.0 * f)
}

/// Coherence-order intensities of a dense operator: HS weight of each
/// q = I^z(row) − I^z(col) sector.
pub fn coherence_spectrum_exact(rho: &CMat) -> std::collections::BTreeMap<i64, f64> {
    let dim = rho.nrows();
    let n = dim.trailing_zeros() as i64;
    let mut out = std::collections::BTreeMap::new();
    for s in 0..dim {
        for t in 0..dim {
            let w = rho[(s, t)].norm_sqr();
            if w > 0.0 {
                let q = (t.count_ones() as i64) - (s.count_ones() as i64);
                debug_assert!(q.abs() <= n);
                *out.entry(q).or_insert(0.0) += w;
            }
        }
    }
    out
}

/// GHZ density matrix for N spins.
pub fn ghz_exact(n: u32) -> CMat {
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    let half = C64::new(0.5, 0.0);
    let top = dim - 1;
    m[(0, 0)] = half;
    m[(0, top)] = half;
    m[(top, 0)] = half;
    m[(top, top)] = half;
    m
}

/// Random Hermitian operator in the symmetric subspace with unit HS norm.
pub fn random_symmetric_hermitian<R: Rng>(basis: &Arc<SymmetricBasis>, rng: &mut R) -> SymOperator {
    let mut op = SymOperator::zero(basis);
    let labels: Vec<Label> = basis.labels().to_vec();
    for l in labels {
        if l.m < l.n {
            continue;
        }
        let re = rng.gen_range(-1.0..1.0);
        let im = if l.m == l.n { 0.0 } else { rng.gen_range(-1.0..1.0) };
        let c = C64::new(re, im);
        op.set_coeff(l, c).unwrap();
        if l.m != l.n {
            op.set_coeff(Label::new(l.n, l.m, l.h), c.conj()).unwrap();
        }
    }
    let norm = op.hs_norm();
    op.scale(C64::new(1.0 / norm, 0.0))
}

/// Random symmetric density matrix: maximally mixed state plus a Hermitian
/// perturbation kept inside the provable positivity bound.
pub fn random_symmetric_density<R: Rng>(basis: &Arc<SymmetricBasis>, rng: &mut R) -> SymOperator {
    let n = basis.n_spins();
    let dim = (1u64 << n) as f64;
    let mut c = random_symmetric_hermitian(basis, rng);
    let tr = c.trace();
    // Make the perturbation traceless, then mix.
    let id = SymOperator::identity(basis);
    c = c.sub(&id.scale(tr / C64::new(dim, 0.0))).unwrap();
    let norm = c.hs_norm();
    let lambda = 0.9 / (1.0 + dim * norm);
    id.scale(C64::new(1.0 / dim, 0.0))
        .add(&c.scale(C64::new(lambda, 0.0)))
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro_norm;
    use crate::symbasis::basis_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_spin_dipolar_eigenvalues() {
        let sys = SpinSystem::uniform(2, 1.0).unwrap();
        let h = h_dd(&sys);
        let (vals, _) = eigh(&h);
        let mut v: Vec<f64> = vals.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-2.0, 0.0, 1.0, 1.0];
        for (a, b) in v.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn toggled_axis_hamiltonians_sum_to_zero() {
        let sys = SpinSystem::uniform(3, 0.7).unwrap();
        let s = h_x(&sys) + h_y(&sys) + h_z(&sys);
        assert!(fro_norm(&s) < 1e-12);
    }

    #[test]
    fn dipolar_is_h_z_form_with_quadrupled_couplings() {
        let sys_d = SpinSystem::uniform(3, 0.9).unwrap();
        let sys_dp = SpinSystem::uniform(3, 3.6).unwrap();
        assert!(fro_norm(&(h_dd(&sys_d) - h_z(&sys_dp))) < 1e-12);
    }

    #[test]
    fn v_is_commutator_of_x_with_hz_and_hy() {
        let sys = SpinSystem::uniform(4, 1.3).unwrap();
        let v = v_exact(&sys);
        let ix = collective_x(4);
        let mi = C64::new(0.0, -1.0);
        let c1 = commutator(&ix, &h_z(&sys)).map(|x| x * mi);
        let c2 = commutator(&ix, &h_y(&sys)).map(|x| x * (-mi));
        assert!(fro_norm(&(&v - &c1)) < 1e-10);
        assert!(fro_norm(&(&v - &c2)) < 1e-10);
        // traceless
        assert!(v.trace().norm() < 1e-12);
    }

    #[test]
    fn embedding_of_basis_elements_is_orthonormal() {
        let basis = SymmetricBasis::new(3).unwrap();
        let a = dense_basis_element(&basis, Label::new(2, 1, 1));
        let b = dense_basis_element(&basis, Label::new(1, 1, 2));
        let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        assert!((na - 1.0).abs() < 1e-12);
        let mut cross = czero();
        for (x, y) in a.iter().zip(b.iter()) {
            cross += x.conj() * y;
        }
        assert!(cross.norm() < 1e-12);
    }

    #[test]
    fn embed_project_round_trip() {
        let basis = SymmetricBasis::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let op = random_symmetric_hermitian(&basis, &mut rng);
        let back = project(&embed(&op), &basis);
        let diff = op.sub(&back).unwrap();
        assert!(diff.hs_norm() < 1e-11);
    }

    #[test]
    fn engine_multiply_matches_dense_product() {
        let basis = SymmetricBasis::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_symmetric_hermitian(&basis, &mut rng);
        let b = random_symmetric_hermitian(&basis, &mut rng);
        let engine = a.multiply(&b).unwrap();
        let dense = embed(&a) * embed(&b);
        let oracle = project(&dense, &basis);
        let diff = engine.sub(&oracle).unwrap();
        assert!(diff.hs_norm() < 1e-10, "deviation {}", diff.hs_norm());
    }

    #[test]
    fn engine_structure_constants_match_brute_force_small() {
        for n in 1..=3u32 {
            let basis = SymmetricBasis::new(n).unwrap();
            for &e1 in basis.labels() {
                for &e2 in basis.labels() {
                    let fast = basis.structure_constants(e1, e2).unwrap();
                    let brute = brute_structure_constants(&basis, e1, e2).unwrap();
                    assert_eq!(fast.len(), brute.len(), "{e1:?} {e2:?}");
                    for ((h1, c1), (h2, c2)) in fast.iter().zip(brute.iter()) {
                        assert_eq!(h1, h2);
                        assert!((C64::new(*c1, 0.0) - c2).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ghz_spectrum_has_three_sectors() {
        let g = ghz_exact(3);
        let spec = coherence_spectrum_exact(&g);
        assert!((spec[&0] - 0.5).abs() < 1e-14);
        assert!((spec[&3] - 0.25).abs() < 1e-14);
        assert!((spec[&-3] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn ghz_qfi_is_n_squared() {
        for n in 2..=5u32 {
            let g = ghz_exact(n);
            let f = qfi_exact(&g, &collective_z(n)).unwrap();
            assert!((f - (n * n) as f64).abs() < 1e-8, "N={n}: got {f}");
        }
    }

    #[test]
    fn dephase_kraus_identity_at_zero_and_range_check() {
        let g = ghz_exact(3);
        let d = dephase_kraus(&g, 0.0).unwrap();
        assert!(fro_norm(&(&g - &d)) < 1e-14);
        assert!(dephase_kraus(&g, 1.3).is_err());
    }

    #[test]
    fn dephase_kraus_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = SymmetricBasis::new(3).unwrap();
        let rho = embed(&random_symmetric_density(&basis, &mut rng));
        let d = dephase_kraus(&rho, 0.37).unwrap();
        assert!((d.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn master_equation_with_zero_rate_is_unitary() {
        let sys = SpinSystem::uniform(2, 1.0).unwrap();
        let h = dq_exact(&sys);
        let v = v_exact(&sys);
        let basis = SymmetricBasis::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = embed(&random_symmetric_density(&basis, &mut rng));
        let a = evolve_master(&rho, &h, &v, 0.0, 0.6);
        let b = evolve_unitary(&rho, &h, 0.6);
        assert!(fro_norm(&(&a - &b)) < 1e-10);
    }

    #[test]
    fn sym_element_times_its_adjoint_projects_positively() {
        // σ⁺-type element times its adjoint lands on diagonal labels.
        let basis = SymmetricBasis::new(2).unwrap();
        let e = basis_element(&basis, Label::new(2, 0, 2)).unwrap();
        let prod = e.multiply(&e.dagger()).unwrap();
        let dense = embed(&prod);
        let (vals, _) = eigh(&dense);
        assert!(vals.iter().all(|&v| v > -1e-12));
    }

    #[test]
    fn couplings_must_be_symmetric_and_hollow() {
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(SpinSystem::with_couplings(2, m.clone()).is_err());
        m[(1, 0)] = 1.0;
        assert!(SpinSystem::with_couplings(2, m.clone()).is_ok());
        m[(0, 0)] = 0.5;
        assert!(SpinSystem::with_couplings(2, m).is_err());
        assert!(SpinSystem::uniform(13, 1.0).is_err());
    }
}
