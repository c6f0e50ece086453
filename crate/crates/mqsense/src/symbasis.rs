//! Permutation-invariant operator basis and its product algebra.
//!
//! Every operator on N spin-1/2 sites that is invariant under site
//! permutations expands over symmetrized products of the single-site
//! operators {σ⁺, σ⁻, |0⟩⟨0|, |1⟩⟨1|}, where σ⁺ = |0⟩⟨1| and |0⟩ is the
//! spin-up state. A basis element is the sum of all distinct site
//! assignments of a fixed operator multiset, divided by the square root of
//! the number of assignments, so every element has unit Hilbert-Schmidt
//! norm and the whole family is orthonormal.
//!
//! Labels: an element is written T^h_{m,n} with
//!
//! - `m` = #σ⁺ + #|0⟩⟨0|  (sites whose ket index is 0),
//! - `n` = #σ⁻ + #|0⟩⟨0|  (sites whose bra index is 0),
//! - `h` = #σ⁺ + #σ⁻      (off-diagonal sites).
//!
//! Valid labels satisfy 0 ≤ m,n ≤ N, |m−n| ≤ h ≤ min(m+n, 2N−m−n) and
//! h − |m−n| even; there are (N+1)(N+2)(N+3)/6 of them. The component
//! (m,n,h) carries coherence order q = m − n: it picks up the phase
//! e^{−iqφ} under a collective z-rotation by φ.
//!
//! Products close on the basis:
//!
//! ```text
//! T^{h1}_{m1,n1} · T^{h2}_{m2,n2} = δ_{n1,m2} Σ_h χ^h T^h_{m1,n2}
//! ```
//!
//! The structure constants χ^h count, for one representative term of the
//! result, the intermediate single-site patterns that factor it into a term
//! of each operand; the count reduces to a single sum of binomial products.
//! In this normalization every χ^h is real and non-negative. Norms and
//! binomials are evaluated in log space so the algebra stays accurate up to
//! the 64-spin cap.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::{C64, Error, Result};

/// Largest spin count accepted by [`SymmetricBasis::new`].
pub const DEFAULT_SPIN_CAP: u32 = 64;

/// Fill fraction above which superoperator matrices are stored densely.
const DENSE_FILL_THRESHOLD: f64 = 0.10;

/// Basis label (m, n, h). Ordering is lexicographic, matching enumeration
/// order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub m: u32,
    pub n: u32,
    pub h: u32,
}

impl Label {
    pub fn new(m: u32, n: u32, h: u32) -> Self {
        Label { m, n, h }
    }

    /// Coherence order q = m − n of this component.
    pub fn order(&self) -> i64 {
        self.m as i64 - self.n as i64
    }

    /// Occupation counts (#σ⁺, #σ⁻, #|0⟩⟨0|, #|1⟩⟨1|) for `n_spins` sites.
    pub fn counts(&self, n_spins: u32) -> (u32, u32, u32, u32) {
        let (m, n, h) = (self.m as i64, self.n as i64, self.h as i64);
        let plus = (h + m - n) / 2;
        let minus = (h - m + n) / 2;
        let p00 = (m + n - h) / 2;
        let p11 = n_spins as i64 - (m + n + h) / 2;
        (plus as u32, minus as u32, p00 as u32, p11 as u32)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T^{}_({},{})", self.h, self.m, self.n)
    }
}

/// The indexed permutation-invariant operator basis for a fixed spin count.
///
/// Immutable after construction; share it behind the [`Arc`] returned by
/// the constructors.
pub struct SymmetricBasis {
    n_spins: u32,
    labels: Vec<Label>,
    index: HashMap<Label, u32>,
    norms: Vec<f64>,
    /// Contiguous label range for each m (labels are lexicographic).
    by_m: Vec<Range<u32>>,
    /// ln k! for k = 0..=n_spins.
    ln_fact: Vec<f64>,
}

impl SymmetricBasis {
    /// Enumerates the basis for `n_spins` spins, in lexicographic (m, n, h)
    /// order. `n_spins` must lie in 1..=[`DEFAULT_SPIN_CAP`].
    pub fn new(n_spins: u32) -> Result<Arc<Self>> {
        Self::with_cap(n_spins, DEFAULT_SPIN_CAP)
    }

    /// Same as [`SymmetricBasis::new`] with an explicit spin-count cap.
    pub fn with_cap(n_spins: u32, cap: u32) -> Result<Arc<Self>> {
        if n_spins < 1 || n_spins > cap {
            return Err(Error::SizeError(n_spins, cap));
        }
        let nn = n_spins as usize;
        let expected = (nn + 1) * (nn + 2) * (nn + 3) / 6;
        let mut labels = Vec::with_capacity(expected);
        let mut by_m = Vec::with_capacity(nn + 1);
        for m in 0..=n_spins {
            let start = labels.len() as u32;
            for n in 0..=n_spins {
                let lo = m.abs_diff(n);
                let hi = (m + n).min(2 * n_spins - m - n);
                let mut h = lo;
                while h <= hi {
                    labels.push(Label::new(m, n, h));
                    h += 2;
                }
            }
            by_m.push(start..labels.len() as u32);
        }
        debug_assert_eq!(labels.len(), expected);

        let mut ln_fact = vec![0.0f64; nn + 1];
        for k in 1..=nn {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }

        let mut index = HashMap::with_capacity(labels.len());
        for (i, &l) in labels.iter().enumerate() {
            index.insert(l, i as u32);
        }

        let mut basis = SymmetricBasis {
            n_spins,
            labels,
            index,
            norms: Vec::new(),
            by_m,
            ln_fact,
        };
        basis.norms = basis.labels.iter().map(|l| basis.norm_of(*l)).collect();
        Ok(Arc::new(basis))
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    /// Number of basis labels, (N+1)(N+2)(N+3)/6.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// Position of a label, if valid.
    pub fn index_of(&self, l: Label) -> Option<usize> {
        self.index.get(&l).map(|&i| i as usize)
    }

    /// Unit-normalization constant k(m,n,h): the square root of the number
    /// of distinct site assignments N!/(#σ⁺! #σ⁻! #|0⟩⟨0|! #|1⟩⟨1|!).
    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    fn norm_of(&self, l: Label) -> f64 {
        let (a, b, c, d) = l.counts(self.n_spins);
        let lf = |k: u32| self.ln_fact[k as usize];
        (0.5 * (lf(self.n_spins) - lf(a) - lf(b) - lf(c) - lf(d))).exp()
    }

    fn ln_multinomial(&self, l: Label) -> f64 {
        let (a, b, c, d) = l.counts(self.n_spins);
        let lf = |k: u32| self.ln_fact[k as usize];
        lf(self.n_spins) - lf(a) - lf(b) - lf(c) - lf(d)
    }

    fn ln_binom(&self, a: u32, k: u32) -> f64 {
        self.ln_fact[a as usize] - self.ln_fact[k as usize] - self.ln_fact[(a - k) as usize]
    }

    fn check_label(&self, l: Label) -> Result<()> {
        if self.index.contains_key(&l) {
            Ok(())
        } else {
            Err(Error::LabelError(l.m, l.n, l.h))
        }
    }

    /// Structure constants of the normalized product
    /// T^{h1}_{m1,n1}·T^{h2}_{m2,n2} = δ_{n1,m2} Σ_h χ^h T^h_{m1,n2}.
    ///
    /// Returns (h, χ^h) pairs, ascending in h; empty when n1 ≠ m2. All χ
    /// are real non-negative in this normalization.
    pub fn structure_constants(&self, e1: Label, e2: Label) -> Result<Vec<(u32, f64)>> {
        self.check_label(e1)?;
        self.check_label(e2)?;
        if e1.n != e2.m {
            return Ok(Vec::new());
        }
        let (p1, _m1, _z1, q1) = {
            let (plus, minus, p00, p11) = e1.counts(self.n_spins);
            (plus, minus, p00, p11)
        };
        let s1 = p1; // #σ⁺ in the first operand
        let s2 = q1; // #|1⟩⟨1| in the first operand
        let s3 = e2.counts(self.n_spins).1; // #σ⁻ in the second operand

        let (m, n) = (e1.m, e2.n);
        let lo_h = m.abs_diff(n);
        let hi_h = (m + n).min(2 * self.n_spins - m - n);
        let half = 0.5 * (self.ln_multinomial_raw(e1) + self.ln_multinomial_raw(e2));

        let mut out = Vec::new();
        let mut h = lo_h;
        while h <= hi_h {
            let res = Label::new(m, n, h);
            // Site groups of a representative result term, keyed by its
            // (ket, bra) index pair; the intermediate pattern chooses, per
            // group, how many sites route through |1⟩ rather than |0⟩.
            let (b_sz, c_sz, a_sz, d_sz) = res.counts(self.n_spins);
            let (aa, bb, cc, dd) = (a_sz as i64, b_sz as i64, c_sz as i64, d_sz as i64);
            let (t1, t2, t3) = (s1 as i64, s2 as i64, s3 as i64);
            let lo = 0i64.max(t1 - bb).max(t3 - cc).max(t3 - t2);
            let hi = aa.min(t1).min(t3).min(dd - t2 + t3);
            if lo <= hi {
                let ln_res = self.ln_multinomial(res);
                let mut chi = 0.0f64;
                for a in lo..=hi {
                    let b = t1 - a;
                    let c = t3 - a;
                    let d = t2 - t3 + a;
                    let ln_term = self.ln_binom(a_sz, a as u32)
                        + self.ln_binom(b_sz, b as u32)
                        + self.ln_binom(c_sz, c as u32)
                        + self.ln_binom(d_sz, d as u32)
                        + 0.5 * ln_res
                        - half;
                    chi += ln_term.exp();
                }
                if chi > 0.0 {
                    out.push((h, chi));
                }
            }
            h += 2;
        }
        Ok(out)
    }

    fn ln_multinomial_raw(&self, l: Label) -> f64 {
        self.ln_multinomial(l)
    }

    /// Writes the basis table as CSV with columns `index,m,n,h,norm`.
    pub fn dump_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "index,m,n,h,norm")?;
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{},{},{},{},{:.16e}", i, l.m, l.n, l.h, self.norms[i])?;
        }
        Ok(())
    }
}

impl fmt::Debug for SymmetricBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymmetricBasis(n_spins={}, dim={})", self.n_spins, self.len())
    }
}

/// An operator (or state) as a coefficient vector over a [`SymmetricBasis`].
///
/// Basis elements have unit Hilbert-Schmidt norm, so `hs_inner` is the
/// conjugated dot product of coefficient vectors and Hermiticity reads
/// coeff(m,n,h) = conj(coeff(n,m,h)).
#[derive(Clone)]
pub struct SymOperator {
    basis: Arc<SymmetricBasis>,
    coeffs: Vec<C64>,
}

impl SymOperator {
    pub fn zero(basis: &Arc<SymmetricBasis>) -> Self {
        SymOperator {
            basis: Arc::clone(basis),
            coeffs: vec![C64::new(0.0, 0.0); basis.len()],
        }
    }

    /// The identity operator (1 on every site).
    pub fn identity(basis: &Arc<SymmetricBasis>) -> Self {
        let mut op = Self::zero(basis);
        let n = basis.n_spins();
        for j in 0..=n {
            let l = Label::new(j, j, 0);
            let i = basis.index_of(l).unwrap();
            op.coeffs[i] = C64::new(basis.norm(i), 0.0);
        }
        op
    }

    pub fn from_coeffs(basis: &Arc<SymmetricBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::InputError(format!(
                "coefficient count {} does not match basis dimension {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(SymOperator {
            basis: Arc::clone(basis),
            coeffs,
        })
    }

    pub fn basis(&self) -> &Arc<SymmetricBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, l: Label) -> C64 {
        match self.basis.index_of(l) {
            Some(i) => self.coeffs[i],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn set_coeff(&mut self, l: Label, v: C64) -> Result<()> {
        let i = self
            .basis
            .index_of(l)
            .ok_or(Error::LabelError(l.m, l.n, l.h))?;
        self.coeffs[i] = v;
        Ok(())
    }

    fn same_basis(&self, other: &SymOperator) -> Result<()> {
        if self.basis.n_spins() != other.basis.n_spins() {
            return Err(Error::BasisMismatch(
                self.basis.n_spins(),
                other.basis.n_spins(),
            ));
        }
        Ok(())
    }

    /// Hilbert-Schmidt pairing Tr(a† b); a plain conjugated dot product in
    /// this normalization.
    pub fn hs_inner(&self, other: &SymOperator) -> Result<C64> {
        self.same_basis(other)?;
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    pub fn hs_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Trace of the represented operator. Only diagonal h = 0 components
    /// contribute: Tr T^0_{j,j} = k(j,j,0).
    pub fn trace(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=self.basis.n_spins() {
            let l = Label::new(j, j, 0);
            let i = self.basis.index_of(l).unwrap();
            acc += self.coeffs[i] * self.basis.norm(i);
        }
        acc
    }

    /// Hermitian adjoint: coefficients conjugated and mirrored in m ↔ n.
    pub fn dagger(&self) -> SymOperator {
        let mut out = SymOperator::zero(&self.basis);
        for (i, &l) in self.basis.labels().iter().enumerate() {
            let j = self.basis.index_of(Label::new(l.n, l.m, l.h)).unwrap();
            out.coeffs[j] = self.coeffs[i].conj();
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for (i, &l) in self.basis.labels().iter().enumerate() {
            if l.m > l.n {
                continue;
            }
            let j = self.basis.index_of(Label::new(l.n, l.m, l.h)).unwrap();
            if (self.coeffs[i] - self.coeffs[j].conj()).norm() > tol {
                return false;
            }
        }
        true
    }

    pub fn scale(&self, s: C64) -> SymOperator {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn add(&self, other: &SymOperator) -> Result<SymOperator> {
        self.same_basis(other)?;
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c += o;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SymOperator) -> Result<SymOperator> {
        self.same_basis(other)?;
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c -= o;
        }
        Ok(out)
    }

    /// Nonzero components as (label, coefficient) pairs.
    pub fn support(&self) -> Vec<(Label, C64)> {
        self.basis
            .labels()
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(&l, &c)| (l, c))
            .collect()
    }

    /// Operator product via the structure constants. Agrees with the full
    /// Hilbert-space product of the represented operators.
    pub fn multiply(&self, other: &SymOperator) -> Result<SymOperator> {
        self.same_basis(other)?;
        let basis = &self.basis;
        let mut out = SymOperator::zero(basis);
        for (l1, c1) in self.support() {
            // Second factors must start where the first ends: m2 = n1.
            let range = basis.by_m[l1.n as usize].clone();
            for j in range {
                let c2 = other.coeffs[j as usize];
                if c2.norm_sqr() == 0.0 {
                    continue;
                }
                let l2 = basis.label(j as usize);
                for (h, chi) in basis.structure_constants(l1, l2)? {
                    let idx = basis.index_of(Label::new(l1.m, l2.n, h)).unwrap();
                    out.coeffs[idx] += c1 * c2 * chi;
                }
            }
        }
        Ok(out)
    }

    /// Matrix of x ↦ a·x on the coefficient space.
    pub fn left_mult_superop(&self) -> SuperOperatorMatrix {
        self.build_superop(SuperKind::Left)
    }

    /// Matrix of x ↦ x·a.
    pub fn right_mult_superop(&self) -> SuperOperatorMatrix {
        self.build_superop(SuperKind::Right)
    }

    /// Matrix of x ↦ [a, x]. Hermitian (as a matrix) when a is Hermitian,
    /// so −i·[a, ·] generates a norm-preserving flow.
    pub fn commutator_superop(&self) -> SuperOperatorMatrix {
        self.build_superop(SuperKind::Commutator)
    }

    /// Matrix of x ↦ {a, x}. Hermitian when a is Hermitian.
    pub fn anticommutator_superop(&self) -> SuperOperatorMatrix {
        self.build_superop(SuperKind::Anticommutator)
    }

    fn build_superop(&self, kind: SuperKind) -> SuperOperatorMatrix {
        let basis = &self.basis;
        let dim = basis.len();
        let terms = self.support();
        let mut triplets: Vec<(u32, u32, C64)> = Vec::new();
        let (left_sign, right_sign) = match kind {
            SuperKind::Left => (Some(C64::new(1.0, 0.0)), None),
            SuperKind::Right => (None, Some(C64::new(1.0, 0.0))),
            SuperKind::Commutator => (Some(C64::new(1.0, 0.0)), Some(C64::new(-1.0, 0.0))),
            SuperKind::Anticommutator => (Some(C64::new(1.0, 0.0)), Some(C64::new(1.0, 0.0))),
        };
        for (col, &x) in basis.labels().iter().enumerate() {
            for &(la, ca) in &terms {
                if let Some(sign) = left_sign {
                    // a · x
                    if la.n == x.m {
                        for (h, chi) in basis.structure_constants(la, x).unwrap() {
                            let row = basis.index_of(Label::new(la.m, x.n, h)).unwrap();
                            triplets.push((row as u32, col as u32, ca * chi * sign));
                        }
                    }
                }
                if let Some(sign) = right_sign {
                    // x · a
                    if x.n == la.m {
                        for (h, chi) in basis.structure_constants(x, la).unwrap() {
                            let row = basis.index_of(Label::new(x.m, la.n, h)).unwrap();
                            triplets.push((row as u32, col as u32, ca * chi * sign));
                        }
                    }
                }
            }
        }
        SuperOperatorMatrix::from_triplets(dim, triplets)
    }
}

#[derive(Clone, Copy)]
enum SuperKind {
    Left,
    Right,
    Commutator,
    Anticommutator,
}

/// A D×D matrix acting on coefficient vectors over the symmetric basis.
///
/// Stored sparse (CSR) when the fill fraction is below 10%, dense
/// otherwise. Commutator superoperators of few-term operators are very
/// sparse at large spin counts.
pub enum SuperOperatorMatrix {
    Sparse(CsrMatrix),
    Dense(DMatrix<C64>),
}

impl SuperOperatorMatrix {
    fn from_triplets(dim: usize, mut triplets: Vec<(u32, u32, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        // Merge duplicates.
        let mut merged: Vec<(u32, u32, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let Some(last) = merged.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((r, c, v));
        }
        merged.retain(|&(_, _, v)| v.norm_sqr() > 0.0);
        let fill = merged.len() as f64 / (dim as f64 * dim as f64);
        if fill < DENSE_FILL_THRESHOLD {
            let mut row_ptr = vec![0u32; dim + 1];
            for &(r, _, _) in &merged {
                row_ptr[r as usize + 1] += 1;
            }
            for i in 0..dim {
                row_ptr[i + 1] += row_ptr[i];
            }
            let col_idx: Vec<u32> = merged.iter().map(|&(_, c, _)| c).collect();
            let vals: Vec<C64> = merged.iter().map(|&(_, _, v)| v).collect();
            SuperOperatorMatrix::Sparse(CsrMatrix {
                dim,
                row_ptr,
                col_idx,
                vals,
            })
        } else {
            let mut m = DMatrix::<C64>::zeros(dim, dim);
            for (r, c, v) in merged {
                m[(r as usize, c as usize)] = v;
            }
            SuperOperatorMatrix::Dense(m)
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SuperOperatorMatrix::Sparse(s) => s.dim,
            SuperOperatorMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, SuperOperatorMatrix::Sparse(_))
    }

    pub fn nnz(&self) -> usize {
        match self {
            SuperOperatorMatrix::Sparse(s) => s.vals.len(),
            SuperOperatorMatrix::Dense(m) => m.iter().filter(|v| v.norm_sqr() > 0.0).count(),
        }
    }

    /// y = M x.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        match self {
            SuperOperatorMatrix::Sparse(s) => s.apply(x, y),
            SuperOperatorMatrix::Dense(m) => {
                let dim = m.nrows();
                for r in 0..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for c in 0..dim {
                        acc += m[(r, c)] * x[c];
                    }
                    y[r] = acc;
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            SuperOperatorMatrix::Dense(m) => m.clone(),
            SuperOperatorMatrix::Sparse(s) => {
                let mut m = DMatrix::<C64>::zeros(s.dim, s.dim);
                for r in 0..s.dim {
                    for k in s.row_ptr[r] as usize..s.row_ptr[r + 1] as usize {
                        m[(r, s.col_idx[k] as usize)] = s.vals[k];
                    }
                }
                m
            }
        }
    }
}

/// Compressed sparse row storage.
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<u32>,
    col_idx: Vec<u32>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize {
                acc += self.vals[k] * x[self.col_idx[k] as usize];
            }
            y[r] = acc;
        }
    }
}

/// Convenience: one basis element as an operator.
pub fn basis_element(basis: &Arc<SymmetricBasis>, l: Label) -> Result<SymOperator> {
    let mut op = SymOperator::zero(basis);
    op.set_coeff(l, C64::new(1.0, 0.0))?;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spin_basis_has_four_labels() {
        let b = SymmetricBasis::new(1).unwrap();
        assert_eq!(b.len(), 4);
        let expected = [
            Label::new(0, 0, 0),
            Label::new(0, 1, 1),
            Label::new(1, 0, 1),
            Label::new(1, 1, 0),
        ];
        // Lexicographic order in (m, n, h).
        assert_eq!(b.labels(), &expected);
    }

    #[test]
    fn label_counts_match_formula() {
        for n in [2u32, 5, 12, 40] {
            let b = SymmetricBasis::new(n).unwrap();
            let nn = n as usize;
            assert_eq!(b.len(), (nn + 1) * (nn + 2) * (nn + 3) / 6);
        }
        assert_eq!(SymmetricBasis::new(40).unwrap().len(), 12341);
        assert_eq!(SymmetricBasis::new(2).unwrap().len(), 10);
    }

    #[test]
    fn out_of_range_spin_count_errors() {
        assert!(SymmetricBasis::new(0).is_err());
        assert!(SymmetricBasis::new(65).is_err());
        assert!(SymmetricBasis::with_cap(10, 8).is_err());
    }

    #[test]
    fn index_is_a_bijection() {
        let b = SymmetricBasis::new(7).unwrap();
        for (i, &l) in b.labels().iter().enumerate() {
            assert_eq!(b.index_of(l), Some(i));
        }
    }

    #[test]
    fn single_spin_raising_times_lowering() {
        // σ⁺σ⁻ = |0⟩⟨0|.
        let b = SymmetricBasis::new(1).unwrap();
        let chi = b
            .structure_constants(Label::new(1, 0, 1), Label::new(0, 1, 1))
            .unwrap();
        assert_eq!(chi.len(), 1);
        assert_eq!(chi[0].0, 0);
        assert!((chi[0].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_contraction_indices_vanish() {
        let b = SymmetricBasis::new(3).unwrap();
        let chi = b
            .structure_constants(Label::new(2, 1, 1), Label::new(2, 2, 0))
            .unwrap();
        assert!(chi.is_empty());
    }

    #[test]
    fn two_spin_raising_lowering_splits_over_h() {
        // At N=2: T¹_{1,0}·T¹_{0,1} = (T⁰_{1,1} + T²_{1,1})/√2.
        let b = SymmetricBasis::new(2).unwrap();
        let chi = b
            .structure_constants(Label::new(1, 0, 1), Label::new(0, 1, 1))
            .unwrap();
        assert_eq!(chi.len(), 2);
        let r = 0.5f64.sqrt();
        assert_eq!(chi[0].0, 0);
        assert!((chi[0].1 - r).abs() < 1e-13);
        assert_eq!(chi[1].0, 2);
        assert!((chi[1].1 - r).abs() < 1e-13);
    }

    #[test]
    fn invalid_label_is_reported() {
        let b = SymmetricBasis::new(2).unwrap();
        let bad = Label::new(2, 2, 1);
        assert!(b.structure_constants(bad, Label::new(2, 2, 0)).is_err());
    }

    #[test]
    fn identity_is_neutral_for_multiply() {
        let b = SymmetricBasis::new(3).unwrap();
        let id = SymOperator::identity(&b);
        let mut a = SymOperator::zero(&b);
        for (i, c) in a.coeffs_mut().iter_mut().enumerate() {
            *c = C64::new(0.1 * i as f64, -0.03 * i as f64);
        }
        let left = id.multiply(&a).unwrap();
        let right = a.multiply(&id).unwrap();
        for i in 0..b.len() {
            assert!((left.coeffs()[i] - a.coeffs()[i]).norm() < 1e-12);
            assert!((right.coeffs()[i] - a.coeffs()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_annihilates() {
        let b = SymmetricBasis::new(2).unwrap();
        let z = SymOperator::zero(&b);
        let a = SymOperator::identity(&b);
        let p = a.multiply(&z).unwrap();
        assert!(p.hs_norm() < 1e-15);
    }

    #[test]
    fn identity_trace_is_hilbert_space_dimension() {
        let b = SymmetricBasis::new(5).unwrap();
        let id = SymOperator::identity(&b);
        assert!((id.trace().re - 32.0).abs() < 1e-10);
        assert!(id.trace().im.abs() < 1e-14);
    }

    #[test]
    fn hs_inner_is_orthonormal_on_basis_elements() {
        let b = SymmetricBasis::new(3).unwrap();
        let e1 = basis_element(&b, Label::new(2, 1, 1)).unwrap();
        let e2 = basis_element(&b, Label::new(1, 1, 2)).unwrap();
        assert!((e1.hs_inner(&e1).unwrap().re - 1.0).abs() < 1e-15);
        assert!(e1.hs_inner(&e2).unwrap().norm() < 1e-15);
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let b2 = SymmetricBasis::new(2).unwrap();
        let b3 = SymmetricBasis::new(3).unwrap();
        let a = SymOperator::identity(&b2);
        let c = SymOperator::identity(&b3);
        assert!(a.hs_inner(&c).is_err());
        assert!(a.multiply(&c).is_err());
    }

    #[test]
    fn left_superop_of_identity_is_identity_matrix() {
        let b = SymmetricBasis::new(3).unwrap();
        let id = SymOperator::identity(&b);
        let m = id.left_mult_superop();
        let dense = m.to_dense();
        for r in 0..b.len() {
            for c in 0..b.len() {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((dense[(r, c)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let b = SymmetricBasis::new(1).unwrap();
        let mut buf = Vec::new();
        b.dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,m,n,h,norm");
        assert_eq!(lines.len(), 5);
    }
}
