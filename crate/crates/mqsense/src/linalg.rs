//! Dense complex linear algebra helpers shared by the engine and the oracle.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Matrix exponential by scaling-and-squaring with a (13,13) Padé approximant.
///
/// Works for any square complex matrix; accuracy is near machine precision
/// for well-scaled inputs. Used for propagators and dense Liouvillian
/// exponentials.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }

    // 1-norm controls the scaling step count.
    let norm = one_norm(a);
    let theta13 = 5.371_920_351_148_152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scale = C64::new((0.5f64).powi(s), 0.0);
    let a = a.map(|x| x * scale);

    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];

    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let b = |k: usize| C64::new(B[k], 0.0);
    let u_inner = &a6 * (a6.map(|x| x * b(13)) + a4.map(|x| x * b(11)) + a2.map(|x| x * b(9)))
        + a6.map(|x| x * b(7))
        + a4.map(|x| x * b(5))
        + a2.map(|x| x * b(3))
        + id.map(|x| x * b(1));
    let u = &a * u_inner;
    let v = &a6 * (a6.map(|x| x * b(12)) + a4.map(|x| x * b(10)) + a2.map(|x| x * b(8)))
        + a6.map(|x| x * b(6))
        + a4.map(|x| x * b(4))
        + a2.map(|x| x * b(2))
        + id.map(|x| x * b(0));

    // Solve (V - U) X = (V + U).
    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = lhs.lu();
    let mut r = lu.solve(&rhs).expect("Padé denominator is singular");

    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Entrywise 1-norm column maximum.
pub fn one_norm(a: &DMatrix<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns real eigenvalues (ascending) and the unitary of eigenvectors.
/// The input is symmetrized first so tiny Hermiticity drift cannot poison
/// the solver.
pub fn eigh(a: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let n = a.nrows();
    let mut h = a.clone();
    for i in 0..n {
        for j in 0..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * C64::new(0.5, 0.0);
            h[(i, j)] = v;
        }
    }
    let se = nalgebra::SymmetricEigen::new(h);
    // Sort ascending for reproducibility.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let mut vals = DVector::<f64>::zeros(n);
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vals[k] = se.eigenvalues[i];
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Unitary propagator exp(-i H t) for Hermitian H, via eigendecomposition.
pub fn unitary_from_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut phases = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        phases[(k, k)] = C64::new(0.0, -vals[k] * t).exp();
    }
    &vecs * phases * vecs.adjoint()
}

/// Trace distance (1/2)||a - b||_1 between Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    let (vals, _) = eigh(&diff);
    0.5 * vals.iter().map(|x| x.abs()).sum::<f64>()
}

/// Hilbert-Schmidt inner product Tr(a† b) of dense matrices.
pub fn hs_inner_dense(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

/// Frobenius norm.
pub fn fro_norm(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_matches_eig_for_hermitian_generator() {
        // exp(-i H t) computed two ways.
        let h = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.3, 0.2),
                c(0.0, -0.1),
                c(0.3, -0.2),
                c(-0.5, 0.0),
                c(0.4, 0.0),
                c(0.0, 0.1),
                c(0.4, 0.0),
                c(0.2, 0.0),
            ],
        );
        let t = 1.7;
        let gen = h.map(|x| x * c(0.0, -t));
        let e1 = expm(&gen);
        let e2 = unitary_from_hermitian(&h, t);
        assert!(fro_norm(&(&e1 - &e2)) < 1e-12);
    }

    #[test]
    fn expm_handles_large_norm_via_scaling() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 40.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -40.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)] - C64::new(0.0, 40.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn trace_distance_of_identical_states_is_zero() {
        let a = DMatrix::<C64>::identity(4, 4).map(|x| x * c(0.25, 0.0));
        assert!(trace_distance(&a, &a) < 1e-15);
    }
}
