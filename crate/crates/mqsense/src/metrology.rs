//! Sensing metrics: distortion variance, Gaussian cluster-size fits, and
//! classical/quantum Fisher information.


use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::dephase;
use crate::states::{build_cluster, collective_z_operator, ClusterSpec, CoherenceSpectrum, WeightMode};
use crate::symbasis::{SymOperator, SymmetricBasis};
use crate::{C64, Error, Result};

/// Mean squared deviation between two coherence distributions up to a
/// maximum order.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DistortionReport {
    /// Jitter amplitude that produced the second spectrum, when known
    /// (units of τ_{π/2}).
    pub delta: Option<f64>,
    pub m_c: u32,
    pub value: f64,
}

/// D = mean over even orders n_c = 0, 2, …, m_c of (s0(n_c) − sδ(n_c))²,
/// i.e. m_c/2 + 1 terms. Spectra are used as given; pipelines normalize
/// them over even non-negative orders first.
pub fn distortion_variance(
    s0: &CoherenceSpectrum,
    s_delta: &CoherenceSpectrum,
    m_c: u32,
) -> Result<DistortionReport> {
    if m_c % 2 != 0 {
        return Err(Error::ParameterError(format!("m_c = {m_c} must be even")));
    }
    let available = s0.n_spins().min(s_delta.n_spins()) as i64;
    if (m_c as i64) > available {
        return Err(Error::RangeError(m_c as i64, available));
    }
    let terms = m_c / 2 + 1;
    let mut acc = 0.0;
    for k in 0..=m_c / 2 {
        let q = 2 * k as i64;
        let diff = s0.intensity(q) - s_delta.intensity(q);
        acc += diff * diff;
    }
    Ok(DistortionReport {
        delta: None,
        m_c,
        value: acc / terms as f64,
    })
}

/// Centered Gaussian fit of a coherence distribution, parameterized by its
/// full width at half height.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ClusterFit {
    /// FWHH of the fitted profile, in coherence-order units.
    pub fwhh: f64,
    pub amplitude: f64,
    /// Cluster size σ²/(4 ln 2) from the fitted width.
    pub n_cl: f64,
    /// Euclidean norm of the fit residuals.
    pub residual: f64,
}

/// Least-squares fit of intensities to A·exp(−4 ln2 · q²/σ²), where σ is
/// the FWHH directly; the cluster size follows as σ²/(4 ln 2).
pub fn gaussian_fit(s: &CoherenceSpectrum) -> Result<ClusterFit> {
    let ln2x4 = 4.0 * std::f64::consts::LN_2;
    let peak = s.iter().map(|(_, v)| v).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::FitError("spectrum is empty".into()));
    }
    let floor = 1e-12 * peak;
    let pts: Vec<(f64, f64)> = s
        .iter()
        .filter(|&(_, v)| v > floor)
        .map(|(q, v)| (q as f64, v))
        .collect();
    if pts.len() < 3 {
        return Err(Error::FitError(format!(
            "need ≥ 3 orders above the noise floor, got {}",
            pts.len()
        )));
    }

    // Moment-based start: intensity variance s² maps to FWHH 2√(2 ln2)·s.
    let total: f64 = pts.iter().map(|&(_, v)| v).sum();
    let var: f64 = pts.iter().map(|&(q, v)| v * q * q).sum::<f64>() / total;
    let mut sigma = (8.0 * std::f64::consts::LN_2 * var.max(1e-6)).sqrt();
    let mut amp = peak;

    let model = |a: f64, s: f64, q: f64| a * (-ln2x4 * q * q / (s * s)).exp();
    let cost = |a: f64, s: f64| -> f64 {
        pts.iter()
            .map(|&(q, y)| {
                let r = model(a, s, q) - y;
                r * r
            })
            .sum()
    };

    // Levenberg-Marquardt on (A, σ).
    let mut lambda = 1e-3;
    let mut c = cost(amp, sigma);
    for _ in 0..200 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for &(q, y) in &pts {
            let e = (-ln2x4 * q * q / (sigma * sigma)).exp();
            let f = amp * e;
            let r = f - y;
            let da = e;
            let ds = f * 2.0 * ln2x4 * q * q / (sigma * sigma * sigma);
            jtj[0][0] += da * da;
            jtj[0][1] += da * ds;
            jtj[1][1] += ds * ds;
            jtr[0] += da * r;
            jtr[1] += ds * r;
        }
        jtj[1][0] = jtj[0][1];
        let a00 = jtj[0][0] * (1.0 + lambda);
        let a11 = jtj[1][1] * (1.0 + lambda);
        let det = a00 * a11 - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = (-jtr[0] * a11 + jtr[1] * jtj[0][1]) / det;
        let step_s = (-jtr[1] * a00 + jtr[0] * jtj[1][0]) / det;
        let (na, ns) = (amp + step_a, (sigma + step_s).abs().max(1e-9));
        let nc = cost(na, ns);
        if nc < c {
            amp = na;
            sigma = ns;
            lambda = (lambda * 0.3).max(1e-12);
            let small = step_a.abs() / amp.abs().max(1e-12) + step_s.abs() / sigma;
            c = nc;
            if small < 1e-14 || c < 1e-28 * peak * peak {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::FitError("fit did not converge".into()));
    }
    Ok(ClusterFit {
        fwhh: sigma,
        amplitude: amp,
        n_cl: sigma * sigma / (4.0 * std::f64::consts::LN_2),
        residual: c.sqrt(),
    })
}

/// Quantum Fisher information value plus a solve-quality flag.
#[derive(Clone, Copy, Debug)]
pub struct QfiResult {
    pub value: f64,
    /// Set when the least-squares solve left a residual above 1e−6
    /// relative, i.e. the pseudo-inverse rank decision was borderline.
    pub conditioning_warning: bool,
}

/// Basis dimension up to which the QFI solve always eigendecomposes; above
/// it a Cholesky fast path is tried first (valid for full-rank states) with
/// eigendecomposition as the fallback.
const QFI_EIG_CUTOFF: usize = 600;

/// Relative singular-value cutoff of the pseudo-inverse.
pub const QFI_PINV_RTOL: f64 = 1e-10;

/// Quantum Fisher information of ρ for the generator G via the vectorized
/// identity F = 2 ⟨x| ({ρ, ·})⁺ |x⟩ with x = −i[G, ρ]: the anticommutator
/// superoperator is solved in the least-squares sense with singular values
/// below 1e−10 of the largest treated as zero.
pub fn qfi(rho: &SymOperator, generator: &SymOperator) -> Result<QfiResult> {
    if !rho.is_hermitian(1e-9) {
        return Err(Error::InputError("state is not Hermitian".into()));
    }
    if !generator.is_hermitian(1e-9) {
        return Err(Error::InputError("generator is not Hermitian".into()));
    }
    let dim = rho.basis().len();

    // x = vec(−i [G, ρ])
    let comm_g = generator.commutator_superop();
    let mut x = comm_g.apply_vec(rho.coeffs());
    let mi = C64::new(0.0, -1.0);
    for v in &mut x {
        *v *= mi;
    }
    let x = DVector::from_vec(x);
    let xn = x.norm();
    if xn == 0.0 {
        return Ok(QfiResult {
            value: 0.0,
            conditioning_warning: false,
        });
    }

    let mut a = rho.anticommutator_superop().to_dense();
    // enforce exact Hermiticity before factorization
    for i in 0..dim {
        for j in (i + 1)..dim {
            let v = (a[(i, j)] + a[(j, i)].conj()) * C64::new(0.5, 0.0);
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
        let d = a[(i, i)].re;
        a[(i, i)] = C64::new(d, 0.0);
    }

    let y = if dim > QFI_EIG_CUTOFF {
        match nalgebra::linalg::Cholesky::new(a.clone()) {
            Some(chol) => chol.solve(&x),
            None => pinv_solve(&a, &x),
        }
    } else {
        pinv_solve(&a, &x)
    };

    let resid = (&a * &y - &x).norm() / xn;
    let value = 2.0 * x.dotc(&y).re;
    Ok(QfiResult {
        value: value.max(0.0),
        conditioning_warning: resid > 1e-6,
    })
}

fn pinv_solve(a: &DMatrix<C64>, x: &DVector<C64>) -> DVector<C64> {
    let (vals, vecs) = crate::linalg::eigh(a);
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let cut = QFI_PINV_RTOL * vmax;
    let proj = vecs.adjoint() * x;
    let mut scaled = proj;
    for (k, v) in scaled.iter_mut().enumerate() {
        if vals[k] > cut {
            *v /= C64::new(vals[k], 0.0);
        } else {
            *v = C64::new(0.0, 0.0);
        }
    }
    &vecs * scaled
}

/// Classical Fisher information Σ_i p_i (∂_α ln p_i)² with the derivative
/// taken by central finite difference at step `dalpha`. Outcomes with
/// probability below 1e−12 are excluded.
pub fn cfi(
    prob_family: impl Fn(f64) -> Vec<f64>,
    alpha: f64,
    dalpha: f64,
) -> Result<f64> {
    if dalpha <= 0.0 {
        return Err(Error::ParameterError("dalpha must be positive".into()));
    }
    let p0 = prob_family(alpha);
    let pp = prob_family(alpha + dalpha);
    let pm = prob_family(alpha - dalpha);
    for p in [&p0, &pp, &pm] {
        if p.len() != p0.len() {
            return Err(Error::InputError("outcome count changed with α".into()));
        }
        if p.iter().any(|&x| x < -1e-12) {
            return Err(Error::InputError("negative probability".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InputError(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
    }
    let mut f = 0.0;
    for i in 0..p0.len() {
        if p0[i] < 1e-12 {
            continue;
        }
        let dp = (pp[i] - pm[i]) / (2.0 * dalpha);
        f += dp * dp / p0[i];
    }
    Ok(f)
}

/// QFI of dephased cluster states versus the maximum populated coherence
/// order: for every (m_c, p) builds the cluster, applies dephasing of
/// strength p, and evaluates the QFI for the collective I^z generator.
/// Returns (m_c, p, F_Q) rows, m_c-major.
pub fn qfi_vs_max_order(
    n_spins: u32,
    m_c_list: &[u32],
    p_list: &[f64],
    mode: WeightMode,
) -> Result<Vec<(u32, f64, f64)>> {
    let basis = SymmetricBasis::new(n_spins)?;
    let gen = collective_z_operator(&basis);
    let grid: Vec<(u32, f64)> = m_c_list
        .iter()
        .flat_map(|&m| p_list.iter().map(move |&p| (m, p)))
        .collect();
    let rows: Result<Vec<(u32, f64, f64)>> = grid
        .par_iter()
        .map(|&(m_c, p)| {
            let spec = ClusterSpec::new(n_spins, m_c, mode);
            let rho = build_cluster(&spec, &basis)?;
            let rho = dephase(&rho, p)?;
            let f = qfi(&rho, &gen)?;
            Ok((m_c, p, f.value))
        })
        .collect();
    rows
}

/// Linear-fit threshold: fits D = a·δ + b and returns the δ at which the
/// fitted line crosses `noise_rms`, clamped to ≥ 0.
pub fn estimate_threshold(d_samples: &[(f64, f64)], noise_rms: f64) -> Result<f64> {
    if noise_rms < 0.0 {
        return Err(Error::ParameterError("noise_rms must be ≥ 0".into()));
    }
    let mut deltas: Vec<f64> = d_samples.iter().map(|&(d, _)| d).collect();
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    deltas.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    if deltas.len() < 2 {
        return Err(Error::InputError(
            "need at least 2 distinct jitter amplitudes".into(),
        ));
    }
    let n = d_samples.len() as f64;
    let sx: f64 = d_samples.iter().map(|&(x, _)| x).sum();
    let sy: f64 = d_samples.iter().map(|&(_, y)| y).sum();
    let sxx: f64 = d_samples.iter().map(|&(x, _)| x * x).sum();
    let sxy: f64 = d_samples.iter().map(|&(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let a = (n * sxy - sx * sy) / denom;
    let b = (sy - a * sx) / n;
    if a <= 0.0 {
        return Err(Error::NoSensitivity(format!(
            "fitted slope {a:.3e} is not positive"
        )));
    }
    Ok(((noise_rms - b) / a).max(0.0))
}

/// R² of the least-squares line through (x, y) samples.
pub fn linear_r_squared(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let my = samples.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = samples.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = samples.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let syy: f64 = samples.iter().map(|&(_, y)| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
