use mqsense::dynamics::{dephase, dq_hamiltonian, propagate, v_operator, EvolutionConfig};
use mqsense::metrology::{distortion_variance, linear_r_squared};
use mqsense::states::{build_cluster, coherence_spectrum, ClusterSpec, WeightMode};
use mqsense::symbasis::SymmetricBasis;
use mqsense::C64;

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let p: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let dmax: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let l2: u32 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(4);
    let mode = if std::env::args().nth(5).as_deref() == Some("gauss") {
        WeightMode::Gaussian
    } else {
        WeightMode::Equal
    };

    let basis = SymmetricBasis::new(n).unwrap();
    let cluster = build_cluster(&ClusterSpec::new(n, n - n % 2, mode), &basis).unwrap();
    let rho_p = dephase(&cluster, p).unwrap();
    let cfg = EvolutionConfig::new(1.0, 0.35, l2, l2, 0.0);
    let h = dq_hamiltonian(&basis, cfg.d).scale(C64::new(-1.0, 0.0));
    let v = v_operator(&basis, 4.0 * cfg.d);
    let t = l2 as f64 * cfg.tau_c;

    let fracs = [0.0, 0.25, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
    let mut spectra = Vec::new();
    for f in fracs {
        let delta = f * dmax;
        let mut c = cfg.clone();
        c.delta = delta;
        let out = propagate(&rho_p, &h, &v, c.kappa(), t, 32 * l2 as usize).unwrap();
        let s = coherence_spectrum(&out.state).normalize_even_nonneg().unwrap();
        spectra.push((delta, s));
    }
    let s0 = &spectra[0].1;
    print!("s0(q>=0):");
    for (q, v) in s0.iter().filter(|&(q, _)| q >= 0 && q % 2 == 0) {
        print!(" {q}:{v:.2e}");
    }
    println!();

    let m_cs: Vec<u32> = (1..=n / 2).map(|k| 2 * k).collect();
    let (dl, sl) = &spectra[spectra.len() - 1];
    let mut vals = Vec::new();
    print!("D(delta={dl:.3}, m_c):");
    for &m in &m_cs {
        let d = distortion_variance(s0, sl, m).unwrap().value;
        vals.push((m, d));
        print!(" {m}:{d:.2e}");
    }
    println!();
    let (am, _) = vals.iter().cloned().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
    println!("argmax m_c = {am} interior: {}", am != m_cs[0] && am != *m_cs.last().unwrap());

    let mut sweep = Vec::new();
    for (delta, spec) in &spectra {
        let d = distortion_variance(s0, spec, am).unwrap().value;
        sweep.push((*delta, d));
    }
    println!(
        "D(delta, m_c={am}): {:?}",
        sweep.iter().map(|x| format!("{:.2e}", x.1)).collect::<Vec<_>>()
    );
    println!("monotone: {}", sweep.windows(2).all(|w| w[1].1 >= w[0].1));
    let window: Vec<(f64, f64)> = sweep.iter().cloned().filter(|&(d, _)| d >= 0.59 * dmax).collect();
    println!("R^2 = {:.4}", linear_r_squared(&window));
}
