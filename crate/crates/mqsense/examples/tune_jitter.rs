use mqsense::dynamics::{phase_grid, spectrum_from_scan, EvolutionConfig};
use mqsense::metrology::{distortion_variance, linear_r_squared};
use mqsense::runner::scan_with_dephasing;
use mqsense::states::thermal_state;
use mqsense::symbasis::SymmetricBasis;

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let p: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let dmax: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let l: u32 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(4);
    let tau_c: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(0.35);

    let basis = SymmetricBasis::new(n).unwrap();
    let seed = thermal_state(&basis);
    let phis = phase_grid(181);
    let t0 = std::time::Instant::now();

    let deltas: Vec<f64> = [0.0, 0.25, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 1.0]
        .iter()
        .map(|f| f * dmax)
        .collect();
    let mut spectra = Vec::new();
    for &delta in &deltas {
        let mut cfg = EvolutionConfig::new(1.0, tau_c, l, l, delta);
        cfg.steps_per_loop = 24;
        let signals = scan_with_dephasing(&seed, &cfg, p, &phis).unwrap();
        let spec = spectrum_from_scan(&phis, &signals, true, None)
            .unwrap()
            .normalize_even_nonneg()
            .unwrap();
        spectra.push((delta, spec));
    }
    println!("scans took {:.1?}", t0.elapsed());

    let m_cs: Vec<u32> = (1..=n / 2).map(|k| 2 * k).collect();
    let s0 = &spectra[0].1;

    println!("spectrum at delta=0 (q>=0):");
    for (q, v) in s0.iter().filter(|&(q, _)| q >= 0) {
        if v > 1e-10 {
            print!(" {q}:{v:.3e}");
        }
    }
    println!();

    // D vs m_c at the largest delta
    let (dlast, slast) = &spectra[spectra.len() - 1];
    print!("D(delta={dlast:.3}, m_c): ");
    let mut vals = Vec::new();
    for &m in &m_cs {
        let d = distortion_variance(s0, slast, m).unwrap().value;
        vals.push((m, d));
        print!("{m}:{d:.3e} ");
    }
    println!();
    let (argmax, _) = vals.iter().cloned().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
    println!("argmax m_c = {argmax} (interior: {})", argmax != m_cs[0] && argmax != *m_cs.last().unwrap());

    // D vs delta at the peak m_c
    let m_star = argmax;
    print!("D(delta, m_c={m_star}): ");
    let mut sweep = Vec::new();
    for (delta, spec) in &spectra {
        let d = distortion_variance(s0, spec, m_star).unwrap().value;
        sweep.push((*delta, d));
        print!("{delta:.3}:{d:.3e} ");
    }
    println!();
    let mono = sweep.windows(2).all(|w| w[1].1 >= w[0].1);
    println!("monotone over sweep: {mono}");
    let window: Vec<(f64, f64)> = sweep.iter().cloned().filter(|&(d, _)| d >= 0.59 * dmax).collect();
    println!("linearity window {:?}", window.iter().map(|x| x.0).collect::<Vec<_>>());
    println!("R^2 on window = {:.4}", linear_r_squared(&window));
}
