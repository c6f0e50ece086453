use mqsense::dynamics::DQ_CYCLE_DISSIPATOR_C;
use mqsense::linalg::{hs_inner_dense, trace_distance};
use mqsense::oracle::{
    collective_z, dq_exact, eight_pulse_cycle, evolve_master, mean_cycle_hamiltonian,
    monte_carlo_jitter, propagate_sequence, v_exact, FrameLock, JitterModel, PulseMode,
    SpinSystem,
};
use mqsense::C64;
use nalgebra::DMatrix;

fn main() {
    let n = 4u32;
    let d: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.004);
    let cycles: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(48);
    let samples: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(10_000);

    let sys = SpinSystem::uniform(n, d).unwrap();
    let sys4 = SpinSystem::uniform(n, 4.0 * d).unwrap();
    let tau = 0.1;
    let seq = eight_pulse_cycle(1.0, tau).unwrap();
    let tc = seq.free_evolution_time();
    let t_total = cycles as f64 * tc;

    // thermal-like density: maximally mixed + I_z deviation inside the bound
    let dim = 1usize << n;
    let iz = collective_z(n);
    let iz_norm: f64 = iz.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let rho0 = DMatrix::<C64>::identity(dim, dim).map(|x| x / C64::new(dim as f64, 0.0))
        + iz.map(|x| x * C64::new(0.125 / iz_norm, 0.0));

    let h_eff = dq_exact(&sys);
    let v = v_exact(&sys4);

    // coherent baselines
    let mc0 = propagate_sequence(&rho0, &sys, &seq, PulseMode::Delta, FrameLock::PulseLocked, cycles, None).unwrap();
    let me0 = evolve_master(&rho0, &h_eff, &v, 0.0, t_total);
    println!("coherent gap (cycle vs H_eff flow): {:.3e}", trace_distance(&mc0, &me0));

    // linear-response direction for rate fitting
    let kappa_ref = DQ_CYCLE_DISSIPATOR_C * 0.01 * tc;
    let me_ref = evolve_master(&rho0, &h_eff, &v, kappa_ref, t_total);
    let x = &me_ref - &me0;
    let xx = hs_inner_dense(&x, &x).re;

    let mut fits = Vec::new();
    for &delta in &[0.05f64, 0.0674, 0.0908, 0.1224] {
        let jm = JitterModel::new(delta * tau, 7).unwrap();
        let t0 = std::time::Instant::now();
        let mc = monte_carlo_jitter(&rho0, &sys, &seq, &jm, PulseMode::Delta, FrameLock::PulseLocked, cycles, samples).unwrap();
        let kappa_pred = DQ_CYCLE_DISSIPATOR_C * delta * delta * tc;
        let eps_var = std::f64::consts::PI.powi(2) * delta * delta / 48.0;
        let h_mean = mean_cycle_hamiltonian(&sys, &seq, eps_var);
        let me = evolve_master(&rho0, &h_mean, &v, kappa_pred, t_total);
        let td = trace_distance(&mc, &me);
        let effect = trace_distance(&mc, &mc0);
        let base = evolve_master(&rho0, &h_mean, &v, 0.0, t_total);
        let diff = &mc - &base;
        let kappa_fit = hs_inner_dense(&x, &diff).re / xx * kappa_ref;
        fits.push((delta, kappa_fit));
        println!(
            "delta={delta:.3}: td(MC, ME)={td:.3e}  effect={effect:.3e}  kappa_pred={kappa_pred:.3e}  kappa_fit={kappa_fit:.3e}  ratio={:.3}  [{:.1?}]",
            kappa_fit / kappa_pred,
            t0.elapsed()
        );
    }
    // log-log slope
    let pts: Vec<(f64, f64)> = fits.iter().map(|&(d, k)| (d.ln(), k.max(1e-300).ln())).collect();
    let nn = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nn;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nn;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    println!("log-log slope of fitted rate vs delta: {slope:.3}");
}
