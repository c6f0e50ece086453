//! Build model cluster states in both weight modes and fit their
//! coherence-order distributions.
//!
//! ```bash
//! cargo run --release -p mqsense --example cluster_spectra -- 40
//! ```

use mqsense::metrology::gaussian_fit;
use mqsense::states::{build_cluster, coherence_spectrum, ClusterSpec, WeightMode};
use mqsense::symbasis::SymmetricBasis;

fn main() {
    let n: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(40);
    let basis = SymmetricBasis::new(n).expect("basis");

    for mode in [WeightMode::Equal, WeightMode::Gaussian] {
        let spec = ClusterSpec::new(n, n - n % 2, mode);
        let rho = build_cluster(&spec, &basis).expect("cluster");
        let spectrum = coherence_spectrum(&rho);
        println!("mode {mode:?}: trace = {:.3}, purity-like total = {:.3e}",
            rho.trace().re, spectrum.total());
        print!("  q >= 0 intensities: ");
        for (q, v) in spectrum.iter().filter(|&(q, _)| q >= 0 && q % 2 == 0) {
            print!("{q}:{v:.2e} ");
        }
        println!();
        match gaussian_fit(&spectrum) {
            Ok(fit) => println!(
                "  gaussian fit: FWHH = {:.2}, cluster size = {:.1}, residual = {:.2e}",
                fit.fwhh, fit.n_cl, fit.residual
            ),
            Err(e) => println!("  gaussian fit unavailable: {e}"),
        }
    }
}
