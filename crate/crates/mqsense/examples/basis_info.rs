//! Enumerate the permutation-symmetric operator basis and dump it as CSV.
//!
//! ```bash
//! cargo run --release -p mqsense --example basis_info -- 6
//! ```

use mqsense::symbasis::SymmetricBasis;

fn main() {
    let n: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);
    let basis = SymmetricBasis::new(n).expect("basis");
    println!(
        "{} spins: {} labels (Hilbert space would be {} x {})",
        n,
        basis.len(),
        1u64 << n,
        1u64 << n
    );

    // A few sample rows and where the h ranges come from.
    for &l in basis.labels().iter().take(6) {
        let i = basis.index_of(l).unwrap();
        println!(
            "  index {i}: (m={}, n={}, h={})  order q={}  norm k={:.6}",
            l.m,
            l.n,
            l.h,
            l.order(),
            basis.norm(i)
        );
    }

    let path = std::env::temp_dir().join(format!("basis_{n}.csv"));
    let mut buf = Vec::new();
    basis.dump_csv(&mut buf).expect("dump");
    std::fs::write(&path, buf).expect("write");
    println!("full table written to {}", path.display());

    // Structure constants in action: one raising times one lowering unit.
    use mqsense::symbasis::Label;
    let chi = basis
        .structure_constants(Label::new(1, 0, 1), Label::new(0, 1, 1))
        .expect("labels valid");
    println!("T^1_(1,0) * T^1_(0,1) expands as:");
    for (h, c) in chi {
        println!("  chi^{h} = {c:.6}  on (m=1, n=1, h={h})");
    }
}
