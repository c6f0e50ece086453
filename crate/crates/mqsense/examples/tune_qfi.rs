use mqsense::metrology::qfi_vs_max_order;
use mqsense::states::WeightMode;

fn main() {
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20u32);
    let m_c: Vec<u32> = (1..=n / 2).map(|k| 2 * k).collect();
    let p = [0.70, 0.75, 0.80];
    for mode in [WeightMode::Equal, WeightMode::Gaussian] {
        let t0 = std::time::Instant::now();
        let rows = qfi_vs_max_order(n, &m_c, &p, mode).unwrap();
        println!("mode {mode:?} took {:.1?}", t0.elapsed());
        for &pp in &p {
            let vals: Vec<(u32, f64)> = rows
                .iter()
                .filter(|r| r.1 == pp)
                .map(|r| (r.0, r.2))
                .collect();
            let (argmax, fmax) = vals
                .iter()
                .cloned()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let interior = argmax != vals[0].0 && argmax != vals.last().unwrap().0;
            println!(
                "  p={pp}: argmax m_c={argmax} (interior: {interior}), fmax={fmax:.3e}"
            );
            let line: Vec<String> = vals.iter().map(|(m, f)| format!("{m}:{f:.2e}")).collect();
            println!("    {}", line.join(" "));
        }
    }
}
