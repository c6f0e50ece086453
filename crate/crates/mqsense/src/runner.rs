//! Configuration-driven pipelines behind the `mqsense` binary.
//!
//! A run is described by one JSON document; `run` executes the named
//! pipeline, writes CSV tables (plus optional SVG plots) into the output
//! directory and records a manifest with everything needed to reproduce the
//! outputs byte for byte. CSV rules: '.' decimal separator, 17 significant
//! digits, '\n' line endings, and a leading `# manifest=<run_id>` comment
//! naming the manifest that produced the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    dq_hamiltonian, phase_grid, phase_scan, spectrum_from_scan, v_operator, EvolutionConfig,
};
use crate::metrology::{distortion_variance, estimate_threshold, gaussian_fit, qfi_vs_max_order};
use crate::oracle;
use crate::states::{build_cluster, coherence_spectrum, thermal_state, ClusterSpec, WeightMode};
use crate::symbasis::SymmetricBasis;
use crate::{Error, Result};

/// Pipeline selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    BasisInfo,
    BuildCluster,
    MqcScan,
    JitterSweep,
    QfiSweep,
    OracleValidate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    #[serde(default = "default_phi_points")]
    pub phi_points: usize,
    #[serde(default = "default_true")]
    pub suppress_zero: bool,
}

fn default_phi_points() -> usize {
    181
}
fn default_true() -> bool {
    true
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            phi_points: default_phi_points(),
            suppress_zero: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterSweepSettings {
    pub delta_grid: Vec<f64>,
    pub m_c_grid: Vec<u32>,
    /// Dephasing applied to the prepared state before the reversal block.
    #[serde(default)]
    pub dephasing_p: f64,
    /// When set, a linear-fit detection threshold is reported per m_c.
    #[serde(default)]
    pub noise_rms: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiSweepSettings {
    pub m_c_grid: Vec<u32>,
    pub p_grid: Vec<f64>,
    #[serde(default = "default_modes")]
    pub weight_modes: Vec<WeightMode>,
}

fn default_modes() -> Vec<WeightMode> {
    vec![WeightMode::Equal, WeightMode::Gaussian]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleValidateSettings {
    #[serde(default = "default_oracle_n")]
    pub n_max: u32,
    #[serde(default = "default_oracle_samples")]
    pub samples: usize,
}

fn default_oracle_n() -> u32 {
    4
}
fn default_oracle_samples() -> usize {
    5
}

impl Default for OracleValidateSettings {
    fn default() -> Self {
        OracleValidateSettings {
            n_max: default_oracle_n(),
            samples: default_oracle_samples(),
        }
    }
}

/// One run configuration; the `pipeline` field selects which sections are
/// required.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub seed: u64,
    pub n_spins: Option<u32>,
    #[serde(default)]
    pub svg: bool,
    pub evolution: Option<EvolutionConfig>,
    pub cluster: Option<ClusterSpec>,
    #[serde(default)]
    pub scan: ScanSettings,
    pub jitter_sweep: Option<JitterSweepSettings>,
    pub qfi_sweep: Option<QfiSweepSettings>,
    #[serde(default)]
    pub oracle_validate: OracleValidateSettings,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| Error::ConfigError(format!("{e}")))?;
        cfg.validate_semantics()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    fn require_n_spins(&self) -> Result<u32> {
        self.n_spins
            .ok_or_else(|| Error::ConfigError("field `n_spins` is required".into()))
    }

    fn require_evolution(&self) -> Result<&EvolutionConfig> {
        self.evolution
            .as_ref()
            .ok_or_else(|| Error::ConfigError("section `evolution` is required".into()))
    }

    fn validate_semantics(&self) -> Result<()> {
        match self.pipeline {
            Pipeline::BasisInfo => {
                self.require_n_spins()?;
            }
            Pipeline::BuildCluster => {
                if self.cluster.is_none() {
                    return Err(Error::ConfigError("section `cluster` is required".into()));
                }
            }
            Pipeline::MqcScan => {
                self.require_n_spins()?;
                self.require_evolution()?.validate()?;
                if self.scan.phi_points < 2 {
                    return Err(Error::ConfigError("scan.phi_points must be ≥ 2".into()));
                }
            }
            Pipeline::JitterSweep => {
                self.require_n_spins()?;
                self.require_evolution()?.validate()?;
                let js = self.jitter_sweep.as_ref().ok_or_else(|| {
                    Error::ConfigError("section `jitter_sweep` is required".into())
                })?;
                if js.delta_grid.is_empty() || js.m_c_grid.is_empty() {
                    return Err(Error::ConfigError(
                        "jitter_sweep grids must be non-empty".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&js.dephasing_p) {
                    return Err(Error::ConfigError("dephasing_p must be in [0, 1]".into()));
                }
            }
            Pipeline::QfiSweep => {
                self.require_n_spins()?;
                let qs = self
                    .qfi_sweep
                    .as_ref()
                    .ok_or_else(|| Error::ConfigError("section `qfi_sweep` is required".into()))?;
                if qs.m_c_grid.is_empty() || qs.p_grid.is_empty() || qs.weight_modes.is_empty() {
                    return Err(Error::ConfigError("qfi_sweep grids must be non-empty".into()));
                }
            }
            Pipeline::OracleValidate => {}
        }
        Ok(())
    }
}

/// Full parameter record of a run; reproduces every output byte-identically.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub timestamp_unix: u64,
    pub artifact_version: String,
    pub seed: u64,
    pub threads: usize,
    pub config_digest_sha256: String,
    pub config: Config,
    pub outputs: Vec<OutputRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

pub fn artifact_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn sha_hex(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(data);
    hex_string(&h.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn run_id(config: &Config, seed: u64) -> String {
    let canon = serde_json::to_string(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(canon.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(artifact_version().as_bytes());
    hex_string(&h.finalize())[..16].to_string()
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates output files and their digests for the manifest.
struct OutputSink {
    dir: PathBuf,
    run_id: String,
    records: Vec<OutputRecord>,
}

impl OutputSink {
    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let text = format!("# manifest={}\n{}", self.run_id, body);
        let path = self.dir.join(name);
        fs::write(&path, text.as_bytes())?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: sha_hex(text.as_bytes()),
        });
        Ok(())
    }

    fn write_raw(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body.as_bytes())?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: sha_hex(body.as_bytes()),
        });
        Ok(())
    }
}

/// Validates a config file, returning the parsed document.
pub fn validate_config(path: &Path) -> Result<Config> {
    Config::from_file(path)
}

/// Executes the configured pipeline; returns the manifest path.
///
/// `seed_override` replaces the config seed; `threads` pins the rayon pool
/// size (0 = library default). Outputs are deterministic for a fixed
/// (config, seed) regardless of the thread count.
pub fn run_config(
    path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<PathBuf> {
    let config = Config::from_file(path)?;
    let config_text = fs::read_to_string(path)?;
    run_parsed(config, &config_text, out_dir, seed_override, threads)
}

pub fn run_parsed(
    mut config: Config,
    config_text: &str,
    out_dir: &Path,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<PathBuf> {
    if let Some(s) = seed_override {
        config.seed = s;
    }
    fs::create_dir_all(out_dir)?;
    let id = run_id(&config, config.seed);
    let mut sink = OutputSink {
        dir: out_dir.to_path_buf(),
        run_id: id.clone(),
        records: Vec::new(),
    };
    let mut warnings = Vec::new();

    let body = move |config: &Config, sink: &mut OutputSink, warnings: &mut Vec<String>| {
        match config.pipeline {
            Pipeline::BasisInfo => pipeline_basis_info(config, sink),
            Pipeline::BuildCluster => pipeline_build_cluster(config, sink),
            Pipeline::MqcScan => pipeline_mqc_scan(config, sink),
            Pipeline::JitterSweep => pipeline_jitter_sweep(config, sink, warnings),
            Pipeline::QfiSweep => pipeline_qfi_sweep(config, sink),
            Pipeline::OracleValidate => pipeline_oracle_validate(config, sink),
        }
    };

    if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::ConfigError(format!("thread pool: {e}")))?;
        pool.install(|| body(&config, &mut sink, &mut warnings))?;
    } else {
        body(&config, &mut sink, &mut warnings)?;
    }

    let manifest = RunManifest {
        run_id: id,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        artifact_version: artifact_version().to_string(),
        seed: config.seed,
        threads,
        config_digest_sha256: sha_hex(config_text.as_bytes()),
        config,
        outputs: sink.records,
        warnings,
    };
    let manifest_path = out_dir.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest_path)
}

fn pipeline_basis_info(config: &Config, sink: &mut OutputSink) -> Result<()> {
    let n = config.require_n_spins()?;
    let basis = SymmetricBasis::new(n)?;
    let mut buf = Vec::new();
    basis.dump_csv(&mut buf)?;
    sink.write("basis.csv", &String::from_utf8(buf).expect("utf8"))?;
    Ok(())
}

fn spectrum_csv(spec: &crate::states::CoherenceSpectrum) -> String {
    let mut s = String::from("q,intensity\n");
    for (q, v) in spec.iter() {
        s.push_str(&format!("{},{}\n", q, fmt_f(v)));
    }
    s
}

fn pipeline_build_cluster(config: &Config, sink: &mut OutputSink) -> Result<()> {
    let spec = config.cluster.as_ref().unwrap();
    let basis = SymmetricBasis::new(spec.n_spins)?;
    let rho = build_cluster(spec, &basis)?;
    let spectrum = coherence_spectrum(&rho);
    sink.write("spectrum.csv", &spectrum_csv(&spectrum))?;
    if let Ok(fit) = gaussian_fit(&spectrum) {
        sink.write_raw(
            "fit.json",
            &serde_json::to_string_pretty(&fit).expect("fit serializes"),
        )?;
    }
    if config.svg {
        let pts: Vec<(f64, f64)> = spectrum.iter().map(|(q, v)| (q as f64, v)).collect();
        sink.write_raw(
            "spectrum.svg",
            &svg_xy("coherence spectrum", "q", "intensity", &[("spectrum", &pts)]),
        )?;
    }
    Ok(())
}

fn pipeline_mqc_scan(config: &Config, sink: &mut OutputSink) -> Result<()> {
    let n = config.require_n_spins()?;
    let evo = config.require_evolution()?;
    let basis = SymmetricBasis::new(n)?;
    let seed = thermal_state(&basis);
    let phis = phase_grid(config.scan.phi_points);
    let signals = phase_scan(&seed, evo, &phis)?;

    let mut scan_body = String::from("phi,signal\n");
    for (p, s) in phis.iter().zip(signals.iter()) {
        scan_body.push_str(&format!("{},{}\n", fmt_f(*p), fmt_f(*s)));
    }
    sink.write("scan.csv", &scan_body)?;

    let spectrum = spectrum_from_scan(&phis, &signals, config.scan.suppress_zero, None)?;
    sink.write("spectrum.csv", &spectrum_csv(&spectrum))?;

    if config.svg {
        let pts: Vec<(f64, f64)> = phis.iter().zip(signals.iter()).map(|(&p, &s)| (p, s)).collect();
        sink.write_raw(
            "scan.svg",
            &svg_xy("phase scan", "phi", "signal", &[("signal", &pts)]),
        )?;
    }
    Ok(())
}

fn pipeline_jitter_sweep(
    config: &Config,
    sink: &mut OutputSink,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let n = config.require_n_spins()?;
    let evo = config.require_evolution()?;
    let js = config.jitter_sweep.as_ref().unwrap();
    let basis = SymmetricBasis::new(n)?;
    let seed = thermal_state(&basis);
    let phis = phase_grid(config.scan.phi_points);

    let mut spectra = Vec::new();
    for &delta in &js.delta_grid {
        let mut cfg = evo.clone();
        cfg.delta = delta;
        let signals = scan_with_dephasing(&seed, &cfg, js.dephasing_p, &phis)?;
        let spec = spectrum_from_scan(&phis, &signals, config.scan.suppress_zero, None)?
            .normalize_even_nonneg()?;
        spectra.push((delta, spec));
    }
    let (_, s0) = &spectra[0];
    if js.delta_grid[0] != 0.0 {
        warnings.push("first delta is nonzero; distortions are relative to it".into());
    }

    let mut body = String::from("delta,m_c,D\n");
    let mut per_mc: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for (delta, spec) in &spectra {
        for &m_c in &js.m_c_grid {
            let d = distortion_variance(s0, spec, m_c)?;
            body.push_str(&format!("{},{},{}\n", fmt_f(*delta), m_c, fmt_f(d.value)));
            per_mc.entry(m_c).or_default().push((*delta, d.value));
        }
    }
    sink.write("distortion.csv", &body)?;

    if let Some(noise) = js.noise_rms {
        let mut th = String::from("m_c,delta_threshold\n");
        for (m_c, samples) in &per_mc {
            match estimate_threshold(samples, noise) {
                Ok(t) => th.push_str(&format!("{},{}\n", m_c, fmt_f(t))),
                Err(e) => warnings.push(format!("threshold m_c={m_c}: {e}")),
            }
        }
        sink.write("threshold.csv", &th)?;
    }

    if config.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = per_mc
            .iter()
            .map(|(m_c, pts)| (format!("m_c={m_c}"), pts.clone()))
            .collect();
        let borrowed: Vec<(&str, &[(f64, f64)])> = series
            .iter()
            .map(|(n, p)| (n.as_str(), p.as_slice()))
            .collect();
        sink.write_raw(
            "distortion.svg",
            &svg_xy("distortion variance", "delta", "D", &borrowed),
        )?;
    }
    Ok(())
}

/// Phase scan with an extra dephasing channel applied to the prepared
/// state, modelling natural decoherence accumulated before the reversal.
pub fn scan_with_dephasing(
    seed: &crate::symbasis::SymOperator,
    cfg: &EvolutionConfig,
    p: f64,
    phis: &[f64],
) -> Result<Vec<f64>> {
    if p == 0.0 {
        return phase_scan(seed, cfg, phis);
    }
    // Run preparation here, dephase, and hand the rest to phase_scan with
    // l1 = 0 preparation... the reversal bookkeeping still needs l1, so
    // reuse phase_scan internals: prepare, dephase, then scan a config
    // whose preparation is empty but whose reversal matches.
    let basis = seed.basis().clone();
    let h = dq_hamiltonian(&basis, cfg.d);
    let v = v_operator(&basis, 4.0 * cfg.d);
    let prep = if cfg.l1 > 0 {
        crate::dynamics::propagate(
            seed,
            &h,
            &v,
            0.0,
            cfg.l1 as f64 * cfg.tau_c,
            cfg.steps_per_loop * cfg.l1 as usize,
        )?
        .state
    } else {
        seed.clone()
    };
    let prepared = crate::dynamics::dephase(&prep, p)?;
    phase_scan_prepared(&prepared, cfg, phis)
}

/// Scan of an already-prepared state: same protocol as [`phase_scan`] with
/// the preparation stage skipped (l1 enters only the reversal bookkeeping).
fn phase_scan_prepared(
    prepared: &crate::symbasis::SymOperator,
    cfg: &EvolutionConfig,
    phis: &[f64],
) -> Result<Vec<f64>> {
    use crate::dynamics::{propagate_with, rotate_z, Liouvillian, RunPlan};
    use rayon::prelude::*;
    cfg.validate()?;
    let basis = prepared.basis().clone();
    let h = dq_hamiltonian(&basis, cfg.d);
    let minus_h = h.scale(crate::C64::new(-1.0, 0.0));
    let v = v_operator(&basis, 4.0 * cfg.d);
    let observable = thermal_state(&basis);
    let reverse_jit = Liouvillian::new(&minus_h, &v, cfg.kappa());
    let reverse_clean = Liouvillian::new(&minus_h, &v, 0.0);
    let makeup = match cfg.run_plan {
        RunPlan::EchoMatched => cfg.l1 - cfg.l2,
        RunPlan::PartialReversal => 0,
    };
    phis.par_iter()
        .map(|&phi| {
            let mut rho = rotate_z(prepared, phi);
            if cfg.l2 > 0 {
                rho = propagate_with(
                    &reverse_jit,
                    &rho,
                    cfg.l2 as f64 * cfg.tau_c,
                    cfg.steps_per_loop * cfg.l2 as usize,
                )?
                .state;
            }
            if makeup > 0 {
                rho = propagate_with(
                    &reverse_clean,
                    &rho,
                    makeup as f64 * cfg.tau_c,
                    cfg.steps_per_loop * makeup as usize,
                )?
                .state;
            }
            let rho = rotate_z(&rho, -phi);
            Ok(observable.hs_inner(&rho)?.re)
        })
        .collect()
}

fn pipeline_qfi_sweep(config: &Config, sink: &mut OutputSink) -> Result<()> {
    let n = config.require_n_spins()?;
    let qs = config.qfi_sweep.as_ref().unwrap();
    for &mode in &qs.weight_modes {
        let rows = qfi_vs_max_order(n, &qs.m_c_grid, &qs.p_grid, mode)?;
        let mut body = String::from("m_c,p,qfi\n");
        for (m_c, p, f) in &rows {
            body.push_str(&format!("{},{},{}\n", m_c, fmt_f(*p), fmt_f(*f)));
        }
        let name = match mode {
            WeightMode::Equal => "qfi_equal.csv",
            WeightMode::Gaussian => "qfi_gaussian.csv",
        };
        sink.write(name, &body)?;
        if config.svg {
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for &(m_c, p, f) in &rows {
                series
                    .entry(format!("p={p}"))
                    .or_default()
                    .push((m_c as f64, f));
            }
            let borrowed: Vec<(&str, &[(f64, f64)])> = series
                .iter()
                .map(|(k, v)| (k.as_str(), v.as_slice()))
                .collect();
            sink.write_raw(
                &name.replace(".csv", ".svg"),
                &svg_xy("QFI vs maximum order", "m_c", "QFI", &borrowed),
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleCheck {
    test: String,
    n_spins: u32,
    tolerance: f64,
    max_deviation: f64,
    pass: bool,
}

fn pipeline_oracle_validate(config: &Config, sink: &mut OutputSink) -> Result<()> {
    use rand::SeedableRng;
    let settings = &config.oracle_validate;
    let n = settings.n_max.clamp(2, 6);
    let mut checks = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);

    // label counts
    let mut dev = 0.0f64;
    for k in 1..=40u32 {
        let b = SymmetricBasis::new(k)?;
        let kk = k as usize;
        let want = (kk + 1) * (kk + 2) * (kk + 3) / 6;
        dev = dev.max((b.len() as f64 - want as f64).abs());
    }
    checks.push(OracleCheck {
        test: "basis label counts".into(),
        n_spins: 40,
        tolerance: 0.0,
        max_deviation: dev,
        pass: dev == 0.0,
    });

    // structure constants vs brute force
    let nb = n.min(4);
    let basis = SymmetricBasis::new(nb)?;
    let mut dev = 0.0f64;
    for &e1 in basis.labels() {
        for &e2 in basis.labels() {
            let fast = basis.structure_constants(e1, e2)?;
            let brute = oracle::brute_structure_constants(&basis, e1, e2)?;
            let mut fm: BTreeMap<u32, f64> = fast.into_iter().collect();
            for (h, c) in brute {
                let f = fm.remove(&h).unwrap_or(0.0);
                dev = dev.max((crate::C64::new(f, 0.0) - c).norm());
            }
            for (_, f) in fm {
                dev = dev.max(f.abs());
            }
        }
    }
    checks.push(OracleCheck {
        test: "structure constants vs brute force".into(),
        n_spins: nb,
        tolerance: 1e-10,
        max_deviation: dev,
        pass: dev < 1e-10,
    });

    // multiply vs dense product
    let basis = SymmetricBasis::new(n)?;
    let mut dev = 0.0f64;
    for _ in 0..settings.samples {
        let a = oracle::random_symmetric_hermitian(&basis, &mut rng);
        let b = oracle::random_symmetric_hermitian(&basis, &mut rng);
        let engine = a.multiply(&b)?;
        let exact = oracle::project(&(oracle::embed(&a) * oracle::embed(&b)), &basis);
        dev = dev.max(engine.sub(&exact)?.hs_norm());
    }
    checks.push(OracleCheck {
        test: "multiply vs dense product".into(),
        n_spins: n,
        tolerance: 1e-10,
        max_deviation: dev,
        pass: dev < 1e-10,
    });

    // toggling average vs double-quantum form
    let sys = oracle::SpinSystem::uniform(n.min(4), 1.0)?;
    let seq = oracle::eight_pulse_cycle(1.0, 0.05)?;
    let avg = oracle::toggling_average(&sys, &seq, &[0.0; 8]);
    let target = oracle::dq_exact(&sys);
    let alpha = crate::linalg::hs_inner_dense(&target, &avg).re
        / crate::linalg::hs_inner_dense(&target, &target).re;
    let resid = crate::linalg::fro_norm(
        &(&avg - &target.map(|x| x * crate::C64::new(alpha, 0.0))),
    ) / crate::linalg::fro_norm(&avg);
    let dev = resid.max((alpha - 1.0).abs());
    checks.push(OracleCheck {
        test: "error-free cycle average is the double-quantum form".into(),
        n_spins: n.min(4),
        tolerance: 1e-12,
        max_deviation: dev,
        pass: dev < 1e-12,
    });

    // qfi vs spectral formula
    let mut dev = 0.0f64;
    for _ in 0..settings.samples {
        let rho = oracle::random_symmetric_density(&basis, &mut rng);
        let g = crate::states::collective_z_operator(&basis);
        let engine = crate::metrology::qfi(&rho, &g)?.value;
        let exact = oracle::qfi_exact(&oracle::embed(&rho), &oracle::collective_z(n))?;
        dev = dev.max((engine - exact).abs() / exact.abs().max(1e-12));
    }
    checks.push(OracleCheck {
        test: "qfi vs spectral decomposition".into(),
        n_spins: n,
        tolerance: 1e-6,
        max_deviation: dev,
        pass: dev < 1e-6,
    });

    let body = serde_json::to_string_pretty(&checks).expect("checks serialize");
    sink.write_raw("oracle_report.json", &body)?;
    if checks.iter().any(|c| !c.pass) {
        return Err(Error::InputError("oracle validation failed".into()));
    }
    Ok(())
}

/// Minimal SVG polyline plot; purely for eyeballing, never read by tests.
pub fn svg_xy(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, &[(f64, f64)])]) -> String {
    let (w, h, ml, mb, mt, mr) = (640.0, 420.0, 60.0, 46.0, 34.0, 16.0);
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() || x1 == x0 {
        x0 = 0.0;
        x1 = 1.0;
    }
    if !y0.is_finite() || y1 == y0 {
        y0 = 0.0;
        y1 = 1.0;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mb - mt);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        w / 2.0
    );
    s.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb,
        h - mb
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>\n\
         <text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{ylabel}</text>\n",
        (ml + w - mr) / 2.0,
        h - 10.0,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    for (k, &(x, lab)) in [(x0, "min"), (x1, "max")].iter().enumerate() {
        let _ = lab;
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{:.3}</text>\n",
            if k == 0 { ml } else { w - mr },
            h - mb + 14.0,
            x
        ));
    }
    for (k, &y) in [y0, y1].iter().enumerate() {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">{:.3e}</text>\n",
            ml - 4.0,
            if k == 0 { h - mb } else { mt + 4.0 },
            y
        ));
    }
    for (idx, (name, p)) in series.iter().enumerate() {
        let color = palette[idx % palette.len()];
        let path: Vec<String> = p
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"11\">{name}</text>\n",
            w - mr - 120.0,
            mt + 16.0 * (idx as f64 + 1.0)
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_fields_and_missing_sections() {
        let bad = r#"{"pipeline": "basis-info", "n_spins": 4, "bogus": 1}"#;
        let err = Config::from_str(bad).unwrap_err();
        assert!(format!("{err}").contains("bogus"));

        let missing = r#"{"pipeline": "mqc-scan", "n_spins": 4}"#;
        assert!(Config::from_str(missing).is_err());

        let ok = r#"{"pipeline": "basis-info", "n_spins": 4}"#;
        assert!(Config::from_str(ok).is_ok());
    }

    #[test]
    fn run_ids_depend_on_config_and_seed() {
        let a = Config::from_str(r#"{"pipeline": "basis-info", "n_spins": 4}"#).unwrap();
        let b = Config::from_str(r#"{"pipeline": "basis-info", "n_spins": 5}"#).unwrap();
        assert_ne!(run_id(&a, 0), run_id(&b, 0));
        assert_ne!(run_id(&a, 0), run_id(&a, 1));
        assert_eq!(run_id(&a, 7), run_id(&a, 7));
    }

    #[test]
    fn float_formatting_is_full_precision() {
        let x = 0.1f64 + 0.2;
        let s = fmt_f(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn svg_writer_emits_polylines() {
        let pts = [(0.0, 0.0), (1.0, 1.0)];
        let s = svg_xy("t", "x", "y", &[("a", &pts)]);
        assert!(s.contains("<polyline"));
        assert!(s.contains("</svg>"));
    }
}
