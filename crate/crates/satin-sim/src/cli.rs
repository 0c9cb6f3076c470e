//! Config-driven experiment runner behind the `satin` binary: schema
//! validation, deterministic parallel sweeps, and figure-ready data files.
//!
//! Every run writes its data files plus a manifest recording the config
//! hash, seed, artifact version, and wall time. Tasks are distributed over a
//! worker pool with per-task seeds derived from the root seed by the
//! documented splitting rule, so outputs are byte-identical for any worker
//! count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{self, CavityConfig};
use crate::dicke::RotationAxis;
use crate::noise::{self, NoiseBudget};
use crate::satin::{self, NoiseSource, ProtocolSequence, Step};
use crate::wigner;
use crate::{task_seed, Error, Result};

/// Experiment mode; selects which outputs a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    SweepQ,
    SweepUntwist,
    SweepN,
    Amplify,
    Ramsey,
    Wigner,
    Allan,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File-name stem for every artifact of this run.
    pub stem: String,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Ideal,
    Model,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    #[serde(default = "default_polar")]
    pub n_polar: usize,
    #[serde(default = "default_azimuth")]
    pub n_azimuth: usize,
    /// Write the dense float64 matrix with the 8-value header instead of CSV.
    #[serde(default)]
    pub binary: bool,
}

fn default_polar() -> usize {
    96
}
fn default_azimuth() -> usize {
    192
}

/// Versioned experiment configuration. Unknown keys are rejected so a config
/// that drifts from the schema fails loudly instead of silently changing the
/// figure it reproduces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub mode: Mode,
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default)]
    pub atom_numbers: Vec<usize>,
    #[serde(default)]
    pub cavity: CavityConfig,
    /// Explicit noise override; when absent, model modes derive the budget
    /// from the cavity at the optimized detuning.
    #[serde(default)]
    pub noise: Option<NoiseBudget>,
    #[serde(default = "default_source")]
    pub noise_source: SourceKind,
    #[serde(default)]
    pub q_plus: Option<f64>,
    #[serde(default)]
    pub q_list: Vec<f64>,
    #[serde(default)]
    pub q_minus_list: Vec<f64>,
    #[serde(default)]
    pub phi_list: Vec<f64>,
    #[serde(default)]
    pub shots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sequence: Option<Vec<Step>>,
    #[serde(default)]
    pub wigner: Option<WignerSpec>,
    pub output: OutputSpec,
}

fn default_atoms() -> usize {
    220
}
fn default_source() -> SourceKind {
    SourceKind::Model
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected 1)",
                self.version
            )));
        }
        if self.atoms == 0 {
            return Err(Error::Config("atoms must be >= 1".into()));
        }
        if self.shots > 0 && self.seed.is_none() {
            return Err(Error::Config("seed is mandatory whenever shots > 0".into()));
        }
        if self.output.stem.is_empty() {
            return Err(Error::Config("output.stem must be nonempty".into()));
        }
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("mode {:?} requires {what}", self.mode)))
            }
        };
        match self.mode {
            Mode::Simulate => need(self.sequence.is_some(), "a sequence")?,
            Mode::SweepQ => need(!self.q_list.is_empty(), "q_list")?,
            Mode::SweepUntwist => need(
                self.q_plus.is_some() && !self.q_minus_list.is_empty(),
                "q_plus and q_minus_list",
            )?,
            Mode::SweepN => need(self.atom_numbers.len() >= 2, "atom_numbers (>= 2)")?,
            Mode::Amplify => need(
                !self.q_list.is_empty() && !self.phi_list.is_empty(),
                "q_list and phi_list",
            )?,
            Mode::Ramsey | Mode::Allan | Mode::Optimize => {
                need(self.q_plus.is_some(), "q_plus")?
            }
            Mode::Wigner => need(self.sequence.is_some() || self.q_plus.is_some(),
                "a sequence or q_plus")?,
        }
        self.cavity.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    fn base_cavity(&self, n_atoms: usize) -> CavityConfig {
        let mut c = self.cavity.clone();
        c.n_atoms = n_atoms;
        c
    }
}

/// CLI-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    config_hash_fnv64: String,
    seed: Option<u64>,
    artifact_version: String,
    wall_time_ms: u128,
    workers: usize,
    outputs: Vec<String>,
}

/// Summary of one completed run.
#[derive(Debug)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// One output table: header (name, unit) pairs plus rows.
struct Table {
    name: String,
    columns: Vec<(&'static str, &'static str)>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, columns: Vec<(&'static str, &'static str)>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new() }
    }

    fn check_finite(&self) -> Result<()> {
        for row in &self.rows {
            if row.iter().any(|v| v.is_nan() || v.is_infinite()) {
                return Err(Error::Numeric(format!(
                    "non-finite value in output table {}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| if u.is_empty() { n.to_string() } else { format!("{n} ({u})") })
            .collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (ri, row) in self.rows.iter().enumerate() {
            if ri > 0 {
                out.push(',');
            }
            out.push_str("\n  {");
            for (ci, ((name, _), v)) in self.columns.iter().zip(row).enumerate() {
                if ci > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "\"{name}\": {v}");
            }
            out.push('}');
        }
        out.push_str("\n]\n");
        out
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(e.to_string()))
}

/// Number of workers: CLI flag, else SATIN_WORKERS, else all cores.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    requested
        .or_else(|| {
            std::env::var("SATIN_WORKERS").ok().and_then(|v| v.parse().ok())
        })
        .filter(|&w| w > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

/// Execute a config file and write its outputs. Deterministic per seed and
/// independent of worker count.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunSummary> {
    let started = Instant::now();
    let raw = fs::read(config_path)
        .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
    let mut config = ExperimentConfig::from_path(config_path)?;
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    if let Some(f) = overrides.format {
        config.output.format = f;
    }
    config.validate()?;
    let workers = resolve_workers(overrides.workers);
    let out_dir = overrides
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;

    let pool = thread_pool(workers)?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut extra_json: Vec<(String, String)> = Vec::new();
    let mut tables: Vec<Table> = Vec::new();
    let mut binary_files: Vec<(String, Vec<u8>)> = Vec::new();

    pool.install(|| -> Result<()> {
        match config.mode {
            Mode::SweepQ => tables.extend(mode_sweep_q(&config)?),
            Mode::SweepUntwist => tables.push(mode_sweep_untwist(&config)?),
            Mode::SweepN => {
                let (t, j) = mode_sweep_n(&config)?;
                tables.push(t);
                extra_json.push(j);
            }
            Mode::Amplify => tables.push(mode_amplify(&config)?),
            Mode::Simulate => {
                let (t, j) = mode_simulate(&config)?;
                tables.extend(t);
                extra_json.extend(j);
            }
            Mode::Ramsey => extra_json.push(mode_ramsey(&config)?),
            Mode::Allan => {
                let (t, j) = mode_allan(&config)?;
                tables.push(t);
                extra_json.push(j);
            }
            Mode::Optimize => {
                let (t, j) = mode_optimize(&config)?;
                tables.push(t);
                extra_json.push(j);
            }
            Mode::Wigner => binary_files.push(mode_wigner(&config)?),
        }
        Ok(())
    })?;

    for t in &tables {
        t.check_finite()?;
        let (ext, body) = match config.output.format {
            OutputFormat::Csv => ("csv", t.to_csv()),
            OutputFormat::Json => ("json", t.to_json()),
        };
        let path = out_dir.join(format!("{}_{}.{ext}", config.output.stem, t.name));
        fs::write(&path, body)?;
        outputs.push(path);
    }
    for (name, body) in &extra_json {
        let path = out_dir.join(format!("{}_{}.json", config.output.stem, name));
        fs::write(&path, body)?;
        outputs.push(path);
    }
    for (name, body) in &binary_files {
        let path = out_dir.join(format!("{}_{}", config.output.stem, name));
        fs::write(&path, body)?;
        outputs.push(path);
    }

    let manifest = Manifest {
        config_hash_fnv64: format!("{:016x}", fnv64(&raw)),
        seed: config.seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: started.elapsed().as_millis(),
        workers,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    let manifest_path = out_dir.join(format!("{}_manifest.json", config.output.stem));
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok(RunSummary { outputs, manifest: manifest_path })
}

fn atom_list(config: &ExperimentConfig) -> Vec<usize> {
    if config.atom_numbers.is_empty() {
        vec![config.atoms]
    } else {
        config.atom_numbers.clone()
    }
}

fn mode_sweep_q(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let mut tables = Vec::new();
    for &n in &atom_list(config) {
        let rows: Vec<Result<Vec<f64>>> = config
            .q_list
            .par_iter()
            .map(|&q| {
                let m_exact = satin::amplification_exact(n, q)?;
                let m_analytic = satin::amplification_analytic(q, n, 1.0);
                let (m_model, csc, i_tot, sig2, g, ntr, xa) = match config.noise_source {
                    SourceKind::Ideal => {
                        let g = satin::gain(m_exact, 1.0)?;
                        (m_exact, 1.0, 0.0, 1.0, g, 0.0, 0.0)
                    }
                    SourceKind::Model => {
                        let b = satin::model_gain_at(&config.base_cavity(n), n, q)?;
                        let mm = satin::amplification_analytic(q, n, b.contrast_sc);
                        let sig2 = 10f64.powf(b.nonunitary_db / 10.0);
                        (mm, b.contrast_sc, b.i_tot, sig2, b.gain_db, b.n_tr_per_pulse, b.x_a)
                    }
                };
                Ok(vec![
                    n as f64, q, m_exact, m_analytic, m_model, csc, i_tot, sig2, g, ntr, xa,
                ])
            })
            .collect();
        let mut table = Table::new(
            if atom_list(config).len() == 1 { "sweep_q".into() } else { format!("sweep_q_n{n}") }
                .as_str(),
            vec![
                ("n_atoms", ""),
                ("q_plus", ""),
                ("m_exact", ""),
                ("m_analytic", ""),
                ("m_model", ""),
                ("contrast_sc", ""),
                ("i_tot", "css variance units"),
                ("sigma_y_sq_model", "css variance units"),
                ("gain_db", "dB"),
                ("n_tr_per_pulse", "photons"),
                ("x_a", "2*detuning/gamma"),
            ],
        );
        for r in rows {
            table.rows.push(r?);
        }
        tables.push(table);
    }
    Ok(tables)
}

fn mode_sweep_untwist(config: &ExperimentConfig) -> Result<Table> {
    let n = config.atoms;
    let qp = config.q_plus.unwrap();
    let opt = cavity::optimize_detuning(&config.base_cavity(n), qp)?;
    let rows: Vec<Result<Vec<f64>>> = config
        .q_minus_list
        .par_iter()
        .map(|&qm| {
            let pred = noise::predict_untwist_variance(&opt, qp, qm)?;
            // exact noiseless reversal for reference
            let seq = ProtocolSequence::new(vec![
                Step::Twist { q_tilde: qp },
                Step::Twist { q_tilde: qm },
                Step::Measure { axis: RotationAxis::Y },
            ])?;
            let exact = satin::run_sequence(&seq, n, None, None)?;
            Ok(vec![
                qm,
                pred.sigma_y_sq,
                pred.sigma_y_sq_hp,
                pred.delta_tau_sq,
                exact.sigma_y_sq,
            ])
        })
        .collect();
    let mut table = Table::new(
        "sweep_untwist",
        vec![
            ("q_minus", ""),
            ("sigma_y_sq_model", "css variance units"),
            ("sigma_y_sq_hp", "css variance units"),
            ("delta_tau_sq", "rad^2"),
            ("sigma_y_sq_exact_noiseless", "css variance units"),
        ],
    );
    for r in rows {
        table.rows.push(r?);
    }
    Ok(table)
}

fn mode_sweep_n(config: &ExperimentConfig) -> Result<(Table, (String, String))> {
    let source = match config.noise_source {
        SourceKind::Ideal => NoiseSource::Ideal,
        SourceKind::Model => NoiseSource::FullModel(config.base_cavity(config.atoms)),
    };
    let ns = atom_list(config);
    let scaling = satin::heisenberg_sweep(&ns, &source)?;
    let mut table = Table::new(
        "sweep_n",
        vec![
            ("n_atoms", ""),
            ("gain_db", "dB"),
            ("hl_distance_db", "dB"),
            ("q_opt", ""),
            ("qshift_db", "dB"),
            ("contrast_db", "dB"),
            ("nonunitary_db", "dB"),
        ],
    );
    for (i, &n) in scaling.atom_numbers.iter().enumerate() {
        let b = &scaling.budgets[i];
        table.rows.push(vec![
            n as f64,
            scaling.gains_db[i],
            scaling.hl_distance_db[i],
            scaling.q_opt[i],
            b.qshift_db,
            b.contrast_db,
            b.nonunitary_db,
        ]);
    }
    let summary = serde_json::json!({
        "fit_slope": scaling.fit_slope,
        "atom_numbers": scaling.atom_numbers,
        "hl_distance_db": scaling.hl_distance_db,
    });
    Ok((table, ("scaling".into(), serde_json::to_string_pretty(&summary).unwrap())))
}

fn mode_amplify(config: &ExperimentConfig) -> Result<Table> {
    let n = config.atoms;
    let tasks: Vec<(f64, f64)> = config
        .q_list
        .iter()
        .flat_map(|&q| config.phi_list.iter().map(move |&p| (q, p)))
        .collect();
    let rows: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(q, phi)| {
            let seq = ProtocolSequence::new(vec![
                Step::Twist { q_tilde: q },
                Step::Rotate { axis: RotationAxis::Y, angle: phi },
                Step::Twist { q_tilde: -q },
                Step::Measure { axis: RotationAxis::Y },
            ])?;
            let exact = satin::run_sequence(&seq, n, None, None)?;
            let model_mean = match config.noise_source {
                SourceKind::Ideal => exact.mean_sy_norm,
                SourceKind::Model => {
                    let opt = cavity::optimize_detuning(&config.base_cavity(n), q)?;
                    let nb = NoiseBudget::from_cavity(&opt, q, -q)?;
                    nb.contrast_sc * exact.mean_sy_norm
                }
            };
            Ok(vec![q, phi, exact.mean_sy_norm, model_mean, exact.sigma_y_sq])
        })
        .collect();
    let mut table = Table::new(
        "amplify",
        vec![
            ("q_plus", ""),
            ("phi", "rad"),
            ("mean_sy_norm_exact", ""),
            ("mean_sy_norm_model", ""),
            ("sigma_y_sq_exact", "css variance units"),
        ],
    );
    for r in rows {
        table.rows.push(r?);
    }
    Ok(table)
}

fn mode_simulate(
    config: &ExperimentConfig,
) -> Result<(Vec<Table>, Vec<(String, String)>)> {
    let seq = ProtocolSequence::new(config.sequence.clone().unwrap())?;
    let n = config.atoms;
    let noise = effective_noise(config, n)?;
    let result = if config.shots > 0 {
        satin::run_sequence_with_shots(&seq, n, noise.as_ref(), config.seed, config.shots)?
    } else {
        satin::run_sequence(&seq, n, noise.as_ref(), None)?
    };
    let mut tables = Vec::new();
    // re-run the unitary part to export the final-state distribution
    let state = satin::evolve_steps(&seq.steps, n)?;
    let dist = state.measure_distribution(seq.measure_axis());
    let mut dtable = Table::new("distribution", vec![("m", ""), ("probability", "")]);
    for (k, p) in dist.iter().enumerate() {
        dtable.rows.push(vec![k as f64 - n as f64 / 2.0, *p]);
    }
    tables.push(dtable);
    if let Some(shots) = &result.shots {
        let mut st = Table::new("shots", vec![("shot_index", ""), ("outcome_m", "")]);
        for (i, m) in shots.iter().enumerate() {
            st.rows.push(vec![i as f64, *m]);
        }
        tables.push(st);
    }
    let summary = serde_json::json!({
        "mean_sy_norm": result.mean_sy_norm,
        "sigma_y_sq": result.sigma_y_sq,
        "ci_mean": result.ci_mean,
        "ci_sigma_y_sq": result.ci_sigma_y_sq,
    });
    Ok((
        tables,
        vec![("result".into(), serde_json::to_string_pretty(&summary).unwrap())],
    ))
}

fn effective_noise(config: &ExperimentConfig, n: usize) -> Result<Option<NoiseBudget>> {
    match (&config.noise, config.noise_source, config.q_plus) {
        (Some(nb), _, _) => Ok(Some(*nb)),
        (None, SourceKind::Model, Some(q)) if q != 0.0 => {
            let opt = cavity::optimize_detuning(&config.base_cavity(n), q)?;
            Ok(Some(NoiseBudget::from_cavity(&opt, q, -q)?))
        }
        _ => Ok(None),
    }
}

fn mode_ramsey(config: &ExperimentConfig) -> Result<(String, String)> {
    let n = config.atoms;
    let q = config.q_plus.unwrap();
    let noise = effective_noise(config, n)?
        .unwrap_or_else(NoiseBudget::ideal);
    let phase = config.phi_list.first().copied().unwrap_or(0.0);
    let seed = config.seed.unwrap_or(0);
    let run = satin::ramsey_echo_run(q, phase, n, &noise, seed)?;
    let g = run.gain_db.unwrap_or(f64::NAN);
    if !g.is_finite() {
        return Err(Error::Numeric("ramsey gain is not finite".into()));
    }
    let summary = serde_json::json!({
        "n_atoms": n,
        "q_plus": q,
        "phase": phase,
        "mean_sy_norm": run.mean_sy_norm,
        "sigma_y_sq": run.sigma_y_sq,
        "amplification_m": run.amplification_m,
        "gain_db": run.gain_db,
        "noise": noise,
        "shots": run.shots,
    });
    Ok(("ramsey".into(), serde_json::to_string_pretty(&summary).unwrap()))
}

fn mode_allan(config: &ExperimentConfig) -> Result<(Table, (String, String))> {
    let n = config.atoms;
    let q = config.q_plus.unwrap();
    let shots = if config.shots > 0 { config.shots } else { 16384 };
    let seed = config.seed.unwrap_or(0);
    let noise = effective_noise(config, n)?;
    let satin_rec =
        satin::simulate_phase_record(n, q, noise.as_ref(), shots, task_seed(seed, 1))?;
    let css_rec = satin::simulate_phase_record(n, 0.0, None, shots, task_seed(seed, 2))?;
    let (taus, ad_satin) = satin::allan_deviation(&satin_rec, 1.0)?;
    let (_, ad_css) = satin::allan_deviation(&css_rec, 1.0)?;
    let mut table = Table::new(
        "allan",
        vec![
            ("tau", "samples"),
            ("adev_satin", "rad"),
            ("adev_css", "rad"),
            ("ratio", ""),
        ],
    );
    for i in 0..taus.len() {
        table
            .rows
            .push(vec![taus[i], ad_satin[i], ad_css[i], ad_satin[i] / ad_css[i]]);
    }
    let summary = serde_json::json!({
        "slope_satin": satin::loglog_slope(&taus, &ad_satin),
        "slope_css": satin::loglog_slope(&taus, &ad_css),
        "gain_db_from_ratio": -20.0 * (ad_satin[0] / ad_css[0]).log10(),
        "shots": shots,
    });
    Ok((table, ("allan_summary".into(), serde_json::to_string_pretty(&summary).unwrap())))
}

fn mode_optimize(config: &ExperimentConfig) -> Result<(Table, (String, String))> {
    let n = config.atoms;
    let q = config.q_plus.unwrap();
    let base = config.base_cavity(n);
    let opt = cavity::optimize_detuning(&base, q)?;
    let budget = satin::model_gain_at(&base, n, q)?;
    // detuning sweep export around the optimum decades
    let points = cavity::detuning_sweep(&base, q, 1.0, 1000.0, 600)?;
    let mut table = Table::new(
        "detuning_sweep",
        vec![
            ("x_a", "2*detuning/gamma"),
            ("x_c", "2*detuning/kappa"),
            ("q_per_photon", "1/photon"),
            ("broadening_per_photon", "1/photon"),
            ("scattered_per_photon", ""),
            ("transmission", ""),
            ("predicted_gain_db", "dB"),
        ],
    );
    for p in &points {
        if !p.predicted_gain_db.is_finite() {
            continue; // infeasible detunings are simply absent from the curve
        }
        table.rows.push(vec![
            p.x_a,
            p.x_c,
            p.q_per_photon,
            p.broadening_per_photon,
            p.scattered_per_photon,
            p.transmission,
            p.predicted_gain_db,
        ]);
    }
    let summary = serde_json::json!({
        "optimal": {
            "x_a": opt.x_a,
            "x_c": opt.x_c,
            "n_tr_per_pulse": opt.n_tr_tot,
            "transmission": cavity::symmetric_transmission(&opt),
        },
        "budget": budget,
    });
    Ok((table, ("optimum".into(), serde_json::to_string_pretty(&summary).unwrap())))
}

const WIGNER_MAGIC: u64 = 0x5749_474e_4552_3031; // "WIGNER01"

fn mode_wigner(config: &ExperimentConfig) -> Result<(String, Vec<u8>)> {
    let n = config.atoms;
    let steps = match (&config.sequence, config.q_plus) {
        (Some(s), _) => s.clone(),
        (None, Some(q)) => vec![Step::Twist { q_tilde: q }],
        _ => unreachable!("validated"),
    };
    let state = satin::evolve_steps(&steps, n)?;
    let spec = config.wigner.clone().unwrap_or(WignerSpec {
        n_polar: default_polar(),
        n_azimuth: default_azimuth(),
        binary: false,
    });
    let grid = wigner::wigner_grid(&state, spec.n_polar, spec.n_azimuth)?;
    if spec.binary {
        // 8 little-endian u64 header values, then row-major f64
        let mut bytes = Vec::with_capacity(64 + 8 * grid.values.len());
        for v in [
            WIGNER_MAGIC,
            1u64,
            n as u64,
            grid.n_polar as u64,
            grid.n_azimuth as u64,
            0,
            0,
            0,
        ] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in &grid.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        Ok(("wigner.bin".into(), bytes))
    } else {
        let mut s = String::from("theta (rad),phi (rad),w\n");
        for i in 0..grid.n_polar {
            for j in 0..grid.n_azimuth {
                let _ = writeln!(s, "{},{},{}", grid.theta(i), grid.phi(j), grid.value(i, j));
            }
        }
        Ok(("wigner.csv".into(), s.into_bytes()))
    }
}
