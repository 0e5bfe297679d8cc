//! End-to-end runs and scans: relax, propagate with walkers, classify, phase
//! statistics, observables, TDQMC entropies, artifacts and manifests.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::absorber::{AbsorberMask, ChannelProbabilities};
use crate::bohmian::{
    advance_walkers, classify, sample_initial, write_trajectory_csv, Channel, NodeRegularization,
    StoragePolicy, TrajectoryEnsemble,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::ground_state::{relax_ground_state, RelaxParams};
use crate::laser::{PulseShape, PulseSpec};
use crate::observables::{di_yield, entanglement, si_yield, DEFAULT_THRESHOLD};
use crate::par;
use crate::phase::{pair_series_phase_difference, phase_histogram, PhaseMismatchStats, RealTrace};
use crate::potential::build_potential;
use crate::propagator::{SplitOperator, TimeMode};
use crate::tdqmc::{entropy_by_channel, tdqmc_init, tdqmc_step, ChannelEntropies, TdqmcParams};
use crate::wavefunction::WaveFunction2D;

pub const ABSORBER_FRACTION: f64 = 0.1;
pub const NORM_CLOSURE_TOL: f64 = 1e-8;
pub const MAX_DEAD_WALKER_FRACTION: f64 = 0.01;
pub const MAX_DEAD_TDQMC_FRACTION: f64 = 0.05;
pub const GUIDE_NORM_TOL: f64 = 1e-10;
pub const MAX_ABSORBED_BOUND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Relax,
    Propagate,
    Classify,
    Phase,
    Observables,
    Tdqmc,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

impl StageError {
    pub fn is_validation(&self) -> bool {
        self.stage == Stage::Validate || matches!(self.error, Error::Config(_))
    }
}

trait Tag<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> Tag<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

/// Per-run observables file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub intensity_w_cm2: f64,
    pub chirp_sign: i32,
    pub di_yield: f64,
    pub si_yield: f64,
    pub entropy_nats: f64,
    pub inverse_purity: f64,
    pub absorbed: ChannelProbabilities,
    pub fwhm_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl HealthCheck {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Degraded,
    Failed,
}

/// Numbers behind the run that are not part of the observables file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub ground_state_energy: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub field_amplitude: Option<f64>,
    pub gaussian_width: Option<f64>,
    pub chirp: Option<f64>,
    pub r_abs: Option<f64>,
    pub phase_window: Option<(f64, f64)>,
    pub node_regularization: Option<NodeRegularization>,
    pub clamped_velocity_evaluations: Option<u64>,
    pub walkers_nsdi: Option<usize>,
    pub walkers_si: Option<usize>,
    pub walkers_bound: Option<usize>,
    pub walkers_dead: Option<usize>,
    pub phase_pairs: Option<usize>,
    pub phase_pairs_rejected: Option<usize>,
    pub rdm_stride: Option<usize>,
    pub tdqmc: Option<ChannelEntropies>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub code_version: String,
    pub wall_time_s: f64,
    pub status: RunStatus,
    pub failure_stage: Option<Stage>,
    pub failure: Option<String>,
    pub health: Vec<HealthCheck>,
    pub metadata: RunMetadata,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    /// Re-hashes every listed file under `dir`.
    pub fn verify(&self, dir: &Path) -> bool {
        self.files
            .iter()
            .all(|f| sha256_file(&dir.join(&f.path)).is_ok_and(|h| h == f.sha256))
    }
}

/// Relaxed ground state shared by all points of a scan.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: Arc<Grid2D>,
    pub psi0: WaveFunction2D,
    pub energy: f64,
    pub iterations: usize,
}

pub fn prepare(cfg: &RunConfig) -> std::result::Result<Prepared, StageError> {
    let g = cfg.grid();
    let grid = Arc::new(Grid2D::new(g.half_width, g.points).at(Stage::Validate)?);
    let relax = relax_ground_state(grid.clone(), &RelaxParams::default()).at(Stage::Relax)?;
    Ok(Prepared {
        grid,
        psi0: relax.psi,
        energy: relax.energy,
        iterations: relax.iterations,
    })
}

/// Phase-analysis window: the first `window_cycles` cycles of a trapezoid,
/// or `window_cycles` cycles ending one cycle after the Gaussian peak.
pub fn phase_window(pulse: &PulseSpec, window_cycles: f64) -> (f64, f64) {
    let tc = pulse.period();
    match pulse.shape {
        PulseShape::Trapezoid { .. } => (0.0, window_cycles * tc),
        PulseShape::Gaussian { .. } => ((1.0 - window_cycles) * tc, tc),
    }
}

/// Everything computed for one point, before writing.
#[derive(Debug, Clone)]
pub struct PointOutput {
    pub observables: Observables,
    pub phase: Option<PhaseMismatchStats>,
    pub health: Vec<HealthCheck>,
    pub metadata: RunMetadata,
    pub trajectories: TrajectoryEnsemble,
    pub channels: Vec<Option<crate::bohmian::Classification>>,
}

/// Runs one configuration from a prepared ground state.
#[allow(clippy::result_large_err)]
pub fn simulate(cfg: &RunConfig, prep: &Prepared) -> std::result::Result<PointOutput, (StageError, RunMetadata)> {
    let mut meta = RunMetadata {
        ground_state_energy: Some(prep.energy),
        ..Default::default()
    };
    macro_rules! tryst {
        ($e:expr, $stage:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => return Err((StageError { stage: $stage, error }, meta)),
            }
        };
    }
    tryst!(cfg.validate(), Stage::Validate);
    let pulse = tryst!(cfg.pulse_spec(), Stage::Validate);
    let grid = prep.grid.clone();
    let g = cfg.grid();
    let (t0, t1) = (pulse.start_time(), pulse.end_time());
    let steps = ((t1 - t0) / g.dt).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / steps as f64;
    let window = phase_window(&pulse, cfg.phase.window_cycles);
    meta.dt = Some(dt);
    meta.steps = Some(steps);
    meta.t_start = Some(t0);
    meta.t_end = Some(t1);
    meta.field_amplitude = Some(pulse.amplitude);
    if let PulseShape::Gaussian { width, chirp, .. } = pulse.shape {
        meta.gaussian_width = Some(width);
        meta.chirp = Some(chirp);
    }
    meta.phase_window = Some(window);
    let reg = NodeRegularization::default();
    meta.node_regularization = Some(reg);

    // propagation with walkers and TDQMC in lock-step
    let pot = build_potential(grid.clone());
    let mut op = tryst!(SplitOperator::new(&pot, dt, TimeMode::Real), Stage::Propagate);
    let mut mask = AbsorberMask::new(&grid, ABSORBER_FRACTION, DEFAULT_THRESHOLD);
    meta.r_abs = Some(mask.r_abs());
    let mut psi = prep.psi0.clone();
    psi.time = t0;
    let mut ens = tryst!(
        sample_initial(&psi, cfg.trajectories.count, cfg.trajectories.seed),
        Stage::Propagate
    );
    let policy = StoragePolicy {
        dense_window: window,
        dense_every: 1,
        sparse_every: cfg.trajectories.store_decimation,
    };
    let mut tq = if cfg.tdqmc.enabled {
        let params = TdqmcParams {
            smoothing: cfg.tdqmc.smoothing,
            absorber_fraction: ABSORBER_FRACTION,
            ..TdqmcParams::default()
        };
        Some(tryst!(
            tdqmc_init(&psi, cfg.tdqmc.count, cfg.tdqmc.seed, params),
            Stage::Tdqmc
        ))
    } else {
        None
    };
    let mut prev = psi.clone();
    let mut worst_closure: f64 = 0.0;
    let mut worst_guide_defect: f64 = 0.0;
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let field = pulse.field_at(t + 0.5 * dt);
        prev.values.copy_from_slice(&psi.values);
        prev.time = psi.time;
        tryst!(op.step(&mut psi, field), Stage::Propagate);
        psi.time = t0 + (s + 1) as f64 * dt;
        mask.apply(&mut psi);
        advance_walkers(&mut ens, &prev, &psi, dt, reg);
        if s + 1 == steps || policy.keeps(s + 1, psi.time) {
            ens.record(psi.time);
        }
        if let Some(tq) = tq.as_mut() {
            tryst!(tdqmc_step(tq, field, dt), Stage::Tdqmc);
            worst_guide_defect = worst_guide_defect.max(tq.last_norm_defect);
        }
        if (s + 1) % 500 == 0 || s + 1 == steps {
            let closure = (psi.norm_sqr() + mask.removed.total() - 1.0).abs();
            worst_closure = worst_closure.max(closure);
        }
    }
    meta.clamped_velocity_evaluations = Some(ens.clamped_evaluations);

    // classification at pulse end
    let channels = tryst!(classify(&ens, DEFAULT_THRESHOLD, psi.time), Stage::Classify);
    let count = |c: Channel| {
        channels
            .iter()
            .filter(|x| x.is_some_and(|x| x.channel == c))
            .count()
    };
    meta.walkers_nsdi = Some(count(Channel::Nsdi));
    meta.walkers_si = Some(count(Channel::Si));
    meta.walkers_bound = Some(count(Channel::Bound));
    let dead = ens.dead_count();
    meta.walkers_dead = Some(dead);

    // phase statistics over NSDI walkers
    let (stats, pairs_used, rejected) = tryst!(
        nsdi_phase_stats(cfg, &ens, &channels, window, dt),
        Stage::Phase
    );
    meta.phase_pairs = Some(pairs_used);
    meta.phase_pairs_rejected = Some(rejected);

    // observables at pulse end
    let absorbed = mask.removed;
    let ent = tryst!(entanglement(&psi, cfg.profile.max_rdm_dim()), Stage::Observables);
    meta.rdm_stride = Some(ent.stride);
    let observables = Observables {
        intensity_w_cm2: cfg.pulse.intensity_w_cm2,
        chirp_sign: cfg.pulse.chirp_sign,
        di_yield: di_yield(&psi, absorbed.di, DEFAULT_THRESHOLD),
        si_yield: si_yield(&psi, absorbed.si, DEFAULT_THRESHOLD),
        entropy_nats: ent.entropy_nats,
        inverse_purity: ent.inverse_purity,
        absorbed,
        fwhm_rad: stats.as_ref().and_then(|s| s.fwhm),
    };

    let mut health = vec![
        HealthCheck::at_most("norm_closure", worst_closure, NORM_CLOSURE_TOL),
        HealthCheck::at_most(
            "dead_walker_fraction",
            dead as f64 / ens.len() as f64,
            MAX_DEAD_WALKER_FRACTION,
        ),
        HealthCheck::at_most("absorbed_bound", absorbed.bound, MAX_ABSORBED_BOUND),
    ];
    if let Some(tq) = tq.as_mut() {
        tq.assign_tags();
        health.push(HealthCheck::at_most(
            "dead_tdqmc_fraction",
            tq.dead_count() as f64 / tq.len() as f64,
            MAX_DEAD_TDQMC_FRACTION,
        ));
        health.push(HealthCheck::at_most(
            "guide_norm_defect",
            worst_guide_defect,
            GUIDE_NORM_TOL,
        ));
        meta.tdqmc = Some(tryst!(
            entropy_by_channel(tq, 0, cfg.profile.max_rdm_dim()),
            Stage::Tdqmc
        ));
    }
    Ok(PointOutput {
        observables,
        phase: stats,
        health,
        metadata: meta,
        trajectories: ens,
        channels,
    })
}

/// Smoothed histogram of NSDI pair phase differences; `None` when too few
/// entries survive. Also returns (pairs used, pairs rejected).
fn nsdi_phase_stats(
    cfg: &RunConfig,
    ens: &TrajectoryEnsemble,
    channels: &[Option<crate::bohmian::Classification>],
    window: (f64, f64),
    dt: f64,
) -> Result<(Option<PhaseMismatchStats>, usize, usize)> {
    let slack = 1e-9 * (1.0 + window.0.abs().max(window.1.abs()));
    let idx: Vec<usize> = (0..ens.times.len())
        .filter(|&m| ens.times[m] >= window.0 - slack && ens.times[m] <= window.1 + slack)
        .collect();
    let Some((&first, &last)) = idx.first().zip(idx.last()) else {
        return Err(Error::Domain("phase window holds no recorded samples".into()));
    };
    if last - first + 1 != idx.len()
        || idx.windows(2).any(|w| ((ens.times[w[1]] - ens.times[w[0]]) - dt).abs() > 1e-6 * dt)
    {
        return Err(Error::Domain("phase window is not uniformly sampled".into()));
    }
    let nsdi: Vec<usize> = (0..ens.len())
        .filter(|&k| channels[k].is_some_and(|c| c.channel == Channel::Nsdi))
        .collect();
    let params = cfg.phase_params();
    let start = ens.times[first];
    let range = first..last + 1;
    let series = par::map(&nsdi, |&k| -> Result<Vec<f64>> {
        let a = RealTrace::new(ens.series(k, 0, range.clone()), dt, start)?;
        let b = RealTrace::new(ens.series(k, 1, range.clone()), dt, start)?;
        pair_series_phase_difference(&a, &b, window, &params)
    });
    let mut pairs = Vec::new();
    let mut rejected = 0;
    for s in series {
        match s {
            Ok(v) => pairs.push(v),
            Err(
                Error::DegenerateTrace(_)
                | Error::TraceRejected { .. }
                | Error::EmptyOverlap
                | Error::Domain(_),
            ) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    let used = pairs.len();
    match phase_histogram(&pairs, &params) {
        Ok(stats) => Ok((Some(stats), used, rejected)),
        Err(Error::InsufficientStatistics { .. }) => Ok((None, used, rejected)),
        Err(e) => Err(e),
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Writes through a temporary file and renames into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Result of [`run_single`]: the manifest plus observables when available.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub observables: Option<Observables>,
    pub failure: Option<(Stage, String)>,
}

/// Runs one point and writes its artifacts into `dir`.
pub fn run_single(cfg: &RunConfig, prep: &Prepared, dir: &Path) -> Result<RunOutcome> {
    let clock = Instant::now();
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let (status, failure, health, metadata, observables) = match simulate(cfg, prep) {
        Ok(out) => {
            files.push(("observables.json".into(), json_bytes(&out.observables)?));
            files.push(("trajectories.csv".into(), trajectory_csv(cfg, &out)?));
            if let Some(stats) = &out.phase {
                files.push(("phase_hist.csv".into(), phase_csv(stats)));
            }
            files.push((
                "phase_summary.json".into(),
                json_bytes(&PhaseSummary::new(cfg, &out))?,
            ));
            if let Some(e) = &out.metadata.tdqmc {
                files.push((
                    "tdqmc_entropy.csv".into(),
                    tdqmc_csv(&[(out.observables.chirp_sign, out.observables.intensity_w_cm2, *e)]),
                ));
            }
            let ok = out.health.iter().all(|h| h.pass);
            let status = if ok { RunStatus::Ok } else { RunStatus::Degraded };
            (status, None, out.health, out.metadata, Some(out.observables))
        }
        Err((e, meta)) => (
            RunStatus::Failed,
            Some((e.stage, e.error.to_string())),
            Vec::new(),
            meta,
            None,
        ),
    };
    let mut entries = Vec::new();
    for (name, bytes) in &files {
        write_atomic(&dir.join(name), bytes)?;
        entries.push(FileEntry {
            path: name.clone(),
            sha256: Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect(),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: clock.elapsed().as_secs_f64(),
        status,
        failure_stage: failure.as_ref().map(|f| f.0),
        failure: failure.as_ref().map(|f| f.1.clone()),
        health,
        metadata,
        files: entries,
    };
    write_atomic(&dir.join("manifest.json"), &json_bytes(&manifest)?)?;
    Ok(RunOutcome {
        manifest,
        observables,
        failure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub fwhm_rad: Option<f64>,
    pub n_pairs: usize,
    pub rejected_pairs: usize,
    pub entries: usize,
    pub window: (f64, f64),
    pub sigma_h: f64,
    pub bins: usize,
    pub pooling_mode: crate::phase::Pooling,
}

impl PhaseSummary {
    fn new(cfg: &RunConfig, out: &PointOutput) -> Self {
        Self {
            fwhm_rad: out.phase.as_ref().and_then(|s| s.fwhm),
            n_pairs: out.metadata.phase_pairs.unwrap_or(0),
            rejected_pairs: out.metadata.phase_pairs_rejected.unwrap_or(0),
            entries: out.phase.as_ref().map_or(0, |s| s.entries),
            window: out.metadata.phase_window.unwrap_or((0.0, 0.0)),
            sigma_h: cfg.phase.sigma_h,
            bins: cfg.phase.bins,
            pooling_mode: cfg.phase.pooling_mode,
        }
    }
}

fn phase_csv(stats: &PhaseMismatchStats) -> Vec<u8> {
    let mut s = String::from("bin_center,density\n");
    for (c, d) in stats.bin_centers.iter().zip(&stats.density) {
        s.push_str(&format!("{c:.8},{d:.10e}\n"));
    }
    s.into_bytes()
}

/// NSDI walkers first, then the rest, up to the configured cap.
fn trajectory_csv(cfg: &RunConfig, out: &PointOutput) -> Result<Vec<u8>> {
    let n = out.trajectories.len();
    let is_nsdi = |k: usize| out.channels[k].is_some_and(|c| c.channel == Channel::Nsdi);
    let mut chosen: Vec<usize> = (0..n).filter(|&k| is_nsdi(k)).collect();
    chosen.extend((0..n).filter(|&k| !is_nsdi(k)));
    chosen.truncate(cfg.trajectories.csv_walkers);
    chosen.sort_unstable();
    let mut buf = Vec::new();
    write_trajectory_csv(
        &mut buf,
        &out.trajectories,
        &out.channels,
        &chosen,
        cfg.trajectories.csv_stride,
    )?;
    Ok(buf)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.10e}"))
}

pub fn tdqmc_csv(rows: &[(i32, f64, ChannelEntropies)]) -> Vec<u8> {
    let mut s = String::from(
        "chirp_sign,intensity_w_cm2,S_all,S_nsdi,S_q13,S_q24,N_all,N_nsdi,N_q13,N_q24\n",
    );
    for (sign, i, e) in rows {
        s.push_str(&format!(
            "{sign},{i:e},{},{},{},{},{},{},{},{}\n",
            fmt_opt(e.all.entropy_nats),
            fmt_opt(e.nsdi.entropy_nats),
            fmt_opt(e.q13.entropy_nats),
            fmt_opt(e.q24.entropy_nats),
            e.all.selected,
            e.nsdi.selected,
            e.q13.selected,
            e.q24.selected
        ));
    }
    s.into_bytes()
}

/// One row of the scan table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub intensity_w_cm2: f64,
    pub chirp_sign: i32,
    pub status: RunStatus,
    pub di_yield: Option<f64>,
    pub si_yield: Option<f64>,
    pub fwhm_rad: Option<f64>,
    pub entropy_nats: Option<f64>,
    pub inverse_purity: Option<f64>,
    pub tdqmc: Option<ChannelEntropies>,
}

pub const SCAN_HEADER: &str =
    "intensity_w_cm2,chirp_sign,di_yield,si_yield,fwhm_rad,entropy_nats,inverse_purity,status";

pub fn scan_csv(rows: &[ScanRow]) -> Vec<u8> {
    let mut s = format!("{SCAN_HEADER}\n");
    for r in rows {
        let status = serde_json::to_value(r.status).unwrap_or_default();
        s.push_str(&format!(
            "{:e},{},{},{},{},{},{},{}\n",
            r.intensity_w_cm2,
            r.chirp_sign,
            fmt_opt(r.di_yield),
            fmt_opt(r.si_yield),
            fmt_opt(r.fwhm_rad),
            fmt_opt(r.entropy_nats),
            fmt_opt(r.inverse_purity),
            status.as_str().unwrap_or("?")
        ));
    }
    s.into_bytes()
}

pub fn parse_scan_csv(text: &str) -> Result<Vec<ScanRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SCAN_HEADER) {
        return Err(Error::Config("scan table header mismatch".into()));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("bad number `{s}` in scan table")))
        }
    };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Config(format!("scan row has {} fields", f.len())));
            }
            Ok(ScanRow {
                intensity_w_cm2: opt(f[0])?.unwrap_or(f64::NAN),
                chirp_sign: f[1]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad chirp sign `{}`", f[1])))?,
                di_yield: opt(f[2])?,
                si_yield: opt(f[3])?,
                fwhm_rad: opt(f[4])?,
                entropy_nats: opt(f[5])?,
                inverse_purity: opt(f[6])?,
                status: serde_json::from_value(serde_json::Value::String(f[7].into()))?,
                tdqmc: None,
            })
        })
        .collect()
}

fn series_label(sign: i32) -> &'static str {
    match sign {
        -1 => "chirp_negative",
        1 => "chirp_positive",
        _ => "transform_limited",
    }
}

/// Long-format plot data `series,intensity_w_cm2,value`.
fn plot_csv(rows: &[ScanRow], value: impl Fn(&ScanRow) -> Option<f64>) -> Vec<u8> {
    let mut s = String::from("series,intensity_w_cm2,value\n");
    for r in rows {
        if let Some(v) = value(r) {
            s.push_str(&format!("{},{:e},{v:.10e}\n", series_label(r.chirp_sign), r.intensity_w_cm2));
        }
    }
    s.into_bytes()
}

pub fn point_dir(root: &Path, chirp_sign: i32, intensity: f64) -> PathBuf {
    root.join(format!("chirp{chirp_sign:+}_I{intensity:.3e}"))
}

/// Loads a completed point whose manifest matches `cfg` and verifies.
pub fn completed_point(dir: &Path, cfg: &RunConfig) -> Option<(RunManifest, Observables)> {
    let manifest: RunManifest =
        serde_json::from_slice(&fs::read(dir.join("manifest.json")).ok()?).ok()?;
    if manifest.status == RunStatus::Failed || manifest.config != *cfg || !manifest.verify(dir) {
        return None;
    }
    let obs = serde_json::from_slice(&fs::read(dir.join("observables.json")).ok()?).ok()?;
    Some((manifest, obs))
}

/// A finished point (manifest, observables, reused) or its failure message.
type PointResult = std::result::Result<(RunManifest, Option<Observables>, bool), String>;

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    pub failures: Vec<(i32, f64, String)>,
    pub reused: usize,
}

/// Runs every scan point (reusing verified completed points), aggregates the
/// scan table sorted by (chirp, intensity) and writes plot data into `root`.
pub fn run_scan(cfg: &RunConfig, root: &Path, workers: usize) -> std::result::Result<ScanOutcome, StageError> {
    cfg.validate().at(Stage::Validate)?;
    let points = cfg.scan_points();
    fs::create_dir_all(root).map_err(Error::from).at(Stage::Write)?;
    write_atomic(&root.join("scan_config.toml"), cfg.to_toml().at(Stage::Write)?.as_bytes())
        .at(Stage::Write)?;
    let pending: Vec<bool> = points
        .iter()
        .map(|&(s, i)| completed_point(&point_dir(root, s, i), &cfg.at_point(i, s)).is_none())
        .collect();
    let prep = if pending.iter().any(|&p| p) {
        Some(prepare(cfg)?)
    } else {
        None
    };
    let results: Vec<PointResult> =
        par::with_workers(workers, || {
            par::map_range(points.len(), |j| {
                let (sign, intensity) = points[j];
                let pcfg = cfg.at_point(intensity, sign);
                let dir = point_dir(root, sign, intensity);
                if let Some((m, o)) = completed_point(&dir, &pcfg) {
                    return Ok((m, Some(o), true));
                }
                let prep = prep.as_ref().expect("prepared when points are pending");
                match run_single(&pcfg, prep, &dir) {
                    Ok(out) => match &out.failure {
                        None => Ok((out.manifest, out.observables, false)),
                        Some((stage, msg)) => Err(format!("{stage} stage: {msg}")),
                    },
                    Err(e) => Err(format!("write stage: {e}")),
                }
            })
        });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut reused = 0;
    for (&(sign, intensity), res) in points.iter().zip(results) {
        let res = match res {
            Ok((m, Some(o), was_reused)) => Ok((m, o, was_reused)),
            Ok((_, None, _)) => Err("no observables".to_string()),
            Err(msg) => Err(msg),
        };
        match res {
            Ok((m, o, was_reused)) => {
                reused += was_reused as usize;
                rows.push(ScanRow {
                    intensity_w_cm2: intensity,
                    chirp_sign: sign,
                    status: m.status,
                    di_yield: Some(o.di_yield),
                    si_yield: Some(o.si_yield),
                    fwhm_rad: o.fwhm_rad,
                    entropy_nats: Some(o.entropy_nats),
                    inverse_purity: Some(o.inverse_purity),
                    tdqmc: m.metadata.tdqmc,
                });
            }
            Err(msg) => {
                failures.push((sign, intensity, msg));
                rows.push(ScanRow {
                    intensity_w_cm2: intensity,
                    chirp_sign: sign,
                    status: RunStatus::Failed,
                    di_yield: None,
                    si_yield: None,
                    fwhm_rad: None,
                    entropy_nats: None,
                    inverse_purity: None,
                    tdqmc: None,
                });
            }
        }
    }
    let write = |name: &str, bytes: Vec<u8>| write_atomic(&root.join(name), &bytes).at(Stage::Write);
    write("scan.csv", scan_csv(&rows))?;
    write("yield_vs_intensity.csv", plot_csv(&rows, |r| r.di_yield))?;
    write("fwhm_vs_intensity.csv", plot_csv(&rows, |r| r.fwhm_rad))?;
    write("entropy_vs_intensity.csv", plot_csv(&rows, |r| r.entropy_nats))?;
    write("purity_vs_intensity.csv", plot_csv(&rows, |r| r.inverse_purity))?;
    let tq: Vec<(i32, f64, ChannelEntropies)> = rows
        .iter()
        .filter_map(|r| r.tdqmc.map(|e| (r.chirp_sign, r.intensity_w_cm2, e)))
        .collect();
    if !tq.is_empty() {
        write("tdqmc_entropy.csv", tdqmc_csv(&tq))?;
    }
    Ok(ScanOutcome {
        rows,
        failures,
        reused,
    })
}

/// TDQMC entropies per point: chirp sign, intensity, `[all, nsdi, q13, q24]`.
pub type TdqmcRow = (i32, f64, [Option<f64>; 4]);

/// Reads the TDQMC entropy table written by a scan.
pub fn parse_tdqmc_csv(text: &str) -> Result<Vec<TdqmcRow>> {
    let opt = |s: &str| -> Option<f64> { s.parse().ok() };
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Config(format!("tdqmc row has {} fields", f.len())));
            }
            let sign = f[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad chirp sign `{}`", f[0])))?;
            let i = f[1]
                .parse()
                .map_err(|_| Error::Config(format!("bad intensity `{}`", f[1])))?;
            Ok((sign, i, [opt(f[2]), opt(f[3]), opt(f[4]), opt(f[5])]))
        })
        .collect()
}
