//! Running registrations for the `register` and `bench` commands.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{ImageSource, RunConfig};
use super::metrics::{aggregate, parse_raw, render_csv, render_markdown, write_raw, RepeatRecord};
use super::synth::{load_truth_displacement, Fixture};
use crate::error::{Error, Result};
use crate::image::{load_image, Image, ImageFormat};
use crate::joint::{build_pyramid, Backend, TargetSide};
use crate::optimizer::{
    intensity_error, register, register_clear, CostKind, OptimizerConfig, RegistrationResult, Sampling,
};
use crate::protocol::{lock, spawn_session, Ledger, SessionConfig};
use crate::transform::displacement_rmse;

/// The image pair and optional ground-truth displacement of a run.
#[derive(Debug, Clone)]
pub struct ImagePair {
    pub moving: Image,
    pub target: Image,
    pub truth: Option<Vec<f64>>,
}

impl ImagePair {
    pub fn load(source: &ImageSource) -> Result<Self> {
        match source {
            ImageSource::Fixture { kind, seed } => {
                let f = Fixture::generate(*kind, *seed)?;
                let truth = Some(f.truth_displacement());
                Ok(Self {
                    moving: f.moving,
                    target: f.target,
                    truth,
                })
            }
            ImageSource::Files { moving, target, truth } => {
                let m = load_image(moving, ImageFormat::from_path(moving)?)?;
                let t = load_image(target, ImageFormat::from_path(target)?)?;
                if m.dims() != t.dims() {
                    return Err(Error::Config(format!(
                        "moving {:?} and target {:?} grids differ",
                        m.dims(),
                        t.dims()
                    )));
                }
                let truth = truth
                    .as_ref()
                    .map(|p| load_truth_displacement(p, t.dims()))
                    .transpose()?;
                Ok(Self {
                    moving: m,
                    target: t,
                    truth,
                })
            }
        }
    }
}

fn bins_t(cost: &CostKind) -> usize {
    match cost {
        CostKind::Mi(c) => c.bins_t,
        CostKind::Ssd => 16,
    }
}

/// Session parameters both parties derive from the run configuration.
pub fn session_config(
    cfg: &RunConfig,
    opt: &OptimizerConfig,
    moving: &Image,
    crypto_seed: u64,
) -> Result<SessionConfig> {
    let level_dims = build_pyramid(moving, &opt.levels, opt.intensity_scale)?
        .iter()
        .map(|l| l.dims().to_vec())
        .collect();
    let mut s = SessionConfig::new(opt.backend, level_dims);
    s.seed = crypto_seed;
    s.frac_bits = cfg.frac_bits;
    s.he = cfg.he_params();
    s.block = cfg.block;
    s.bins_t = bins_t(&cfg.cost);
    s.keep_transcript = cfg.keep_transcript;
    Ok(s)
}

/// A finished secure run with both parties' ledgers.
pub struct SecureRun {
    pub result: RegistrationResult,
    pub party1: Ledger,
    pub party2: Ledger,
}

pub fn run_secure(cfg: &RunConfig, opt: &OptimizerConfig, pair: &ImagePair, crypto_seed: u64) -> Result<SecureRun> {
    let scfg = session_config(cfg, opt, &pair.moving, crypto_seed)?;
    let target = TargetSide::new(&pair.target, &opt.levels, opt.intensity_scale, scfg.bins_t)?;
    let mut session = spawn_session(scfg, target, &cfg.transport, crypto_seed)?;
    let result = register(&pair.moving, &mut session.joint, cfg.model, cfg.cost, opt);
    let closed = session.joint.close();
    let party1 = lock(session.joint.ledger()).clone();
    let finished = closed.and_then(|_| session.finish());
    let result = result?;
    if let Some(msg) = &result.aborted {
        // Party 2's error names the failing step more precisely when present.
        return Err(finished.err().unwrap_or_else(|| Error::protocol(0, msg.clone())));
    }
    let party2 = finished?;
    Ok(SecureRun { result, party1, party2 })
}

/// Results of every repeat of one cell.
pub struct CellOutcome {
    pub records: Vec<RepeatRecord>,
    pub results: Vec<RegistrationResult>,
    /// Party ledgers per successful secure repeat.
    pub ledgers: Vec<(usize, Ledger, Ledger)>,
    pub first_error: Option<Error>,
}

pub fn cell_label(backend: Backend, sampling: Sampling) -> String {
    format!("{backend}/{sampling}")
}

/// Runs `cfg.repeats` registrations of one backend and sampling strategy.
///
/// Every repeat uses the same sampling seed; secure repeats get fresh
/// crypto seeds. `reference` is the clear result RMSE is measured against.
pub fn run_cell(
    cfg: &RunConfig,
    pair: &ImagePair,
    backend: Backend,
    sampling: Sampling,
    reference: Option<&RegistrationResult>,
) -> CellOutcome {
    let label = cell_label(backend, sampling);
    let mut opt = cfg.optimizer.clone();
    opt.backend = backend;
    opt.sampling = sampling;
    let spacing = pair.target.spacing().to_vec();
    let mut out = CellOutcome {
        records: Vec::new(),
        results: Vec::new(),
        ledgers: Vec::new(),
        first_error: None,
    };
    for rep in 0..cfg.repeats {
        let started = Instant::now();
        let run = if backend.is_secure() {
            run_secure(cfg, &opt, pair, cfg.crypto_seed.wrapping_add(rep as u64)).map(Some)
        } else {
            Ok(None)
        };
        let run = match run {
            Ok(Some(s)) => Ok((s.result, Some((s.party1, s.party2)))),
            Ok(None) => register_clear(&pair.moving, &pair.target, cfg.model, cfg.cost, &opt).map(|r| (r, None)),
            Err(e) => Err(e),
        };
        let elapsed = started.elapsed().as_secs_f64();
        let (result, ledgers) = match run {
            Ok(v) => v,
            Err(e) => {
                log::error!("{label} repeat {rep} failed: {e}");
                out.records.push(RepeatRecord::failed(&label, rep, e.to_string()));
                out.first_error.get_or_insert(e);
                continue;
            }
        };
        let ie = match intensity_error(&pair.moving, &pair.target, &result.transform) {
            Ok(v) => v,
            Err(e) => {
                out.records.push(RepeatRecord::failed(&label, rep, e.to_string()));
                out.first_error.get_or_insert(e);
                continue;
            }
        };
        let usage = result.total_usage();
        let (p1_secs, p2_secs) = if backend.is_secure() {
            (usage.party1_seconds, usage.party2_seconds)
        } else {
            (elapsed, 0.0)
        };
        out.records.push(RepeatRecord {
            label: label.clone(),
            repeat: rep,
            intensity_error: ie,
            iterations: result.total_iterations(),
            rmse_vs_clear: reference
                .filter(|_| backend.is_secure())
                .map(|r| displacement_rmse(&result.displacement, &r.displacement, &spacing)),
            rmse_vs_truth: pair
                .truth
                .as_ref()
                .map(|t| displacement_rmse(&result.displacement, t, &spacing)),
            party1_seconds: p1_secs,
            party2_seconds: p2_secs,
            party1_bytes: usage.party1_bytes,
            party2_bytes: usage.party2_bytes,
            rotations: usage.rotations,
            he_mults: usage.he_mults,
            error: None,
        });
        if let Some((a, b)) = ledgers {
            out.ledgers.push((rep, a, b));
        }
        out.results.push(result);
    }
    out
}

/// One line per frame: repeat, party, direction, phase, type, round, bytes, digest.
pub fn ledger_lines(ledgers: &[(usize, Ledger, Ledger)]) -> String {
    let mut out = String::from("repeat\tparty\tdirection\tphase\ttype\tround\tbytes\tdigest\n");
    for (rep, l1, l2) in ledgers {
        for (party, l) in [(1, l1), (2, l2)] {
            for r in l.records() {
                let _ = writeln!(
                    out,
                    "{rep}\t{party}\t{:?}\t{}\t{}\t{}\t{}\t{:016x}",
                    r.direction,
                    r.phase.name(),
                    r.frame_type.name(),
                    r.round,
                    r.bytes,
                    r.digest
                );
            }
        }
    }
    out
}

/// Writes `metrics.csv` and `report.md` for the given records.
pub fn write_reports(records: &[RepeatRecord], out: &Path, title: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let rows = aggregate(records);
    let csv = out.join("metrics.csv");
    let md = out.join("report.md");
    fs::write(&csv, render_csv(&rows))?;
    fs::write(&md, render_markdown(title, &rows, records))?;
    Ok(vec![csv, md])
}

/// Regenerates the reports from a stored `raw.tsv`.
pub fn regenerate_reports(raw: &Path, out: &Path, title: &str) -> Result<Vec<PathBuf>> {
    let records = parse_raw(&fs::read_to_string(raw)?)?;
    write_reports(&records, out, title)
}

pub const REGISTER_TITLE: &str = "Registration";
pub const BENCH_TITLE: &str = "Benchmark";

/// What `register` produced.
pub struct RegisterOutput {
    pub records: Vec<RepeatRecord>,
    pub result: Option<RegistrationResult>,
    pub files: Vec<PathBuf>,
    pub first_error: Option<Error>,
}

/// Runs the configured backend, plus a clear reference for secure runs.
pub fn run_register(cfg: &RunConfig) -> Result<RegisterOutput> {
    cfg.validate()?;
    let pair = ImagePair::load(&cfg.images)?;
    let backend = cfg.optimizer.backend;
    let sampling = cfg.optimizer.sampling;
    let reference = if backend.is_secure() {
        let mut opt = cfg.optimizer.clone();
        opt.backend = Backend::Clear;
        Some(register_clear(&pair.moving, &pair.target, cfg.model, cfg.cost, &opt)?)
    } else {
        None
    };
    let cell = run_cell(cfg, &pair, backend, sampling, reference.as_ref());
    fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    let raw = cfg.out.join("raw.tsv");
    fs::write(&raw, write_raw(&cell.records))?;
    files.push(raw);
    files.extend(write_reports(&cell.records, &cfg.out, REGISTER_TITLE)?);
    if backend.is_secure() {
        let p = cfg.out.join("ledger.tsv");
        fs::write(&p, ledger_lines(&cell.ledgers))?;
        files.push(p);
    }
    let result = cell.results.last().cloned();
    if let Some(r) = &result {
        let theta = cfg.out.join("theta.txt");
        let text: String = r.theta().iter().map(|v| format!("{v}\n")).collect();
        fs::write(&theta, text)?;
        let disp = cfg.out.join("displacement.raw");
        let bytes: Vec<u8> = r.displacement.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&disp, bytes)?;
        files.extend([theta, disp]);
    }
    Ok(RegisterOutput {
        records: cell.records,
        result,
        files,
        first_error: cell.first_error,
    })
}

/// Runs every backend × sampling cell. Failing cells are recorded and the
/// matrix continues.
pub fn run_bench(cfg: &RunConfig) -> Result<(Vec<RepeatRecord>, Vec<PathBuf>)> {
    cfg.validate()?;
    let pair = ImagePair::load(&cfg.images)?;
    let mut references: HashMap<String, RegistrationResult> = HashMap::new();
    let mut records = Vec::new();
    let mut ledgers = Vec::new();
    for &sampling in &cfg.bench_samplings {
        for &backend in &cfg.bench_backends {
            let key = sampling.to_string();
            if backend.is_secure() && !references.contains_key(&key) {
                let mut opt = cfg.optimizer.clone();
                opt.backend = Backend::Clear;
                opt.sampling = sampling;
                match register_clear(&pair.moving, &pair.target, cfg.model, cfg.cost, &opt) {
                    Ok(r) => {
                        references.insert(key.clone(), r);
                    }
                    Err(e) => log::error!("clear reference for {key} failed: {e}"),
                }
            }
            log::info!("bench cell {}", cell_label(backend, sampling));
            let cell = run_cell(cfg, &pair, backend, sampling, references.get(&key));
            if backend == Backend::Clear {
                if let Some(r) = cell.results.first() {
                    references.entry(key).or_insert_with(|| r.clone());
                }
            }
            records.extend(cell.records);
            ledgers.extend(cell.ledgers);
        }
    }
    fs::create_dir_all(&cfg.out)?;
    let raw = cfg.out.join("raw.tsv");
    fs::write(&raw, write_raw(&records))?;
    let mut files = vec![raw];
    files.extend(write_reports(&records, &cfg.out, BENCH_TITLE)?);
    if !ledgers.is_empty() {
        let p = cfg.out.join("ledger.tsv");
        fs::write(&p, ledger_lines(&ledgers))?;
        files.push(p);
    }
    Ok((records, files))
}
