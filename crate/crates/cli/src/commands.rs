//! `design`, `spectrum`, `learn` and `reproduce`.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, RowDVector};
use stochassign::assign::{controllability_rcond, target_spectrum};
use stochassign::numerics::eigenvalues;
use stochassign::{
    design, lift_gain, operator_matrix, operator_matrix_general, reduce_general, run_learning,
    spectrum, AssignmentSpec, ContinuousPlant, DiscretePlant, GeneralSystem, LearnReport, Mode,
    Plant, PlantParams, ReducedSystem, SpectrumSet, TraceRecord,
};

use crate::config::{bundled, parse_config, ExperimentConfig, Model};
use crate::error::CliError;
use crate::report::{pairs, DesignReport, LearnRun, RunReport, SpectrumReport, WallClock};

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub trace: Option<PathBuf>,
}

impl RunOptions {
    fn apply(&self, cfg: &ExperimentConfig) -> Result<ExperimentConfig, CliError> {
        let mut cfg = cfg.clone();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(r) = self.repeats {
            cfg.repeats = r;
        }
        if let Some(t) = &self.trace {
            cfg.output.trace = Some(t.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reduced plant plus, for general systems, the reduction used.
struct Resolved {
    plant: PlantParams,
    general: Option<(GeneralSystem, ReducedSystem)>,
}

fn resolve(cfg: &ExperimentConfig) -> Result<Resolved, CliError> {
    match cfg.model()? {
        Model::Reduced(plant) => Ok(Resolved {
            plant,
            general: None,
        }),
        Model::General(sys) => {
            let red = reduce_general(&sys)?;
            Ok(Resolved {
                plant: red.plant(),
                general: Some((sys, red)),
            })
        }
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Achieved operator spectrum of the row gain `kv` on the resolved model.
fn achieved_spectrum(
    res: &Resolved,
    spec: &AssignmentSpec,
    kv: &RowDVector<f64>,
) -> Result<(SpectrumSet, Option<DMatrix<f64>>), CliError> {
    match &res.general {
        None => {
            let t = operator_matrix(&res.plant, spec.alpha, kv, spec.mode)?;
            Ok((spectrum(&t)?, None))
        }
        Some((sys, red)) => {
            let gain = stochassign::GainPair {
                alpha: spec.alpha,
                kv: kv.clone(),
            };
            let k = red.input_gain(&lift_gain(&gain, &red.abar)?);
            let t = operator_matrix_general(spec.mode, &sys.a, &sys.b, &sys.abar, &sys.bbar, &k)?;
            Ok((spectrum(&t)?, Some(k)))
        }
    }
}

fn design_report(res: &Resolved, spec: &AssignmentSpec) -> Result<DesignReport, CliError> {
    let gain = design(&res.plant, spec)?;
    let (achieved, input_gain) = achieved_spectrum(res, spec, &gain.kv)?;
    let target = target_spectrum(spec)?;
    Ok(DesignReport {
        kv: gain.kv.iter().copied().collect(),
        input_gain: input_gain.as_ref().map(rows),
        controllability_rcond: controllability_rcond(&res.plant.g(spec.alpha), &res.plant.f),
        closed_loop_eigenvalues: pairs(&eigenvalues(&res.plant.closed_loop(spec.alpha, &gain.kv))?),
        spectrum: SpectrumReport::new(&achieved, &target),
    })
}

fn base_report(command: &str, cfg: &ExperimentConfig, n: usize) -> RunReport {
    RunReport {
        command: command.to_string(),
        config: cfg.clone(),
        mode: cfg.mode().as_str().to_string(),
        n,
        alpha: cfg.assignment.alpha,
        design: None,
        spectrum: None,
        runs: Vec::new(),
        wall_clock: WallClock {
            total_seconds: 0.0,
            per_run_seconds: Vec::new(),
        },
    }
}

/// Model-based design and its achieved operator spectrum.
pub fn cmd_design(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let res = resolve(cfg)?;
    let spec = cfg.spec()?;
    let mut report = base_report("design", cfg, res.plant.dim());
    report.design = Some(design_report(&res, &spec)?);
    report.wall_clock.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Operator spectrum under an explicit gain: `n` entries for a reduced
/// system, `(n+1)·n` row-major entries for a general one.
pub fn cmd_spectrum(cfg: &ExperimentConfig, gain: &[f64]) -> Result<RunReport, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let spec = cfg.spec()?;
    let mode = cfg.mode();
    let (achieved, n) = match cfg.model()? {
        Model::Reduced(p) => {
            let n = p.dim();
            if gain.len() != n {
                return Err(stochassign::Error::ShapeMismatch(format!(
                    "gain must have {n} entries, got {}",
                    gain.len()
                ))
                .into());
            }
            let kv = RowDVector::from_row_slice(gain);
            (spectrum(&operator_matrix(&p, spec.alpha, &kv, mode)?)?, n)
        }
        Model::General(sys) => {
            let (n, m) = (sys.dim(), sys.inputs());
            if gain.len() != n * m {
                return Err(stochassign::Error::ShapeMismatch(format!(
                    "gain must have {m}x{n} = {} entries, got {}",
                    n * m,
                    gain.len()
                ))
                .into());
            }
            let k = DMatrix::from_row_slice(m, n, gain);
            let t = operator_matrix_general(mode, &sys.a, &sys.b, &sys.abar, &sys.bbar, &k)?;
            (spectrum(&t)?, n)
        }
    };
    let mut report = base_report("spectrum", cfg, n);
    report.spectrum = Some(SpectrumReport::new(&achieved, &target_spectrum(&spec)?));
    report.wall_clock.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Trace file of repetition `r`; `trace.csv` becomes `trace-r.csv` when
/// there is more than one repetition.
pub fn trace_path(base: &Path, repeat: usize, repeats: usize) -> PathBuf {
    if repeats <= 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-{repeat}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{repeat}"),
    };
    base.with_file_name(name)
}

struct CsvTrace {
    writer: csv::Writer<File>,
    failure: Option<csv::Error>,
}

impl CsvTrace {
    fn create(path: &Path, n: usize) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["p".to_string(), "j".into(), "s".into()];
        header.extend((1..=n).map(|i| format!("k_{i}")));
        header.push("delta_norm".into());
        writer.write_record(&header)?;
        Ok(Self {
            writer,
            failure: None,
        })
    }

    fn record(&mut self, rec: &TraceRecord) {
        if self.failure.is_some() {
            return;
        }
        let mut row = vec![rec.p.to_string(), rec.j.to_string(), rec.s.to_string()];
        row.extend(rec.k.iter().map(f64::to_string));
        row.push(rec.delta_norm.to_string());
        if let Err(e) = self.writer.write_record(&row) {
            self.failure = Some(e);
        }
    }

    fn finish(mut self) -> Result<(), CliError> {
        if let Some(e) = self.failure {
            return Err(e.into());
        }
        self.writer.flush()?;
        Ok(())
    }
}

fn make_plant(
    cfg: &ExperimentConfig,
    plant: &PlantParams,
    stream: u64,
) -> Result<Box<dyn Plant + Send>, CliError> {
    let dist = cfg.noise.distribution.into();
    Ok(match cfg.mode() {
        Mode::Discrete => Box::new(
            DiscretePlant::new(plant.clone(), cfg.noise.delta.unwrap_or(0.0), cfg.seed)?
                .with_distribution(dist)
                .with_stream(stream),
        ),
        Mode::Continuous => Box::new(
            ContinuousPlant::new(plant.clone(), cfg.noise.dt.unwrap_or(0.1), cfg.seed)?
                .with_substeps(cfg.noise.substeps)?
                .with_distribution(dist)
                .with_stream(stream),
        ),
    })
}

fn learn_one(
    cfg: &ExperimentConfig,
    res: &Resolved,
    spec: &AssignmentSpec,
    design_kv: Option<&[f64]>,
    repeat: usize,
) -> Result<(LearnRun, f64), CliError> {
    let start = Instant::now();
    let stream = repeat as u64;
    let n = res.plant.dim();
    let mut plant = make_plant(cfg, &res.plant, stream)?;
    let trace_file = cfg
        .output
        .trace
        .as_ref()
        .map(|t| trace_path(Path::new(t), repeat, cfg.repeats));
    let mut csv = trace_file
        .as_ref()
        .map(|p| CsvTrace::create(p, n))
        .transpose()?;
    let mut sink = |rec: &TraceRecord| {
        if let Some(c) = csv.as_mut() {
            c.record(rec)
        }
    };
    let outcome = run_learning(plant.as_mut(), spec, &cfg.learner_config(), &mut sink);
    if let Some(c) = csv {
        c.finish()?;
    }
    let (report, error) = match outcome {
        Ok(r) => (r, None),
        Err(e) => (
            LearnReport {
                gain: RowDVector::from_element(n, f64::NAN),
                p_final: 0,
                index_final: 0,
                observations: plant.observations(),
                truncations: 0,
                sa_steps: 0,
                converged: false,
                last_delta: f64::NAN,
                trace: Vec::new(),
            },
            Some(e.to_string()),
        ),
    };
    let target = target_spectrum(spec)?;
    let spectrum_report = if error.is_none() {
        let (achieved, _) = achieved_spectrum(res, spec, &report.gain)?;
        SpectrumReport::new(&achieved, &target)
    } else {
        SpectrumReport::new(&SpectrumSet::from_values(Vec::new()), &target)
    };
    let gain: Vec<f64> = report.gain.iter().copied().collect();
    let error_vs_design = design_kv.filter(|_| error.is_none()).map(|d| {
        gain.iter()
            .zip(d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    let run = LearnRun {
        seed: cfg.seed,
        stream,
        converged: report.converged,
        gain,
        p_final: report.p_final,
        index_final: report.index_final,
        observations: report.observations,
        truncations: report.truncations,
        sa_steps: report.sa_steps,
        last_delta: report.last_delta,
        error_vs_design,
        spectrum: spectrum_report,
        trace_path: trace_file.map(|p| p.display().to_string()),
        error,
    };
    Ok((run, start.elapsed().as_secs_f64()))
}

fn learn_report(command: &str, cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let res = resolve(cfg)?;
    let spec = cfg.spec()?;
    let mut report = base_report(command, cfg, res.plant.dim());
    // the model is known to the simulator, so the reference gain is available
    report.design = design_report(&res, &spec).ok();
    let design_kv = report.design.as_ref().map(|d| d.kv.clone());
    let results: Vec<Result<(LearnRun, f64), CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.repeats)
            .map(|r| {
                let (res, spec, design_kv) = (&res, &spec, design_kv.as_deref());
                scope.spawn(move || learn_one(cfg, res, spec, design_kv, r))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("learning worker panicked"))
            .collect()
    });
    for r in results {
        let (run, secs) = r?;
        report.runs.push(run);
        report.wall_clock.per_run_seconds.push(secs);
    }
    report.wall_clock.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Model-free learning, one seeded repetition per RNG stream.
pub fn cmd_learn(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = opts.apply(cfg)?;
    learn_report("learn", &cfg)
}

/// Design and learning on a bundled example.
pub fn cmd_reproduce(name: &str, opts: &RunOptions) -> Result<RunReport, CliError> {
    let text = bundled(name).ok_or_else(|| {
        CliError::Validation(vec![format!(
            "unknown example `{name}`; expected example1 or example2"
        )])
    })?;
    let cfg = opts.apply(&parse_config(text)?)?;
    learn_report(&format!("reproduce {name}"), &cfg)
}

/// Exit code for a finished report: 3 if any repetition failed to converge.
pub fn report_exit_code(report: &RunReport) -> i32 {
    if report.runs.iter().any(|r| !r.converged) {
        3
    } else {
        0
    }
}
