//! The adaptive loop `solve → estimate → mark → refine`, convergence records and
//! their CSV form, and least-squares rate fits.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorBreakdown};
use crate::fem::{assemble, solve, DiscreteFunction};
use crate::marking::{MarkingBranch, MarkingOutcome, MarkingParams, MarkingStrategy};
use crate::mesh::Mesh;
use crate::problems::{evaluate_energy_error_with_depth, ProblemName, ProblemSpec};
use crate::trace::{DirichletTrace, ProjectionKind};

/// Column names of the convergence CSV, in order.
pub const CSV_HEADER: [&str; 13] = [
    "step",
    "n_elements",
    "eta_sq",
    "rho_sq",
    "oscD_sq",
    "oscN_sq",
    "oscT_sq",
    "jump_sq",
    "volume_sq",
    "neumann_sq",
    "energy_error",
    "branch",
    "marked",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefinementMode {
    #[default]
    Adaptive,
    Uniform,
}

impl RefinementMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RefinementMode::Adaptive => "adaptive",
            RefinementMode::Uniform => "uniform",
        }
    }
}

impl fmt::Display for RefinementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RefinementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(RefinementMode::Adaptive),
            "uniform" => Ok(RefinementMode::Uniform),
            other => Err(Error::Input(format!(
                "unknown mode `{other}` (expected `adaptive` or `uniform`)"
            ))),
        }
    }
}

/// Accuracy of the energy-error quadrature near singular points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureProfile {
    /// Three levels of subdivision on elements touching a singular point.
    #[default]
    Standard,
    /// Six levels of subdivision.
    Fine,
}

impl QuadratureProfile {
    pub fn singular_depth(self) -> u32 {
        match self {
            QuadratureProfile::Standard => 3,
            QuadratureProfile::Fine => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuadratureProfile::Standard => "standard",
            QuadratureProfile::Fine => "fine",
        }
    }
}

impl FromStr for QuadratureProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(QuadratureProfile::Standard),
            "fine" => Ok(QuadratureProfile::Fine),
            other => Err(Error::Input(format!(
                "unknown quadrature profile `{other}` (expected `standard` or `fine`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemName,
    pub projection: ProjectionKind,
    pub params: MarkingParams,
    pub marking: MarkingStrategy,
    /// The loop stops before solving on a mesh with more elements than this.
    pub max_elements: usize,
    pub mode: RefinementMode,
    /// CSV destination; records are appended and flushed as they are produced.
    pub output: Option<PathBuf>,
    pub quadrature: QuadratureProfile,
    /// The loop stops once `η` is at most this value.
    pub zero_tolerance: f64,
}

impl RunConfig {
    pub fn new(problem: ProblemName) -> Self {
        Self {
            problem,
            projection: ProjectionKind::L2,
            params: MarkingParams::default(),
            marking: MarkingStrategy::default(),
            max_elements: 20_000,
            mode: RefinementMode::Adaptive,
            output: None,
            quadrature: QuadratureProfile::Standard,
            zero_tolerance: 1e-10,
        }
    }
}

/// Step kind recorded in the `branch` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordBranch {
    Element,
    Dirichlet,
    Uniform,
    /// No refinement followed: the estimator vanished.
    Converged,
}

impl RecordBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordBranch::Element => "element",
            RecordBranch::Dirichlet => "dirichlet",
            RecordBranch::Uniform => "uniform",
            RecordBranch::Converged => "converged",
        }
    }
}

impl From<MarkingBranch> for RecordBranch {
    fn from(b: MarkingBranch) -> Self {
        match b {
            MarkingBranch::Element => RecordBranch::Element,
            MarkingBranch::Dirichlet => RecordBranch::Dirichlet,
        }
    }
}

impl FromStr for RecordBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "element" => Ok(RecordBranch::Element),
            "dirichlet" => Ok(RecordBranch::Dirichlet),
            "uniform" => Ok(RecordBranch::Uniform),
            "converged" => Ok(RecordBranch::Converged),
            other => Err(Error::Input(format!("unknown branch `{other}`"))),
        }
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub step: usize,
    pub n_elements: usize,
    pub eta_sq: f64,
    pub rho_sq: f64,
    pub osc_d_sq: f64,
    pub osc_n_sq: f64,
    pub osc_t_sq: f64,
    pub jump_sq: f64,
    pub volume_sq: f64,
    pub neumann_sq: f64,
    pub energy_error: Option<f64>,
    pub branch: RecordBranch,
    pub marked: usize,
}

impl ConvergenceRecord {
    fn from_breakdown(step: usize, n_elements: usize, b: &EstimatorBreakdown) -> Self {
        Self {
            step,
            n_elements,
            eta_sq: b.eta_sq(),
            rho_sq: b.rho_total(),
            osc_d_sq: b.osc_d_total(),
            osc_n_sq: b.osc_n_total(),
            osc_t_sq: b.osc_t_total(),
            jump_sq: b.jump_total(),
            volume_sq: b.volume_total(),
            neumann_sq: b.neumann_total(),
            energy_error: None,
            branch: RecordBranch::Converged,
            marked: 0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_sq.sqrt()
    }

    fn csv_fields(&self) -> [String; 13] {
        let f = |v: f64| format!("{v:.16e}");
        [
            self.step.to_string(),
            self.n_elements.to_string(),
            f(self.eta_sq),
            f(self.rho_sq),
            f(self.osc_d_sq),
            f(self.osc_n_sq),
            f(self.osc_t_sq),
            f(self.jump_sq),
            f(self.volume_sq),
            f(self.neumann_sq),
            self.energy_error.map(f).unwrap_or_default(),
            self.branch.as_str().to_string(),
            self.marked.to_string(),
        ]
    }
}

/// Everything known at the end of one loop iteration, handed to observers.
pub struct IterationState<'a> {
    pub mesh: &'a Mesh,
    pub trace: &'a DirichletTrace,
    pub solution: &'a DiscreteFunction,
    pub breakdown: &'a EstimatorBreakdown,
    /// `None` in uniform mode and on the final converged step.
    pub marking: Option<&'a MarkingOutcome>,
    pub record: &'a ConvergenceRecord,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub final_mesh: Mesh,
}

impl RunOutcome {
    /// Last step at which η increased over its predecessor.
    pub fn last_eta_increase(&self) -> Option<usize> {
        self.records
            .windows(2)
            .rev()
            .find(|w| w[1].eta_sq > w[0].eta_sq)
            .map(|w| w[1].step)
    }

    pub fn converged(&self) -> bool {
        self.records
            .last()
            .map(|r| r.branch == RecordBranch::Converged)
            .unwrap_or(false)
    }
}

/// Runs the configured study, writing the CSV if an output path is set.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let spec = config.problem.build()?;
    run_problem(&spec, config, |_| Ok(()))
}

/// Runs the loop on `spec`; `observe` is called after every iteration.
pub fn run_problem<F>(spec: &ProblemSpec, config: &RunConfig, mut observe: F) -> Result<RunOutcome>
where
    F: FnMut(&IterationState<'_>) -> Result<()>,
{
    spec.validate()?;
    let mut mesh = spec.initial_mesh.clone();
    if config.max_elements < mesh.num_elements() {
        return Err(Error::Input(format!(
            "max_elements = {} is below the initial element count {}",
            config.max_elements,
            mesh.num_elements()
        )));
    }
    if !(config.zero_tolerance >= 0.0) {
        return Err(Error::Input("zero tolerance must be non-negative".into()));
    }
    let mut sink = match &config.output {
        Some(path) => Some(CsvSink::create(path)?),
        None => None,
    };

    let mut records = Vec::new();
    let mut step = 0;
    while mesh.num_elements() <= config.max_elements {
        let next = iterate(spec, config, &mesh, step, &mut observe, &mut records)
            .map_err(|e| e.at_iteration(step))?;
        if let Some(sink) = sink.as_mut() {
            sink.write(records.last().expect("record pushed"))
                .map_err(|e| e.at_iteration(step))?;
        }
        match next {
            Some(refined) => mesh = refined,
            None => break,
        }
        step += 1;
    }
    Ok(RunOutcome {
        records,
        final_mesh: mesh,
    })
}

fn iterate<F>(
    spec: &ProblemSpec,
    config: &RunConfig,
    mesh: &Mesh,
    step: usize,
    observe: &mut F,
    records: &mut Vec<ConvergenceRecord>,
) -> Result<Option<Mesh>>
where
    F: FnMut(&IterationState<'_>) -> Result<()>,
{
    let trace = config.projection.project(mesh, spec)?;
    let system = assemble(mesh, spec)?;
    let solution = solve(&system, &trace)?;
    let breakdown = estimate(mesh, spec, &solution)?;

    let mut record = ConvergenceRecord::from_breakdown(step, mesh.num_elements(), &breakdown);
    if spec.exact_solution.is_some() {
        let depth = config.quadrature.singular_depth();
        record.energy_error = Some(evaluate_energy_error_with_depth(
            spec, mesh, &solution, depth,
        )?);
    }

    let mut marking = None;
    let next = if record.eta() <= config.zero_tolerance {
        None
    } else {
        match config.mode {
            RefinementMode::Uniform => {
                record.branch = RecordBranch::Uniform;
                record.marked = mesh.num_elements();
                Some(mesh.refine_uniform())
            }
            RefinementMode::Adaptive => {
                let outcome = config.marking.apply(&breakdown, &config.params)?;
                record.branch = outcome.branch.into();
                record.marked = outcome.marked_elements.len();
                let refined = mesh.refine(&outcome.marked_elements)?;
                marking = Some(outcome);
                Some(refined)
            }
        }
    };

    observe(&IterationState {
        mesh,
        trace: &trace,
        solution: &solution,
        breakdown: &breakdown,
        marking: marking.as_ref(),
        record: &record,
    })?;
    records.push(record);
    Ok(next)
}

struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    fn create(path: &Path) -> Result<Self> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(CSV_HEADER)?;
        writer.flush()?;
        Ok(Self { writer })
    }

    fn write(&mut self, record: &ConvergenceRecord) -> Result<()> {
        self.writer.write_record(record.csv_fields())?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes `records` with header to `writer`.
pub fn write_csv<W: Write>(writer: W, records: &[ConvergenceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a convergence CSV, checking the header against [`CSV_HEADER`].
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ConvergenceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::Input("empty CSV: missing header".into()));
    }
    for name in CSV_HEADER {
        if !header.iter().any(|h| h == name) {
            return Err(Error::Input(format!("CSV is missing column `{name}`")));
        }
    }
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Input(
            "CSV columns are not in the expected order".into(),
        ));
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |k: usize| row.get(k).unwrap_or("");
        let parse_f = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad value `{}` in column `{}`", field(k), CSV_HEADER[k]),
            })
        };
        let parse_u = |k: usize| -> Result<usize> {
            field(k).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad value `{}` in column `{}`", field(k), CSV_HEADER[k]),
            })
        };
        records.push(ConvergenceRecord {
            step: parse_u(0)?,
            n_elements: parse_u(1)?,
            eta_sq: parse_f(2)?,
            rho_sq: parse_f(3)?,
            osc_d_sq: parse_f(4)?,
            osc_n_sq: parse_f(5)?,
            osc_t_sq: parse_f(6)?,
            jump_sq: parse_f(7)?,
            volume_sq: parse_f(8)?,
            neumann_sq: parse_f(9)?,
            energy_error: if field(10).is_empty() {
                None
            } else {
                Some(parse_f(10)?)
            },
            branch: field(11).parse().map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })?,
            marked: parse_u(12)?,
        });
    }
    Ok(records)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<ConvergenceRecord>> {
    read_csv(File::open(path)?)
}

/// Quantity whose decay rate is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Eta,
    Rho,
    Jump,
    Neumann,
    OscD,
    EnergyError,
}

impl Quantity {
    /// Norm-scale value (square root of the summed squares).
    pub fn of(self, r: &ConvergenceRecord) -> Option<f64> {
        match self {
            Quantity::Eta => Some(r.eta_sq.sqrt()),
            Quantity::Rho => Some(r.rho_sq.sqrt()),
            Quantity::Jump => Some(r.jump_sq.sqrt()),
            Quantity::Neumann => Some(r.neumann_sq.sqrt()),
            Quantity::OscD => Some(r.osc_d_sq.sqrt()),
            Quantity::EnergyError => r.energy_error,
        }
    }
}

/// Least-squares slope of `log η` against `log N` over the last `window` records.
pub fn fit_rate(records: &[ConvergenceRecord], window: usize) -> Result<f64> {
    fit_rate_of(records, window, Quantity::Eta)
}

pub fn fit_rate_of(
    records: &[ConvergenceRecord],
    window: usize,
    quantity: Quantity,
) -> Result<f64> {
    if window < 3 || window > records.len() {
        return Err(Error::Input(format!(
            "rate window of {window} records needs 3 ≤ window ≤ {}",
            records.len()
        )));
    }
    let points = records[records.len() - window..]
        .iter()
        .map(|r| {
            let v = quantity.of(r).unwrap_or(f64::NAN);
            let n = r.n_elements as f64;
            if v > 0.0 && n > 0.0 && v.is_finite() {
                Ok((n.ln(), v.ln()))
            } else {
                Err(Error::Input(format!(
                    "step {}: rate fit needs positive values, got N = {n}, value = {v}",
                    r.step
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    least_squares_slope(&points)
}

fn least_squares_slope(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Input(
            "rate window has a single element count".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Number of trailing records covering the final decade of `N`: everything from
/// the last record with `N ≤ N_final / 10` onward, and never fewer than 3.
pub fn final_decade_window(records: &[ConvergenceRecord]) -> usize {
    let Some(last) = records.last() else { return 0 };
    let cutoff = last.n_elements as f64 / 10.0;
    let start = records
        .iter()
        .rposition(|r| r.n_elements as f64 <= cutoff)
        .unwrap_or(0);
    (records.len() - start).max(3.min(records.len()))
}
