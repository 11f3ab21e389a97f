use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use mixed_afem::driver::{
    final_decade_window, fit_rate_of, read_csv_file, ConvergenceRecord, Quantity, RefinementMode,
    RunOutcome,
};
use mixed_afem::marking::MarkingStrategy;
use mixed_afem::mesh::RawMesh;
use mixed_afem::problems::ProblemName;
use mixed_afem::{BoundaryLabel, MarkingParams, ProjectionKind, RunConfig};

use crate::config::Settings;
use crate::{CompareArgs, Failure, RunArgs, StudyArgs};

type CliResult<T> = Result<T, Failure>;

const DEFAULT_THETAS: [f64; 3] = [0.25, 0.125, 0.0625];

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Command-line value, else config value, else `default`.
fn pick<T>(flag: Option<T>, settings: &Settings, key: &str, default: T) -> CliResult<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(settings.get(key).map_err(usage)?.unwrap_or(default)),
    }
}

fn pick_opt<T>(flag: Option<T>, settings: &Settings, key: &str) -> CliResult<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => settings.get(key).map_err(usage),
    }
}

fn study_config(args: &StudyArgs) -> CliResult<(RunConfig, Settings)> {
    let settings = match &args.config {
        Some(path) => Settings::load(path).map_err(usage)?,
        None => Settings::default(),
    };
    let problem = pick(args.problem, &settings, "problem", ProblemName::ZShape2d)?;
    let mut config = RunConfig::new(problem);
    config.projection = pick(args.projection, &settings, "projection", ProjectionKind::L2)?;
    config.marking = pick(
        args.marking,
        &settings,
        "marking",
        MarkingStrategy::DoerflerModified,
    )?;
    config.max_elements = pick(args.max_elements, &settings, "max-elements", 20_000)?;

    let initial = problem
        .build()
        .map_err(runtime)?
        .initial_mesh
        .num_elements();
    if config.max_elements < initial {
        return Err(usage(anyhow!(
            "--max-elements {} is below the {initial} elements of the initial mesh",
            config.max_elements
        )));
    }
    Ok((config, settings))
}

pub fn run(args: RunArgs) -> CliResult<()> {
    let (mut config, settings) = study_config(&args.study)?;
    let theta1 = pick(args.theta1, &settings, "theta1", 0.25)?;
    let theta2 = pick(args.theta2, &settings, "theta2", 0.25)?;
    let vartheta = pick(args.vartheta, &settings, "vartheta", 0.25)?;
    config.params = MarkingParams::new(theta1, theta2, vartheta).map_err(usage)?;
    config.mode = pick(args.mode, &settings, "mode", RefinementMode::Adaptive)?;
    let out = pick_opt(args.out, &settings, "out")?.unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}_{}_{}.csv",
            config.problem, config.projection, config.mode
        ))
    });
    let dump = pick_opt(args.dump_mesh, &settings, "dump-mesh")?;
    config.output = Some(out.clone());

    let outcome = mixed_afem::run(&config).map_err(runtime)?;
    if let Some(path) = &dump {
        outcome
            .final_mesh
            .save(path)
            .with_context(|| format!("writing mesh to {}", path.display()))
            .map_err(runtime)?;
    }
    print!("{}", run_summary(&config, &outcome));
    println!("wrote {}", out.display());
    if let Some(path) = dump {
        println!("wrote mesh {}", path.display());
    }
    Ok(())
}

fn run_summary(config: &RunConfig, outcome: &RunOutcome) -> String {
    let mut s = String::new();
    let p = &config.params;
    let _ = writeln!(
        s,
        "{} | projection {} | {} (theta1 = {}, theta2 = {}, vartheta = {}) | {}",
        config.problem,
        config.projection,
        config.marking,
        p.theta1,
        p.theta2,
        p.vartheta,
        config.mode
    );
    let records = &outcome.records;
    let last = records.last().expect("a run produces at least one record");
    if outcome.converged() {
        let _ = writeln!(
            s,
            "eta = 0 (machine precision), converged at step {}",
            last.step
        );
    } else {
        let _ = writeln!(
            s,
            "steps {}, final N = {}, eta = {:.6e}",
            records.len(),
            last.n_elements,
            last.eta()
        );
    }
    match last.energy_error {
        Some(err) if outcome.converged() => {
            let _ = writeln!(s, "energy error = {err:.6e}");
        }
        Some(err) => {
            let _ = writeln!(
                s,
                "energy error = {err:.6e}, effectivity = {:.3}",
                last.eta() / err
            );
        }
        None => {}
    }
    if records.len() >= 3 {
        let window = final_decade_window(records);
        let mut line = format!("rates over the final {window} records:");
        for (name, q) in [
            ("eta", Quantity::Eta),
            ("rho", Quantity::Rho),
            ("energy error", Quantity::EnergyError),
        ] {
            if let Ok(r) = fit_rate_of(records, window, q) {
                let _ = write!(line, " {name} {r:.3}");
            }
        }
        let _ = writeln!(s, "{line}");
        match outcome.last_eta_increase() {
            None => {
                let _ = writeln!(s, "eta non-increasing over the whole run");
            }
            Some(step) => {
                let _ = writeln!(s, "eta non-increasing after step {step}");
            }
        }
    }
    s
}

fn parse_thetas(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| usage(anyhow!("bad theta `{t}`: {e}")))
        })
        .collect()
}

pub fn compare(args: CompareArgs) -> CliResult<()> {
    let (base, settings) = study_config(&args.study)?;
    let thetas = match args.thetas {
        Some(t) => t,
        None => match settings.get::<String>("thetas").map_err(usage)? {
            Some(text) => parse_thetas(&text)?,
            None => DEFAULT_THETAS.to_vec(),
        },
    };
    if thetas.is_empty() {
        return Err(usage(anyhow!("--thetas needs at least one value")));
    }
    let params: Vec<MarkingParams> = thetas
        .iter()
        .map(|&t| MarkingParams::uniform(t).map_err(usage))
        .collect::<CliResult<_>>()?;
    let dir = pick(args.out, &settings, "out", PathBuf::from("."))?;
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(runtime)?;

    let stem = format!("{}_{}", base.problem, base.projection);
    let mut series = Vec::new();
    for (theta, p) in thetas.iter().zip(params) {
        let mut config = base.clone();
        config.params = p;
        let path = dir.join(format!("{stem}_theta{theta}.csv"));
        config.output = Some(path.clone());
        mixed_afem::run(&config).map_err(runtime)?;
        series.push((format!("adaptive theta={theta}"), path));
    }
    let mut config = base.clone();
    config.mode = RefinementMode::Uniform;
    let path = dir.join(format!("{stem}_uniform.csv"));
    config.output = Some(path.clone());
    mixed_afem::run(&config).map_err(runtime)?;
    series.push(("uniform".to_string(), path));

    let table = rate_table(&series).map_err(runtime)?;
    print!("{table}");
    Ok(())
}

const TABLE_QUANTITIES: [(&str, Quantity); 6] = [
    ("eta", Quantity::Eta),
    ("rho", Quantity::Rho),
    ("jump", Quantity::Jump),
    ("neumann", Quantity::Neumann),
    ("oscD", Quantity::OscD),
    ("error", Quantity::EnergyError),
];

/// Fitted final-decade slopes per series, computed from the CSV files alone.
pub fn rate_table(series: &[(String, PathBuf)]) -> anyhow::Result<String> {
    let mut s = String::new();
    let _ = write!(s, "{:<22} {:>8} {:>6}", "series", "N_final", "steps");
    for (name, _) in TABLE_QUANTITIES {
        let _ = write!(s, " {name:>8}");
    }
    let _ = writeln!(s, "  file");
    for (label, path) in series {
        let records = read_csv_file(path).with_context(|| format!("reading {}", path.display()))?;
        let _ = write!(s, "{label:<22}");
        let _ = write!(s, "{}", row(&records));
        let _ = writeln!(s, "  {}", path.display());
    }
    Ok(s)
}

fn row(records: &[ConvergenceRecord]) -> String {
    let mut s = String::new();
    let n = records.last().map(|r| r.n_elements).unwrap_or(0);
    let _ = write!(s, " {n:>8} {:>6}", records.len());
    let window = final_decade_window(records);
    for (_, q) in TABLE_QUANTITIES {
        match fit_rate_of(records, window, q) {
            Ok(r) => {
                let _ = write!(s, " {r:>8.3}");
            }
            Err(_) => {
                let _ = write!(s, " {:>8}", "n/a");
            }
        }
    }
    s
}

pub fn verify_mesh(path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(runtime)?;
    let raw = RawMesh::parse(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(runtime)?;
    let violations = raw.violations();
    if !violations.is_empty() {
        for v in &violations {
            println!("violation: {v}");
        }
        return Err(runtime(anyhow!(
            "{}: {} invariant violation(s)",
            path.display(),
            violations.len()
        )));
    }
    let mesh = raw.into_mesh().map_err(runtime)?;
    println!(
        "{}: ok, {} vertices, {} elements, {} boundary facets",
        path.display(),
        mesh.num_vertices(),
        mesh.num_elements(),
        mesh.boundary().len()
    );
    println!(
        "Dirichlet length {:.6}, Neumann length {:.6}, min angle {:.3} deg",
        mesh.boundary_length(BoundaryLabel::Dirichlet),
        mesh.boundary_length(BoundaryLabel::Neumann),
        mesh.min_angle().to_degrees()
    );
    Ok(())
}
