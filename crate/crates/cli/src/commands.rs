//! The `simulate`, `region` and `verify` subcommands.

use crate::error::{CliError, EXIT_OK};
use crate::spec::RunSpec;
use crate::verify::{self, Tolerances};
use coordsim::harness::{self, check_delta_coordination, SweepRow, Verdict, CSV_SCHEMA};
use coordsim::probkit::nats_to_bits;
use coordsim::region::{self, CurvePoint};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// First line of every region CSV, followed by ` delta_min=<value>`.
pub const REGION_SCHEMA: &str = "# coordsim region v1";

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub seed_override: Option<u64>,
    /// Keep rows already present in the output file and run only the rest.
    pub resume: bool,
}

fn read_existing(out: &Path) -> Result<Vec<SweepRow>, CliError> {
    let file = match File::open(out) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != CSV_SCHEMA {
        return Err(CliError::Runtime(format!(
            "{} does not start with '{CSV_SCHEMA}', refusing to resume",
            out.display()
        )));
    }
    Ok(harness::read_rows(reader)?)
}

/// Runs the sweep of `spec` and writes the CSV to `out`. Returns the rows
/// and prints a summary to `log`.
pub fn simulate(
    spec: &RunSpec,
    out: &Path,
    opts: &SimulateOptions,
    log: &mut dyn Write,
) -> Result<Vec<SweepRow>, CliError> {
    let (template, grid) = spec.build_experiment(opts.seed_override)?;
    let z = spec.experiment_section()?.confidence_z;
    let existing = if opts.resume { read_existing(out)? } else { Vec::new() };
    let results = harness::sweep_detailed(&template, &grid, &existing)?;
    let rows: Vec<SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
    let mut w = BufWriter::new(File::create(out)?);
    harness::write_rows(&mut w, &rows)?;
    w.flush()?;

    for (row, stats) in &results {
        let rates: Vec<String> = row
            .rates
            .split(';')
            .map(|r| {
                let nats: f64 = r.parse().unwrap_or(f64::NAN);
                format!("{nats:.4} nats ({:.4} bits)", nats_to_bits(nats))
            })
            .collect();
        let verdict = match stats {
            Some(s) => match check_delta_coordination(s, row.delta, z) {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
            },
            None => "resumed",
        };
        let exceed = match stats.as_ref().and_then(|s| s.exceed_fraction) {
            Some(f) => format!(" tv_above_tol={f:.4}"),
            None => String::new(),
        };
        writeln!(
            log,
            "n={} L={} {} rates=[{}] delta={} mean_tv={:.5} A={} B={} Ca={} Cb={} D={}{exceed} verdict={verdict}",
            row.n,
            row.agents,
            row.scheme,
            rates.join(", "),
            row.delta,
            row.mean_tv,
            row.case_a,
            row.case_b,
            row.case_ca,
            row.case_cb,
            row.case_d,
        )?;
    }
    writeln!(log, "wrote {} rows to {}", rows.len(), out.display())?;
    Ok(rows)
}

/// The region curve of `spec` and its `delta_min`.
pub fn region_curve(spec: &RunSpec, seed_override: Option<u64>) -> Result<(f64, Vec<CurvePoint>), CliError> {
    let section = spec.region_section()?;
    let query = spec.region_query()?;
    let mut opts = spec.solver_options();
    if let Some(seed) = seed_override {
        opts.seed = seed;
    }
    let solver = region::RegionSolver::new(&query, &opts)?;
    let curve = region::rate_delta_curve(&query, &section.delta_grid, &opts)?;
    Ok((solver.delta_min(), curve))
}

/// Writes a region CSV. Rates are left empty on infeasible rows;
/// `achieved_tv` is the larger TV of the two optimizing channels.
pub fn write_region<W: Write>(mut out: W, delta_min: f64, curve: &[CurvePoint]) -> Result<(), CliError> {
    writeln!(out, "{REGION_SCHEMA} delta_min={delta_min}")?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["delta", "rate_per_agent", "rate_finite", "achieved_tv", "feasible"])
        .map_err(csv_err)?;
    for p in curve {
        let feasible = p.per_agent.feasible && p.finite.feasible;
        let rate = |v: f64| if feasible { v.to_string() } else { String::new() };
        let tv = p.per_agent.achieved_tv.max(p.finite.achieved_tv);
        w.write_record([
            p.delta.to_string(),
            rate(p.per_agent.rate),
            rate(p.finite.rate),
            tv.to_string(),
            feasible.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn region(spec: &RunSpec, out: &Path, seed_override: Option<u64>, log: &mut dyn Write) -> Result<(), CliError> {
    let (delta_min, curve) = region_curve(spec, seed_override)?;
    let mut w = BufWriter::new(File::create(out)?);
    write_region(&mut w, delta_min, &curve)?;
    w.flush()?;
    writeln!(log, "delta_min={delta_min:.6}")?;
    for p in &curve {
        writeln!(
            log,
            "delta={} per_agent={:.6} finite={:.6} feasible={}",
            p.delta,
            p.per_agent.rate,
            p.finite.rate,
            p.per_agent.feasible && p.finite.feasible
        )?;
    }
    writeln!(log, "wrote {} rows to {}", curve.len(), out.display())?;
    Ok(())
}

/// Runs every acceptance suite; fails when any criterion fails.
pub fn verify(tolerances: &Tolerances, log: &mut dyn Write) -> Result<(), CliError> {
    let reports = verify::run_all(tolerances, |r| {
        let _ = writeln!(log, "{r}");
    });
    let failed = reports.iter().filter(|r| !r.passed).count();
    writeln!(log, "{} of {} criteria passed", reports.len() - failed, reports.len())?;
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

fn finish(result: Result<(), CliError>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("coordsim: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_simulate(spec_path: &Path, out_path: &Path, opts: &SimulateOptions) -> i32 {
    finish(
        RunSpec::load(spec_path)
            .and_then(|spec| simulate(&spec, out_path, opts, &mut std::io::stdout().lock()).map(|_| ())),
    )
}

pub fn cmd_region(spec_path: &Path, out_path: &Path, seed_override: Option<u64>) -> i32 {
    finish(
        RunSpec::load(spec_path).and_then(|spec| region(&spec, out_path, seed_override, &mut std::io::stdout().lock())),
    )
}

/// Without a spec the default tolerances are used.
pub fn cmd_verify(spec_path: Option<&Path>) -> i32 {
    finish((|| {
        let tolerances = match spec_path {
            Some(p) => crate::spec::load_tolerances(p)?,
            None => Tolerances::default(),
        };
        verify(&tolerances, &mut std::io::stdout().lock())
    })())
}
