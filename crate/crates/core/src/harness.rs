//! Monte Carlo driver: independent trials of a coding scheme, aggregated
//! TV statistics, error-case frequencies and Δ-coordination verdicts.
//!
//! Trials run in parallel but are collected in trial order and reduced
//! sequentially, so results are bit-identical for any number of workers.

use crate::coding::{CodingError, ErrorCase, Scheme};
use crate::probkit::{CondPmf, ProbError};
use crate::rng::{StreamKey, DOMAIN_CODEBOOK};
use crate::source::{draw_actions, SourceConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::time::Instant;
use thiserror::Error;

/// First line of every sweep CSV.
pub const CSV_SCHEMA: &str = "# coordsim sweep v1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("binned decoder limit: {0}")]
    DecoderLimit(String),
    #[error("search budget hit on {hits} of {trials} trials, above the allowed fraction {allowed}")]
    BudgetExceeded { hits: u64, trials: u64, allowed: f64 },
    #[error(transparent)]
    Coding(CodingError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CodingError> for HarnessError {
    fn from(e: CodingError) -> Self {
        match e {
            CodingError::DecoderBudget(msg) => HarnessError::DecoderLimit(msg),
            other => HarnessError::Coding(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub scheme: Scheme,
    /// Desired `p(y|x)`; realized types are scored against `p0 · target`.
    pub target: CondPmf,
    pub trials: u64,
    pub seed: u64,
    pub delta: f64,
    /// Maximum codewords an encoder may examine.
    pub search_budget: Option<u64>,
    /// Abort when more than this fraction of trials hit the search budget.
    pub max_budget_fraction: Option<f64>,
    /// Draw fresh codebooks for every trial (ensemble average) instead of
    /// one codebook shared by all trials.
    pub redraw_codebook: bool,
    /// Also report the fraction of trials with TV above this tolerance.
    pub tv_tolerance: Option<f64>,
    /// Record wall-clock time (makes output non-reproducible).
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(source: SourceConfig, scheme: Scheme, target: CondPmf, trials: u64, seed: u64) -> Self {
        Self {
            source,
            scheme,
            target,
            trials,
            seed,
            delta: 0.0,
            search_budget: None,
            max_budget_fraction: None,
            redraw_codebook: true,
            tv_tolerance: None,
            record_timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        let law = self.scheme.law();
        if law.p0() != self.source.p0() || law.obs() != self.source.obs_channel() {
            return Err(HarnessError::Config(
                "scheme law and source disagree on p0 or the observation channel".into(),
            ));
        }
        if self.target.inputs() != law.x_size() || self.target.outputs() != law.y_size() {
            return Err(HarnessError::Config(format!(
                "target must be {}x{}, got {}x{}",
                law.x_size(),
                law.y_size(),
                self.target.inputs(),
                self.target.outputs()
            )));
        }
        Ok(())
    }
}

/// Codebook seed of a trial.
pub fn codebook_seed(seed: u64, trial: u64, redraw: bool) -> u64 {
    if redraw {
        StreamKey::new(seed).derive(DOMAIN_CODEBOOK).derive(trial).word(0)
    } else {
        seed
    }
}

/// What a trial contributes to the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub tv: f64,
    pub error_case: ErrorCase,
    pub budget_hit: bool,
    pub search_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub trials: u64,
    pub mean_tv: f64,
    /// Sample standard deviation of the per-trial TV.
    pub sd_tv: f64,
    /// Nearest-rank quantiles of the per-trial TV.
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    /// Indexed by [`ErrorCase::index`].
    pub case_counts: [u64; 6],
    pub budget_hits: u64,
    pub mean_search_cost: f64,
    /// Fraction of trials with TV above the configured tolerance.
    pub exceed_fraction: Option<f64>,
    pub wall_time: Option<f64>,
}

impl ExperimentStats {
    pub fn count(&self, case: ErrorCase) -> u64 {
        self.case_counts[case.index()]
    }

    pub fn frequency(&self, case: ErrorCase) -> f64 {
        self.count(case) as f64 / self.trials as f64
    }

    pub fn counts_by_label(&self) -> BTreeMap<&'static str, u64> {
        ErrorCase::ALL.iter().map(|c| (c.as_str(), self.count(*c))).collect()
    }

    /// Reduces records in the order given.
    pub fn from_records(records: &[TrialRecord], tv_tolerance: Option<f64>) -> Self {
        let n = records.len() as u64;
        let mut tvs: Vec<f64> = records.iter().map(|r| r.tv).collect();
        let mean = tvs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            tvs.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut case_counts = [0u64; 6];
        for r in records {
            case_counts[r.error_case.index()] += 1;
        }
        let exceed_fraction = tv_tolerance.map(|tol| tvs.iter().filter(|&&t| t > tol).count() as f64 / n as f64);
        tvs.sort_by(f64::total_cmp);
        Self {
            trials: n,
            mean_tv: mean,
            sd_tv: var.sqrt(),
            q50: quantile(&tvs, 0.5),
            q90: quantile(&tvs, 0.9),
            q99: quantile(&tvs, 0.99),
            case_counts,
            budget_hits: records.iter().filter(|r| r.budget_hit).count() as u64,
            mean_search_cost: records.iter().map(|r| r.search_cost as f64).sum::<f64>() / n as f64,
            exceed_fraction,
            wall_time: None,
        }
    }
}

/// Nearest-rank quantile of sorted data: the `⌈pN⌉`-th smallest value.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Runs every trial and returns the records in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut scheme = cfg.scheme.clone();
    scheme.set_budget(cfg.search_budget);
    let target = cfg.target.joint_with(cfg.source.p0())?;
    let (n, agents) = (cfg.source.n(), cfg.source.agents());
    let shared = if cfg.redraw_codebook {
        None
    } else {
        Some(scheme.codebooks(n, agents, cfg.seed)?)
    };
    // Fail fast on size problems before spawning the trials.
    let first_books = scheme.codebooks(n, agents, codebook_seed(cfg.seed, 0, cfg.redraw_codebook))?;
    if let Scheme::Binned(b) = &scheme {
        crate::coding::check_decoder_limits(&first_books, b.law.x_size(), &b.limits)?;
    }

    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRecord> {
            let draw = draw_actions(&cfg.source, cfg.seed, trial);
            let owned;
            let books = match &shared {
                Some(b) => b,
                None => {
                    owned = scheme.codebooks(n, agents, codebook_seed(cfg.seed, trial, true))?;
                    &owned
                }
            };
            let out = scheme.run_trial(&draw, books, &target)?;
            Ok(TrialRecord {
                tv: out.tv_realized,
                error_case: out.error_case,
                budget_hit: out.budget_hit,
                search_cost: out.search_cost,
            })
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentStats> {
    let start = Instant::now();
    let records = run_trials(cfg)?;
    let mut stats = ExperimentStats::from_records(&records, cfg.tv_tolerance);
    if let Some(allowed) = cfg.max_budget_fraction {
        if stats.budget_hits as f64 > allowed * stats.trials as f64 {
            return Err(HarnessError::BudgetExceeded {
                hits: stats.budget_hits,
                trials: stats.trials,
                allowed,
            });
        }
    }
    if cfg.record_timing {
        stats.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Expectation form of Δ-coordination: passes iff
/// `mean_tv + z · sd / √trials ≤ delta`, so an interval straddling `delta`
/// fails.
pub fn check_delta_coordination(stats: &ExperimentStats, delta: f64, z: f64) -> Verdict {
    let slack = z * stats.sd_tv / (stats.trials as f64).sqrt();
    if stats.mean_tv + slack <= delta {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Grid of a sweep. For the direct scheme a rate entry is the per-agent
/// rate vector (one value is shared); for the binned scheme it is
/// `[R_ag, R'_ag]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n_list: Vec<usize>,
    pub agents_list: Vec<usize>,
    pub rate_list: Vec<Vec<f64>>,
    pub delta_list: Vec<f64>,
}

impl SweepGrid {
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &n in &self.n_list {
            for &agents in &self.agents_list {
                for rates in &self.rate_list {
                    for &delta in &self.delta_list {
                        out.push(SweepCell {
                            n,
                            agents,
                            rates: rates.clone(),
                            delta,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub n: usize,
    pub agents: usize,
    pub rates: Vec<f64>,
    pub delta: f64,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub agents: usize,
    pub scheme: String,
    /// Rates in nats, `;`-separated.
    pub rates: String,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub mean_tv: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    #[serde(rename = "caseA")]
    pub case_a: u64,
    #[serde(rename = "caseB")]
    pub case_b: u64,
    #[serde(rename = "caseCa")]
    pub case_ca: u64,
    #[serde(rename = "caseCb")]
    pub case_cb: u64,
    #[serde(rename = "caseD")]
    pub case_d: u64,
    pub budget_hits: u64,
    pub wall_s: Option<f64>,
}

impl SweepRow {
    fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}",
            self.n, self.agents, self.scheme, self.rates, self.delta
        )
    }
}

fn join_rates(rates: &[f64]) -> String {
    rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";")
}

fn scheme_for(template: &Scheme, rates: &[f64]) -> Result<Scheme> {
    match template {
        Scheme::Direct(c) => {
            let mut c = c.clone();
            c.rates = rates.to_vec();
            Ok(Scheme::Direct(c))
        }
        Scheme::Binned(c) => match rates {
            [r, rp] => {
                let mut c = c.clone();
                c.rate = *r;
                c.bin_rate = *rp;
                Ok(Scheme::Binned(c))
            }
            _ => Err(HarnessError::Config(format!(
                "binned rate entries are [R_ag, R'_ag], got {} values",
                rates.len()
            ))),
        },
    }
}

/// Runs every cell of `grid` missing from `existing`, in grid order.
///
/// Cells differing only in `delta` share one simulation; every cell uses
/// the template's seed, so a resumed sweep reproduces an uninterrupted one.
pub fn sweep(template: &ExperimentConfig, grid: &SweepGrid, existing: &[SweepRow]) -> Result<Vec<SweepRow>> {
    Ok(sweep_detailed(template, grid, existing)?
        .into_iter()
        .map(|(row, _)| row)
        .collect())
}

/// [`sweep`], also returning the full statistics of every cell that was
/// simulated (`None` for rows taken from `existing`).
pub fn sweep_detailed(
    template: &ExperimentConfig,
    grid: &SweepGrid,
    existing: &[SweepRow],
) -> Result<Vec<(SweepRow, Option<ExperimentStats>)>> {
    let done: HashMap<String, &SweepRow> = existing.iter().map(|r| (r.key(), r)).collect();
    let mut cache: HashMap<String, ExperimentStats> = HashMap::new();
    let mut rows = Vec::new();
    for cell in grid.cells() {
        let rates = join_rates(&cell.rates);
        let kind = template.scheme.kind().to_string();
        let probe_key = format!("{}|{}|{}|{}|{}", cell.n, cell.agents, kind, rates, cell.delta);
        if let Some(row) = done.get(&probe_key) {
            rows.push(((*row).clone(), None));
            continue;
        }
        let sim_key = format!("{}|{}|{}", cell.n, cell.agents, rates);
        let stats = match cache.get(&sim_key) {
            Some(s) => s.clone(),
            None => {
                let mut cfg = template.clone();
                cfg.source = template.source.with_n(cell.n)?.with_agents(cell.agents)?;
                cfg.scheme = scheme_for(&template.scheme, &cell.rates)?;
                let s = run_experiment(&cfg)?;
                cache.insert(sim_key, s.clone());
                s
            }
        };
        let row = SweepRow {
            n: cell.n,
            agents: cell.agents,
            scheme: kind,
            rates,
            epsilon: template.scheme.epsilon(),
            delta: cell.delta,
            trials: stats.trials,
            seed: template.seed,
            mean_tv: stats.mean_tv,
            q50: stats.q50,
            q90: stats.q90,
            q99: stats.q99,
            case_a: stats.count(ErrorCase::A),
            case_b: stats.count(ErrorCase::B),
            case_ca: stats.count(ErrorCase::Ca),
            case_cb: stats.count(ErrorCase::Cb),
            case_d: stats.count(ErrorCase::D),
            budget_hits: stats.budget_hits,
            wall_s: stats.wall_time,
        };
        rows.push((row, Some(stats)));
    }
    Ok(rows)
}

/// Writes the schema line, the header and the rows (LF line endings).
pub fn write_rows<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "n",
        "L",
        "scheme",
        "rates",
        "epsilon",
        "delta",
        "trials",
        "seed",
        "mean_tv",
        "q50",
        "q90",
        "q99",
        "caseA",
        "caseB",
        "caseCa",
        "caseCb",
        "caseD",
        "budget_hits",
        "wall_s",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_rows`], skipping `#` comment lines.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    rdr.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{DirectSchemeConfig, MarkovLaw};
    use crate::probkit::Pmf;

    fn rec(tv: f64, case: ErrorCase) -> TrialRecord {
        TrialRecord {
            tv,
            error_case: case,
            budget_hit: false,
            search_cost: 1,
        }
    }

    #[test]
    fn quantiles_are_nearest_rank() {
        let data: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(quantile(&data, 0.5), 50.0);
        assert_eq!(quantile(&data, 0.9), 90.0);
        assert_eq!(quantile(&data, 0.99), 99.0);
        assert_eq!(quantile(&[3.0], 0.99), 3.0);
    }

    #[test]
    fn stats_reduce_records() {
        let recs = [
            rec(0.1, ErrorCase::None),
            rec(0.3, ErrorCase::B),
            rec(0.2, ErrorCase::None),
        ];
        let s = ExperimentStats::from_records(&recs, Some(0.15));
        assert_eq!(s.trials, 3);
        assert!((s.mean_tv - 0.2).abs() < 1e-15);
        assert!((s.sd_tv - 0.1).abs() < 1e-12);
        assert_eq!(s.count(ErrorCase::None), 2);
        assert_eq!(s.count(ErrorCase::B), 1);
        assert_eq!(s.case_counts.iter().sum::<u64>(), 3);
        assert_eq!(s.exceed_fraction, Some(2.0 / 3.0));
        assert_eq!(s.q50, 0.2);
    }

    #[test]
    fn verdicts() {
        let zero = ExperimentStats::from_records(&[rec(0.0, ErrorCase::None); 10], None);
        assert_eq!(check_delta_coordination(&zero, 0.0, 3.0), Verdict::Pass);
        let half = ExperimentStats::from_records(&[rec(0.5, ErrorCase::D); 10], None);
        assert_eq!(check_delta_coordination(&half, 0.1, 3.0), Verdict::Fail);
        // Mean exactly at delta with spread: the interval straddles delta.
        let recs: Vec<_> = (0..20)
            .map(|i| rec(if i % 2 == 0 { 0.05 } else { 0.15 }, ErrorCase::None))
            .collect();
        let s = ExperimentStats::from_records(&recs, None);
        assert_eq!(check_delta_coordination(&s, 0.1, 1.96), Verdict::Fail);
        assert_eq!(check_delta_coordination(&s, 0.2, 1.96), Verdict::Pass);
    }

    fn copy_config(trials: u64) -> ExperimentConfig {
        let id = CondPmf::identity(2).unwrap();
        let p0 = Pmf::uniform(2).unwrap();
        let law = MarkovLaw::new(p0.clone(), id.clone(), id.clone()).unwrap();
        let scheme = Scheme::Direct(DirectSchemeConfig::new(law, vec![0.75], vec![0.05], 0.5).unwrap());
        let source = SourceConfig::new(p0, id.clone(), 1, 12).unwrap();
        ExperimentConfig::new(source, scheme, id, trials, 7)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cfg = copy_config(8);
        let grid = SweepGrid {
            n_list: vec![8, 10],
            agents_list: vec![1],
            rate_list: vec![vec![0.75]],
            delta_list: vec![0.0, 0.1],
        };
        let rows = sweep(&cfg, &grid, &[]).unwrap();
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let mut again = Vec::new();
        write_rows(&mut again, &back).unwrap();
        assert_eq!(buf, again);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_SCHEMA));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn mismatched_law_is_rejected() {
        let mut cfg = copy_config(4);
        cfg.source =
            SourceConfig::new(Pmf::new(vec![0.3, 0.7]).unwrap(), CondPmf::identity(2).unwrap(), 1, 12).unwrap();
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
    }
}
