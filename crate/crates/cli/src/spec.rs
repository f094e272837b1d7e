//! The JSON run file and its conversion into library configs.

use crate::error::CliError;
use crate::verify::Tolerances;
use coordsim::coding::{BinnedSchemeConfig, DecoderLimits, DirectSchemeConfig};
use coordsim::harness::{ExperimentConfig, SweepGrid};
use coordsim::probkit::bits_to_nats;
use coordsim::region::{self, RegionQuery, SolverOptions};
use coordsim::{CondPmf, MarkovLaw, Pmf, Scheme, SourceConfig};
use serde::Deserialize;
use std::path::Path;

/// Row sums may be off by this much before renormalization.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub alphabets: Alphabets,
    pub source: SourceSection,
    pub target: TargetSection,
    pub scheme: Option<SchemeSection>,
    pub experiment: Option<ExperimentSection>,
    pub region: Option<RegionSection>,
    pub verify: Option<Tolerances>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphabets {
    pub x_size: usize,
    pub y_size: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub p0: Vec<f64>,
    pub obs_channel: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub p_y_given_x: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Direct,
    Binned,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    fn to_nats(self, v: f64) -> f64 {
        match self {
            Units::Nats => v,
            Units::Bits => bits_to_nats(v),
        }
    }
}

/// A flat list is a sweep over one shared rate (direct) or a single
/// `[R_ag, R'_ag]` pair (binned); a nested list gives one entry per sweep
/// point.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Epsilons {
    pub epsilon: f64,
    /// Per-agent slacks of the direct scheme; one value is shared.
    #[serde(default)]
    pub slacks: Option<Vec<f64>>,
    /// `ε_ag` of the binned scheme.
    #[serde(default)]
    pub slack: Option<f64>,
    /// `ε_0` of the binned scheme.
    #[serde(default)]
    pub bin_slack: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    pub rates: Rates,
    pub epsilons: Epsilons,
    #[serde(default)]
    pub units: Units,
    /// Auxiliary channel `p(y|x̂)`; defaults to the channel closest to the
    /// target.
    #[serde(default)]
    pub channel: Option<Vec<Vec<f64>>>,
}

fn default_true() -> bool {
    true
}

fn default_z() -> f64 {
    1.645
}

fn default_deltas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_list: Vec<usize>,
    #[serde(rename = "L_list")]
    pub agents_list: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_deltas")]
    pub delta_list: Vec<f64>,
    /// Encoder search budget (codewords examined).
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub max_budget_fraction: Option<f64>,
    #[serde(default = "default_true")]
    pub redraw_codebook: bool,
    #[serde(default = "default_z")]
    pub confidence_z: f64,
    #[serde(default)]
    pub tv_tolerance: Option<f64>,
    #[serde(default)]
    pub decoder_limits: Option<DecoderLimits>,
    #[serde(default)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub delta_grid: Vec<f64>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn pmf(name: &str, v: &[f64], size: usize) -> Result<Pmf, CliError> {
    if v.len() != size {
        return Err(schema(format!("{name}: expected {size} entries, got {}", v.len())));
    }
    Pmf::normalized(v.to_vec(), STOCHASTIC_TOL).map_err(|e| schema(format!("{name}: {e}")))
}

fn channel(name: &str, rows: &[Vec<f64>], inputs: usize, outputs: usize) -> Result<CondPmf, CliError> {
    if rows.len() != inputs || rows.iter().any(|r| r.len() != outputs) {
        return Err(schema(format!("{name}: expected a {inputs}x{outputs} matrix")));
    }
    CondPmf::from_rows_normalized(rows.to_vec(), STOCHASTIC_TOL).map_err(|e| schema(format!("{name}: {e}")))
}

fn check_rate(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(schema(format!("{name} must be a finite non-negative number, got {v}")))
    }
}

fn check_delta(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(schema(format!(
            "{name}: delta must be finite and non-negative, got {v}"
        )))
    }
}

/// Reads only the optional `verify` section of a spec file, so a document
/// holding nothing but tolerance overrides is accepted.
pub fn load_tolerances(path: &Path) -> Result<Tolerances, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| schema(format!("invalid spec: {e}")))?;
    match doc.get("verify") {
        Some(v) => Tolerances::deserialize(v).map_err(|e| schema(format!("verify: {e}"))),
        None => Ok(Tolerances::default()),
    }
}

impl RunSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: RunSpec = serde_json::from_str(text).map_err(|e| schema(format!("invalid spec: {e}")))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validates every section that is present.
    fn check(&self) -> Result<(), CliError> {
        if self.alphabets.x_size == 0 || self.alphabets.y_size == 0 {
            return Err(schema("alphabet sizes must be positive"));
        }
        self.p0()?;
        self.obs()?;
        self.target()?;
        if let Some(s) = &self.scheme {
            if !(s.epsilons.epsilon > 0.0 && s.epsilons.epsilon.is_finite()) {
                return Err(schema("scheme.epsilons.epsilon must be positive"));
            }
            if let Some(c) = &s.channel {
                channel("scheme.channel", c, self.alphabets.x_size, self.alphabets.y_size)?;
            }
            self.rate_list()?;
        }
        if let Some(e) = &self.experiment {
            if e.n_list.is_empty() || e.n_list.contains(&0) {
                return Err(schema("experiment.n_list must hold positive blocklengths"));
            }
            if e.agents_list.is_empty() || e.agents_list.contains(&0) {
                return Err(schema("experiment.L_list must hold positive agent counts"));
            }
            if e.trials == 0 {
                return Err(schema("experiment.trials must be at least 1"));
            }
            if e.delta_list.is_empty() {
                return Err(schema("experiment.delta_list must not be empty"));
            }
            for &d in &e.delta_list {
                check_delta("experiment.delta_list", d)?;
            }
            if let Some(f) = e.max_budget_fraction {
                if !(0.0..=1.0).contains(&f) {
                    return Err(schema("experiment.max_budget_fraction must lie in [0, 1]"));
                }
            }
            if !(e.confidence_z.is_finite() && e.confidence_z >= 0.0) {
                return Err(schema("experiment.confidence_z must be non-negative"));
            }
        }
        if let Some(r) = &self.region {
            if r.delta_grid.is_empty() {
                return Err(schema("region.delta_grid must not be empty"));
            }
            for &d in &r.delta_grid {
                check_delta("region.delta_grid", d)?;
            }
            let step = self.solver_options().grid_step;
            if !(step > 0.0 && step <= 1.0) {
                return Err(schema("region.solver.grid_step must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn p0(&self) -> Result<Pmf, CliError> {
        pmf("source.p0", &self.source.p0, self.alphabets.x_size)
    }

    pub fn obs(&self) -> Result<CondPmf, CliError> {
        let nx = self.alphabets.x_size;
        channel("source.obs_channel", &self.source.obs_channel, nx, nx)
    }

    pub fn target(&self) -> Result<CondPmf, CliError> {
        channel(
            "target.p_y_given_x",
            &self.target.p_y_given_x,
            self.alphabets.x_size,
            self.alphabets.y_size,
        )
    }

    pub fn scheme_section(&self) -> Result<&SchemeSection, CliError> {
        self.scheme.as_ref().ok_or_else(|| schema("missing section: scheme"))
    }

    pub fn experiment_section(&self) -> Result<&ExperimentSection, CliError> {
        self.experiment
            .as_ref()
            .ok_or_else(|| schema("missing section: experiment"))
    }

    pub fn region_section(&self) -> Result<&RegionSection, CliError> {
        self.region.as_ref().ok_or_else(|| schema("missing section: region"))
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut opts = SolverOptions::default();
        if let Some(s) = self.region.as_ref().and_then(|r| r.solver.as_ref()) {
            opts.grid_step = s.grid_step.unwrap_or(opts.grid_step);
            opts.restarts = s.restarts.unwrap_or(opts.restarts);
            opts.seed = s.seed.unwrap_or(opts.seed);
        }
        opts
    }

    pub fn region_query(&self) -> Result<RegionQuery, CliError> {
        RegionQuery::new(self.p0()?, self.obs()?, self.target()?, 0.0).map_err(|e| schema(e.to_string()))
    }

    /// Sweep rate entries in nats.
    pub fn rate_list(&self) -> Result<Vec<Vec<f64>>, CliError> {
        let s = self.scheme_section()?;
        let entries: Vec<Vec<f64>> = match (&s.rates, s.kind) {
            (Rates::Flat(v), SchemeKind::Direct) => v.iter().map(|&r| vec![r]).collect(),
            (Rates::Flat(v), SchemeKind::Binned) => vec![v.clone()],
            (Rates::Nested(v), _) => v.clone(),
        };
        if entries.is_empty() || entries.iter().any(|e| e.is_empty()) {
            return Err(schema("scheme.rates must not be empty"));
        }
        if s.kind == SchemeKind::Binned && entries.iter().any(|e| e.len() != 2) {
            return Err(schema("binned scheme rates are [R_ag, R'_ag] pairs"));
        }
        entries
            .iter()
            .map(|e| {
                e.iter()
                    .map(|&r| check_rate("scheme.rates", s.units.to_nats(r)))
                    .collect()
            })
            .collect()
    }

    /// The design channel `p(y|x̂)`: the given one, or a channel reaching
    /// the smallest TV to the target.
    pub fn design_channel(&self) -> Result<CondPmf, CliError> {
        let s = self.scheme_section()?;
        match &s.channel {
            Some(c) => channel("scheme.channel", c, self.alphabets.x_size, self.alphabets.y_size),
            None => {
                let (_, q) = region::min_achievable_delta(&self.region_query()?, &self.solver_options())
                    .map_err(|e| schema(format!("cannot derive scheme.channel: {e}")))?;
                Ok(q)
            }
        }
    }

    /// Template scheme (rates are replaced per sweep cell).
    pub fn build_scheme(&self) -> Result<Scheme, CliError> {
        let s = self.scheme_section()?;
        let law = MarkovLaw::new(self.p0()?, self.obs()?, self.design_channel()?).map_err(|e| schema(e.to_string()))?;
        let first = self.rate_list()?.remove(0);
        let eps = &s.epsilons;
        let u = s.units;
        let mut scheme = match s.kind {
            SchemeKind::Direct => {
                let slacks = eps
                    .slacks
                    .clone()
                    .unwrap_or_else(|| vec![0.0])
                    .into_iter()
                    .map(|v| check_rate("scheme.epsilons.slacks", u.to_nats(v)))
                    .collect::<Result<Vec<_>, _>>()?;
                Scheme::Direct(
                    DirectSchemeConfig::new(law, first, slacks, eps.epsilon).map_err(|e| schema(e.to_string()))?,
                )
            }
            SchemeKind::Binned => {
                let slack = check_rate("scheme.epsilons.slack", u.to_nats(eps.slack.unwrap_or(0.0)))?;
                let bin_slack = check_rate("scheme.epsilons.bin_slack", u.to_nats(eps.bin_slack.unwrap_or(0.0)))?;
                let mut cfg = BinnedSchemeConfig::new(law, first[0], slack, first[1], bin_slack, eps.epsilon)
                    .map_err(|e| schema(e.to_string()))?;
                if let Some(limits) = self.experiment.as_ref().and_then(|e| e.decoder_limits) {
                    cfg.limits = limits;
                }
                Scheme::Binned(cfg)
            }
        };
        scheme.set_budget(self.experiment.as_ref().and_then(|e| e.budget));
        Ok(scheme)
    }

    /// Template experiment and sweep grid.
    pub fn build_experiment(&self, seed_override: Option<u64>) -> Result<(ExperimentConfig, SweepGrid), CliError> {
        let e = self.experiment_section()?;
        let scheme = self.build_scheme()?;
        let source = SourceConfig::new(self.p0()?, self.obs()?, e.agents_list[0], e.n_list[0])
            .map_err(|err| schema(err.to_string()))?;
        let mut cfg = ExperimentConfig::new(
            source,
            scheme,
            self.target()?,
            e.trials,
            seed_override.unwrap_or(e.seed),
        );
        cfg.delta = e.delta_list[0];
        cfg.search_budget = e.budget;
        cfg.max_budget_fraction = e.max_budget_fraction;
        cfg.redraw_codebook = e.redraw_codebook;
        cfg.tv_tolerance = e.tv_tolerance;
        cfg.record_timing = e.record_timing;
        let grid = SweepGrid {
            n_list: e.n_list.clone(),
            agents_list: e.agents_list.clone(),
            rate_list: self.rate_list()?,
            delta_list: e.delta_list.clone(),
        };
        Ok((cfg, grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "alphabets": {"x_size": 2, "y_size": 2},
        "source": {"p0": [0.5, 0.5], "obs_channel": [[0.9, 0.1], [0.1, 0.9]]},
        "target": {"p_y_given_x": [[0.8, 0.2], [0.2, 0.8]]},
        "scheme": {"kind": "direct", "rates": [0.5, 1.0], "epsilons": {"epsilon": 0.3}},
        "experiment": {"n_list": [10], "L_list": [1], "trials": 4, "seed": 1}
    }"#;

    #[test]
    fn parses_minimal_spec() {
        let spec = RunSpec::from_json(MINIMAL).unwrap();
        assert_eq!(spec.rate_list().unwrap(), vec![vec![0.5], vec![1.0]]);
        let (cfg, grid) = spec.build_experiment(None).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(grid.cells().len(), 2);
        assert_eq!(spec.experiment_section().unwrap().delta_list, vec![0.0]);
    }

    #[test]
    fn bits_are_converted() {
        let text = MINIMAL.replace(r#""epsilons""#, r#""units": "bits", "epsilons""#);
        let spec = RunSpec::from_json(&text).unwrap();
        let r = spec.rate_list().unwrap();
        assert!((r[1][0] - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(RunSpec::from_json("{"), Err(CliError::Schema(_))));
        let bad_rows = MINIMAL.replace("[0.8, 0.2]", "[0.8, 0.3]");
        assert!(matches!(RunSpec::from_json(&bad_rows), Err(CliError::Schema(_))));
        let bad_shape = MINIMAL.replace("[0.5, 0.5]", "[1.0]");
        assert!(matches!(RunSpec::from_json(&bad_shape), Err(CliError::Schema(_))));
        let unknown = MINIMAL.replace(r#""target""#, r#""extra": 1, "target""#);
        assert!(matches!(RunSpec::from_json(&unknown), Err(CliError::Schema(_))));
    }

    #[test]
    fn small_row_sum_error_is_renormalized() {
        let text = MINIMAL.replace("[0.8, 0.2]", "[0.8, 0.2000000001]");
        let spec = RunSpec::from_json(&text).unwrap();
        let t = spec.target().unwrap();
        assert!((t.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binned_rates_are_pairs() {
        let text = MINIMAL
            .replace(r#""kind": "direct""#, r#""kind": "binned""#)
            .replace("[0.5, 1.0]", "[[0.2, 0.3], [0.1, 0.1]]");
        let spec = RunSpec::from_json(&text).unwrap();
        assert!(matches!(spec.build_scheme().unwrap(), Scheme::Binned(_)));
        let odd = MINIMAL
            .replace(r#""kind": "direct""#, r#""kind": "binned""#)
            .replace("[0.5, 1.0]", "[0.5, 1.0, 2.0]");
        assert!(RunSpec::from_json(&odd).is_err());
    }
}
