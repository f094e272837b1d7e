//! Desk-scale acceptance suites, one per criterion. Each suite compares
//! the library against the brute-force references in [`oracle`] and
//! returns a [`CriterionReport`].

mod coding;
pub mod oracle;
mod region;
mod replay;

pub use coding::{criterion_5, criterion_6, trend_scenario, GOLDEN_MEAN_TV_N160};
pub use region::{criterion_7, criterion_8};
pub use replay::{criterion_9, replay_spec_json};

use coordsim::probkit::{self, JointPmf, JointPmf3, JointType, Pmf};
use coordsim::rng::{Sampler, StreamKey};
use coordsim::typicality;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::{Duration, Instant};

/// Tolerances and thresholds of the suites. Every field can be overridden
/// from the `verify` section of a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Information quantities against the entropy-based oracle.
    pub info_tol: f64,
    /// TV of floating-point distributions against the event supremum.
    pub float_tv_tol: f64,
    /// Binomial slack, in standard deviations, of Monte Carlo checks.
    pub sigmas: f64,
    /// Allowed excess of `I(X̂;Ŷ|X)` over `I(X̂;Ŷ)`.
    pub cmi_order_tol: f64,
    /// Ceiling on `mean_tv` at the largest blocklength of the trend run.
    pub golden_mean_tv: f64,
    /// Ceiling on the case-B frequency at the largest blocklength.
    pub case_b_max: f64,
    /// Rate agreement between the region solver and the grid.
    pub region_rate_tol: f64,
    /// Slack for "non-increasing" along a rate-Δ curve.
    pub monotone_tol: f64,
    /// Rate agreement at `Δ = 0`.
    pub delta_zero_tol: f64,
    /// Multiplies every runtime limit.
    pub time_scale: f64,
    /// Run only these criteria (all when empty).
    pub only: Vec<u32>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            info_tol: 1e-10,
            float_tv_tol: 1e-14,
            sigmas: 3.0,
            cmi_order_tol: 1e-10,
            golden_mean_tv: GOLDEN_MEAN_TV_N160,
            case_b_max: 0.10,
            region_rate_tol: 1e-4,
            monotone_tol: 1e-9,
            delta_zero_tol: 1e-6,
            time_scale: 1.0,
            only: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {}: {} {} ({}) [{:.2}s of {:.0}s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs_f64()
        )
    }
}

/// Runs `body` and folds the runtime limit into the verdict.
fn timed(
    id: u32,
    name: &'static str,
    limit_secs: f64,
    tol: &Tolerances,
    body: impl FnOnce() -> (bool, String),
) -> CriterionReport {
    let start = Instant::now();
    let (ok, mut detail) = body();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs_f64(limit_secs * tol.time_scale);
    let in_time = elapsed <= limit;
    if !in_time {
        detail.push_str("; runtime limit exceeded");
    }
    CriterionReport {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed,
        limit,
    }
}

pub type Suite = fn(&Tolerances) -> CriterionReport;

pub const SUITES: [(u32, Suite); 9] = [
    (1, criterion_1),
    (2, criterion_2),
    (3, criterion_3),
    (4, criterion_4),
    (5, criterion_5),
    (6, criterion_6),
    (7, criterion_7),
    (8, criterion_8),
    (9, criterion_9),
];

/// Runs the selected suites in order, handing each report to `on_report`
/// as soon as it is ready.
pub fn run_all(tol: &Tolerances, mut on_report: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    SUITES
        .iter()
        .filter(|(id, _)| tol.only.is_empty() || tol.only.contains(id))
        .map(|(_, suite)| {
            let r = suite(tol);
            on_report(&r);
            r
        })
        .collect()
}

/// Collects up to a few failure descriptions and counts the rest.
#[derive(Default)]
struct Failures {
    shown: Vec<String>,
    total: usize,
}

impl Failures {
    fn push(&mut self, msg: impl FnOnce() -> String) {
        self.total += 1;
        if self.shown.len() < 3 {
            self.shown.push(msg());
        }
    }

    fn merge(mut self, other: Failures) -> Failures {
        self.total += other.total;
        for s in other.shown {
            if self.shown.len() < 3 {
                self.shown.push(s);
            }
        }
        self
    }

    fn summary(&self, checks: u64) -> (bool, String) {
        if self.total == 0 {
            (true, format!("{checks} checks"))
        } else {
            (
                false,
                format!("{} of {checks} checks failed: {}", self.total, self.shown.join("; ")),
            )
        }
    }
}

fn bits(k: u64, n: usize) -> Vec<usize> {
    (0..n).map(|i| (k >> i & 1) as usize).collect()
}

/// All count vectors of `cells` non-negative entries summing to `n`.
fn compositions(n: u64, cells: usize) -> Vec<Vec<u64>> {
    if cells == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, cells - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Probability kernels against brute force on exhaustive binary instances
/// and random distributions.
pub fn criterion_1(tol: &Tolerances) -> CriterionReport {
    timed(1, "probability kernels vs brute force", 10.0, tol, || {
        let mut fails = Failures::default();
        let mut checks = 0u64;
        for n in 1..=6usize {
            for k in 0..1u64 << (2 * n) {
                let (x, y) = (bits(k, n), bits(k >> n, n));
                let t = probkit::joint_type(&x, &y, 2, 2).expect("binary sequences");
                let counts = oracle::cell_counts(&x, &y, 2, 2);
                checks += 2;
                if t.counts() != counts.as_slice() {
                    fails.push(|| format!("joint_type of {x:?},{y:?}"));
                }
                let p = t.to_pmf();
                let (got, want) = (
                    probkit::mutual_information(&p),
                    oracle::mutual_information(p.data(), 2, 2),
                );
                if (got - want).abs() > tol.info_tol {
                    fails.push(|| format!("MI of type {:?}: {got} vs {want}", t.counts()));
                }
            }
            let types = compositions(n as u64, 4);
            for a in &types {
                let ta = JointType::from_counts(2, 2, a.clone()).expect("valid counts");
                for b in &types {
                    let tb = JointType::from_counts(2, 2, b.clone()).expect("valid counts");
                    let got = probkit::types_tv(&ta, &tb).expect("same shape");
                    let want = oracle::tv_sup_counts(a, b, n as u64);
                    checks += 1;
                    if got != want {
                        fails.push(|| format!("TV of types {a:?},{b:?}: {got} vs {want}"));
                    }
                }
            }
        }

        let root = StreamKey::new(0xC1);
        for i in 0..1000u64 {
            let key = root.derive(i);
            let rows = 2 + (key.word(0) % 3) as usize;
            let cols = 2 + (key.word(1) % 3) as usize;
            let p = oracle::random_pmf(key.derive(10), rows * cols);
            let q = oracle::random_pmf(key.derive(11), rows * cols);
            let jp = JointPmf::new(rows, cols, p.clone()).expect("random pmf");
            let jq = JointPmf::new(rows, cols, q.clone()).expect("random pmf");
            let got = probkit::tv_distance(&jp, &jq).expect("same shape");
            let want = oracle::tv_sup(&p, &q);
            if (got - want).abs() > tol.float_tv_tol {
                fails.push(|| format!("TV of random pair {i}: {got} vs {want}"));
            }
            let (got, want) = (
                probkit::mutual_information(&jp),
                oracle::mutual_information(&p, rows, cols),
            );
            if (got - want).abs() > tol.info_tol {
                fails.push(|| format!("MI of random joint {i}: {got} vs {want}"));
            }
            let dims = [
                2 + (key.word(2) % 2) as usize,
                2 + (key.word(3) % 2) as usize,
                2 + (key.word(4) % 2) as usize,
            ];
            let r = oracle::random_pmf(key.derive(12), dims.iter().product());
            let t3 = JointPmf3::new(dims, r.clone()).expect("random tensor");
            let (got, want) = (
                probkit::conditional_mutual_information(&t3),
                oracle::conditional_mutual_information(&r, dims),
            );
            if (got - want).abs() > tol.info_tol {
                fails.push(|| format!("CMI of random tensor {i}: {got} vs {want}"));
            }
            checks += 3;
        }
        fails.summary(checks)
    })
}

/// The binary joints the typicality suites enumerate against.
fn binary_joints() -> Vec<JointPmf> {
    [
        vec![0.25, 0.25, 0.25, 0.25],
        vec![0.1, 0.2, 0.3, 0.4],
        vec![0.5, 0.0, 0.125, 0.375],
        vec![0.7, 0.1, 0.05, 0.15],
    ]
    .into_iter()
    .map(|d| JointPmf::new(2, 2, d).expect("valid joint"))
    .collect()
}

/// `is_strongly_typical` (and its single-sequence and conditional forms)
/// against the literal definition on every binary pair with `n ≤ 8`.
pub fn criterion_2(tol: &Tolerances) -> CriterionReport {
    timed(2, "typicality matches the definition", 30.0, tol, || {
        let joints = binary_joints();
        let results: Vec<(Failures, u64)> = (1..=8usize)
            .into_par_iter()
            .map(|n| {
                let mut fails = Failures::default();
                let mut checks = 0u64;
                for j in &joints {
                    let px = j.marginal_rows();
                    for eps in [0.05, 0.1, 0.3] {
                        for k in 0..1u64 << (2 * n) {
                            let (x, y) = (bits(k, n), bits(k >> n, n));
                            let want = oracle::literally_typical(&x, &y, j.data(), 2, 2, eps);
                            let got = typicality::is_strongly_typical(&x, &y, j, eps).expect("valid input");
                            let cond = typicality::is_conditionally_typical(&y, &x, j, eps).expect("valid input");
                            checks += 2;
                            if got != want || cond != want {
                                fails.push(|| format!("n={n} eps={eps} x={x:?} y={y:?}: {got}/{cond} vs {want}"));
                            }
                            if k >> n == 0 {
                                let want = oracle::literally_typical_single(&x, px.probs(), eps);
                                let got = typicality::is_sequence_typical(&x, &px, eps).expect("valid input");
                                checks += 1;
                                if got != want {
                                    fails.push(|| format!("single n={n} eps={eps} x={x:?}: {got} vs {want}"));
                                }
                            }
                        }
                    }
                }
                (fails, checks)
            })
            .collect();
        let checks = results.iter().map(|r| r.1).sum();
        let fails = results
            .into_iter()
            .fold(Failures::default(), |acc, (f, _)| acc.merge(f));
        fails.summary(checks)
    })
}

/// Fraction of `trials` i.i.d. draws of length `n` from `j` that are
/// strongly `ε`-typical.
fn typical_frequency(j: &JointPmf, n: usize, epsilon: f64, trials: u64, seed: u64) -> f64 {
    let flat = Pmf::new(j.data().to_vec()).expect("joint is a pmf");
    let sampler = Sampler::new(&flat);
    let cols = j.cols();
    let root = StreamKey::new(seed);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let key = root.derive(t);
            let (x, y): (Vec<usize>, Vec<usize>) = (0..n as u64)
                .map(|i| {
                    let c = sampler.sample(key.uniform(i));
                    (c / cols, c % cols)
                })
                .unzip();
            typicality::is_strongly_typical(&x, &y, j, epsilon).expect("valid draw") as u64
        })
        .sum();
    hits as f64 / trials as f64
}

/// The probability and cardinality bounds on strongly typical sets.
pub fn criterion_3(tol: &Tolerances) -> CriterionReport {
    timed(3, "typical-set probability and cardinality bounds", 60.0, tol, || {
        let mut fails = Failures::default();
        let mut notes = Vec::new();
        let mut checks = 0u64;
        let trials = 10_000u64;
        let joints = binary_joints();
        // The required run, plus one blocklength where the bound is informative.
        let runs = [(&joints[0], 400usize), (&joints[1], 400), (&joints[0], 40_000)];
        for (idx, &(j, n)) in runs.iter().enumerate() {
            let eps = 0.2;
            let dt = typicality::delta_t(n as u64, eps, &[2, 2]);
            let freq = typical_frequency(j, n, eps, trials, 0xC3 + idx as u64);
            checks += 1;
            if dt < 1.0 {
                let p = 1.0 - dt;
                let slack = tol.sigmas * (p * (1.0 - p) / trials as f64).sqrt();
                if freq < p - slack {
                    fails.push(|| format!("n={n}: typical frequency {freq} < 1 - delta_t = {p}"));
                }
                notes.push(format!("n={n}: freq {freq:.4} >= {p:.4}"));
            } else {
                notes.push(format!("n={n}: freq {freq:.4}, delta_t {dt:.3e} vacuous"));
            }
        }

        let n = 8usize;
        for j in &joints {
            for eps in [0.1, 0.25, 0.5, 1.0] {
                let bound = typicality::typical_set_size_bound(j, n as u64, eps).expect("valid joint");
                let cond_bound = typicality::conditional_typical_set_size_bound(j, n as u64, eps).expect("valid joint");
                let mut size = 0u64;
                let mut per_x = vec![0u64; 1 << n];
                for k in 0..1u64 << (2 * n) {
                    let (x, y) = (bits(k, n), bits(k >> n, n));
                    if oracle::literally_typical(&x, &y, j.data(), 2, 2, eps) {
                        size += 1;
                        per_x[(k & ((1 << n) - 1)) as usize] += 1;
                    }
                }
                checks += 2;
                if bound.is_nan() || size as f64 >= bound {
                    fails.push(|| format!("|A| = {size} >= {bound} at eps={eps}"));
                }
                let largest = per_x.iter().copied().max().unwrap_or(0);
                if cond_bound.is_nan() || largest as f64 >= cond_bound {
                    fails.push(|| format!("|A(x)| = {largest} >= {cond_bound} at eps={eps}"));
                }
            }
        }
        let (ok, detail) = fails.summary(checks);
        (ok, format!("{detail}; {}", notes.join(", ")))
    })
}

/// `I(X̂;Ŷ|X) ≤ I(X̂;Ŷ)` on random Markov chains `X - X̂ - Ŷ`.
pub fn criterion_4(tol: &Tolerances) -> CriterionReport {
    timed(
        4,
        "conditional rate never exceeds the finite-agent rate",
        5.0,
        tol,
        || {
            let mut fails = Failures::default();
            let mut worst = f64::NEG_INFINITY;
            let root = StreamKey::new(0xC4);
            for i in 0..1000u64 {
                let key = root.derive(i);
                let sizes: Vec<usize> = (0..3).map(|s| 2 + (key.word(s) % 3) as usize).collect();
                let p0 = Pmf::new(oracle::random_pmf(key.derive(10), sizes[0])).expect("random pmf");
                let c1 = coordsim::CondPmf::from_rows(oracle::random_channel(key.derive(11), sizes[0], sizes[1]))
                    .expect("random channel");
                let c2 = coordsim::CondPmf::from_rows(oracle::random_channel(key.derive(12), sizes[1], sizes[2]))
                    .expect("random channel");
                let t = probkit::compose_markov(&p0, &c1, &c2).expect("shapes agree");
                let cmi = probkit::conditional_mutual_information(&t);
                let mi = probkit::mutual_information(&t.p_xhat_y());
                worst = worst.max(cmi - mi);
                if cmi > mi + tol.cmi_order_tol {
                    fails.push(|| format!("triple {i}: {cmi} > {mi}"));
                }
            }
            let (ok, detail) = fails.summary(1000);
            (ok, format!("{detail}; max(CMI - MI) = {worst:.3e}"))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(6, 4).len(), 84);
        assert!(compositions(3, 4).iter().all(|c| c.iter().sum::<u64>() == 3));
    }

    #[test]
    fn report_line_format() {
        let r = CriterionReport {
            id: 4,
            name: "x",
            passed: true,
            detail: "ok".into(),
            elapsed: Duration::from_millis(1500),
            limit: Duration::from_secs(5),
        };
        assert_eq!(r.to_string(), "criterion 4: PASS x (ok) [1.50s of 5s]");
    }

    #[test]
    fn tampered_tolerance_fails_its_suite() {
        let tol = Tolerances {
            cmi_order_tol: -1.0,
            ..Tolerances::default()
        };
        assert!(!criterion_4(&tol).passed);
    }
}
