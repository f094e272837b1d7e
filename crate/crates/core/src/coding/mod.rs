//! Random-codebook coordination codes.
//!
//! Two constructions share one lazily generated codebook type:
//!
//! * the direct scheme, where every agent scans its own codebook for the
//!   first codeword jointly typical with its observation and the decoder
//!   replays the codeword of the lowest-indexed successful agent;
//! * the binned scheme, where each agent only reveals the bin of its
//!   typical codeword and the decoder searches all bins jointly for the
//!   unique consistent codeword tuple.
//!
//! Trials are labelled with exactly one [`ErrorCase`].

mod analysis;
mod binned;
mod codebook;
mod direct;

pub use analysis::{
    case_a_bound, case_b_bound_binned, case_b_bound_direct, encoder_failure_probability, exact_hit_probability,
};
pub use binned::{
    check_decoder_limits, decode_binned, encode_binned, search_bins, BinnedDecode, BinnedSchemeConfig, DecodeStatus,
    DecoderLimits,
};
pub use codebook::{codeword_count, CodebookSpec, Rounding, MAX_CODEWORDS};
pub use direct::{decode_direct, encode_direct, DirectDecode, DirectSchemeConfig};

use crate::probkit::{self, CondPmf, JointPmf, JointPmf3, Pmf, ProbError};
use crate::source::ActionDraw;
use crate::typicality::{self, cell_tolerance, counts_within};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error("codebook with log-size {log_size} nats has no codewords")]
    EmptyCodebook { log_size: f64 },
    #[error("codebook needs {count:e} codewords, above the limit of 2^48")]
    CodebookTooLarge { count: f64 },
    #[error("codeword index ({w}, {v}) out of range ({bins} bins x {per_bin})")]
    IndexOutOfRange { w: u64, v: u64, bins: u64, per_bin: u64 },
    #[error("binned decoder search exceeds its limits: {0}")]
    DecoderBudget(String),
    #[error("scheme configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, CodingError>;

/// The Markov triple `p0(x) p(x̂|x) q(y|x̂)` a code is designed for, with the
/// marginals the encoders and decoders test against.
#[derive(Debug, Clone)]
pub struct MarkovLaw {
    p0: Pmf,
    obs: CondPmf,
    channel: CondPmf,
    triple: JointPmf3,
    p_x_xhat: JointPmf,
    p_xhat_y: JointPmf,
    p_x_y: JointPmf,
    p_y: Pmf,
}

impl MarkovLaw {
    pub fn new(p0: Pmf, obs: CondPmf, channel: CondPmf) -> Result<Self> {
        let triple = probkit::compose_markov(&p0, &obs, &channel)?;
        Ok(Self {
            p_x_xhat: triple.p_x_xhat(),
            p_xhat_y: triple.p_xhat_y(),
            p_x_y: triple.p_x_y(),
            p_y: triple.p_y(),
            p0,
            obs,
            channel,
            triple,
        })
    }

    pub fn p0(&self) -> &Pmf {
        &self.p0
    }

    pub fn obs(&self) -> &CondPmf {
        &self.obs
    }

    pub fn channel(&self) -> &CondPmf {
        &self.channel
    }

    pub fn triple(&self) -> &JointPmf3 {
        &self.triple
    }

    pub fn p_x_xhat(&self) -> &JointPmf {
        &self.p_x_xhat
    }

    pub fn p_xhat_y(&self) -> &JointPmf {
        &self.p_xhat_y
    }

    pub fn p_x_y(&self) -> &JointPmf {
        &self.p_x_y
    }

    pub fn p_y(&self) -> &Pmf {
        &self.p_y
    }

    pub fn x_size(&self) -> usize {
        self.p0.len()
    }

    pub fn y_size(&self) -> usize {
        self.channel.outputs()
    }

    /// The induced target `q(y|x) = Σ_x̂ p(x̂|x) q(y|x̂)`.
    pub fn induced_target(&self) -> CondPmf {
        self.obs.then(&self.channel).expect("shapes checked at construction")
    }
}

/// Outcome of one agent's codebook scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeResult {
    /// Bin index sent to the decoder (0 when the encoder failed).
    pub w: u64,
    /// Position inside the bin; kept encoder-side.
    pub v: u64,
    pub found: bool,
    /// Codewords examined.
    pub search_cost: u64,
    /// The scan stopped on its budget rather than exhausting the codebook.
    pub budget_hit: bool,
}

/// Scans `(w, v)` in row-major order and returns the first codeword jointly
/// `ε`-typical with `xhat` under `p_xhat_y`.
pub fn scan_codebook(
    xhat: &[usize],
    spec: &CodebookSpec,
    p_xhat_y: &JointPmf,
    epsilon: f64,
    budget: Option<u64>,
) -> EncodeResult {
    let (rows, cols) = p_xhat_y.shape();
    let n = xhat.len();
    let tol = cell_tolerance(epsilon, rows, cols);
    // Largest count each cell may reach and still be typical.
    let ceiling: Vec<u64> = p_xhat_y
        .data()
        .iter()
        .map(|&p| {
            (0..=n as u64)
                .rev()
                .find(|&c| (c as f64 / n as f64 - p).abs() < tol)
                .unwrap_or(0)
        })
        .collect();
    let total = spec.total();
    let limit = budget.map_or(total, |b| b.min(total));
    let mut counts = vec![0u64; rows * cols];
    for k in 0..limit {
        let (w, v) = (k / spec.per_bin(), k % spec.per_bin());
        let stream = spec.stream(w, v);
        counts.iter_mut().for_each(|c| *c = 0);
        let mut pruned = false;
        for (i, &a) in xhat.iter().enumerate() {
            let cell = a * cols + spec.symbol(stream, i);
            counts[cell] += 1;
            if counts[cell] > ceiling[cell] {
                pruned = true;
                break;
            }
        }
        if !pruned && counts_within(&counts, n as u64, p_xhat_y.data(), tol) {
            return EncodeResult {
                w,
                v,
                found: true,
                search_cost: k + 1,
                budget_hit: false,
            };
        }
    }
    EncodeResult {
        w: 0,
        v: 0,
        found: false,
        search_cost: limit,
        budget_hit: limit < total,
    }
}

/// Disjoint error taxonomy of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCase {
    None,
    /// Some `(x, x̂_l)` is not `ε'`-typical.
    A,
    /// Encoder failure (all agents for the direct scheme, any agent for the
    /// binned scheme).
    B,
    /// Binned decoder found no consistent tuple.
    Ca,
    /// Binned decoder found more than one consistent tuple.
    Cb,
    /// Final check `(x, y) ∈ A*_ε(p_XY)` failed.
    D,
}

impl ErrorCase {
    pub const ALL: [ErrorCase; 6] = [
        ErrorCase::None,
        ErrorCase::A,
        ErrorCase::B,
        ErrorCase::Ca,
        ErrorCase::Cb,
        ErrorCase::D,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCase::None => "none",
            ErrorCase::A => "A",
            ErrorCase::B => "B",
            ErrorCase::Ca => "Ca",
            ErrorCase::Cb => "Cb",
            ErrorCase::D => "D",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ErrorCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The facts about a trial that decide its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialInternals {
    pub source_atypical: bool,
    pub encoder_failure: bool,
    /// `None` for the direct scheme.
    pub decode: Option<DecodeStatus>,
    pub final_typical: bool,
}

/// Assigns the first matching case in the order A, B, C, D.
pub fn classify_error(t: &TrialInternals) -> ErrorCase {
    if t.source_atypical {
        return ErrorCase::A;
    }
    if t.encoder_failure {
        return ErrorCase::B;
    }
    match t.decode {
        Some(DecodeStatus::NoTuple) => return ErrorCase::Ca,
        Some(DecodeStatus::Ambiguous { .. }) => return ErrorCase::Cb,
        _ => {}
    }
    if t.final_typical {
        ErrorCase::None
    } else {
        ErrorCase::D
    }
}

/// Whether some agent's observation is atypical with the source at slack
/// `ε' = ε / (2|X|)`.
pub fn source_atypical(draw: &ActionDraw, law: &MarkovLaw, epsilon: f64) -> bool {
    let eps_p = typicality::eps_prime(epsilon, law.x_size());
    let pxx = law.p_x_xhat();
    let tol = cell_tolerance(eps_p, pxx.rows(), pxx.cols());
    draw.xhat.iter().any(|xh| {
        let t = probkit::joint_type(&draw.x, xh, pxx.rows(), pxx.cols()).expect("draws live in the source alphabet");
        !counts_within(t.counts(), t.n(), pxx.data(), tol)
    })
}

/// Result of a full trial of either scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub y: Vec<usize>,
    pub error_case: ErrorCase,
    pub tv_realized: f64,
    pub budget_hit: bool,
    pub search_cost: u64,
    pub encodings: Vec<EncodeResult>,
}

/// Either coding scheme with its configuration.
#[derive(Debug, Clone)]
pub enum Scheme {
    Direct(DirectSchemeConfig),
    Binned(BinnedSchemeConfig),
}

impl Scheme {
    pub fn law(&self) -> &MarkovLaw {
        match self {
            Scheme::Direct(c) => &c.law,
            Scheme::Binned(c) => &c.law,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Scheme::Direct(c) => c.epsilon,
            Scheme::Binned(c) => c.epsilon,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scheme::Direct(_) => "direct",
            Scheme::Binned(_) => "binned",
        }
    }

    pub fn set_budget(&mut self, budget: Option<u64>) {
        match self {
            Scheme::Direct(c) => c.budget = budget,
            Scheme::Binned(c) => c.budget = budget,
        }
    }

    /// Builds the `agents` codebooks for blocklength `n` under `seed`.
    pub fn codebooks(&self, n: usize, agents: usize, seed: u64) -> Result<Vec<CodebookSpec>> {
        match self {
            Scheme::Direct(c) => c.codebooks(n, agents, seed),
            Scheme::Binned(c) => c.codebooks(n, agents, seed),
        }
    }

    /// Runs encoders and decoder on one draw and scores the decoded action
    /// against `target` (a joint law over `X x Y`).
    pub fn run_trial(&self, draw: &ActionDraw, books: &[CodebookSpec], target: &JointPmf) -> Result<TrialOutcome> {
        let law = self.law();
        let epsilon = self.epsilon();
        let atypical = source_atypical(draw, law, epsilon);
        let (y, encodings, encoder_failure, decode) = match self {
            Scheme::Direct(cfg) => {
                let enc: Vec<EncodeResult> = draw
                    .xhat
                    .iter()
                    .zip(books)
                    .map(|(xh, book)| encode_direct(xh, cfg, book))
                    .collect();
                let dec = decode_direct(&enc, books);
                (dec.y, enc.clone(), enc.iter().all(|e| !e.found), None)
            }
            Scheme::Binned(cfg) => {
                let enc: Vec<EncodeResult> = draw
                    .xhat
                    .iter()
                    .zip(books)
                    .map(|(xh, book)| encode_binned(xh, cfg, book))
                    .collect();
                let bins: Vec<u64> = enc.iter().map(|e| e.w).collect();
                let dec = decode_binned(&bins, books, law, epsilon, &cfg.limits)?;
                (dec.y, enc.clone(), enc.iter().any(|e| !e.found), Some(dec.status))
            }
        };
        let (xs, ys) = (law.x_size(), law.y_size());
        let t = probkit::joint_type(&draw.x, &y, xs, ys)?;
        let final_typical = counts_within(t.counts(), t.n(), law.p_x_y().data(), cell_tolerance(epsilon, xs, ys));
        let error_case = classify_error(&TrialInternals {
            source_atypical: atypical,
            encoder_failure,
            decode,
            final_typical,
        });
        let tv_realized = probkit::type_tv(&t, target)?;
        Ok(TrialOutcome {
            y,
            error_case,
            tv_realized,
            budget_hit: encodings.iter().any(|e| e.budget_hit),
            search_cost: encodings.iter().map(|e| e.search_cost).sum(),
            encodings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn internals(a: bool, b: bool, d: Option<DecodeStatus>, fin: bool) -> TrialInternals {
        TrialInternals {
            source_atypical: a,
            encoder_failure: b,
            decode: d,
            final_typical: fin,
        }
    }

    #[test]
    fn classification_precedence() {
        let amb = Some(DecodeStatus::Ambiguous { count: 2 });
        assert_eq!(classify_error(&internals(true, true, amb.clone(), false)), ErrorCase::A);
        assert_eq!(
            classify_error(&internals(false, true, amb.clone(), false)),
            ErrorCase::B
        );
        assert_eq!(classify_error(&internals(false, false, amb, true)), ErrorCase::Cb);
        assert_eq!(
            classify_error(&internals(false, false, Some(DecodeStatus::NoTuple), true)),
            ErrorCase::Ca
        );
        let uniq = Some(DecodeStatus::Unique { tuple: vec![0] });
        assert_eq!(
            classify_error(&internals(false, false, uniq.clone(), false)),
            ErrorCase::D
        );
        assert_eq!(classify_error(&internals(false, false, uniq, true)), ErrorCase::None);
        assert_eq!(classify_error(&internals(false, false, None, true)), ErrorCase::None);
    }

    #[test]
    fn law_marginals() {
        let bsc = CondPmf::binary_symmetric(0.1).unwrap();
        let law = MarkovLaw::new(Pmf::uniform(2).unwrap(), bsc.clone(), bsc).unwrap();
        assert!((law.p_x_y().get(0, 1) - 0.09).abs() < 1e-15);
        assert!((law.induced_target().get(1, 0) - 0.18).abs() < 1e-15);
        assert_eq!(law.p_y().probs(), &[0.5, 0.5]);
    }
}
