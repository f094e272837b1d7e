use super::{scan_codebook, CodebookSpec, CodingError, EncodeResult, MarkovLaw, Result};
use crate::typicality::{cell_tolerance, counts_within};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Hard limits on the exhaustive binned decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderLimits {
    pub max_n: usize,
    pub max_agents: usize,
    pub max_x_size: usize,
    /// Cap on `|X|^n * prod_l |bin_l|`.
    pub max_work: u64,
}

impl Default for DecoderLimits {
    fn default() -> Self {
        Self {
            max_n: 12,
            max_agents: 4,
            max_x_size: 2,
            max_work: 1 << 32,
        }
    }
}

/// Symmetric binned scheme: every agent has `⌊e^{n(R + ε_ag)}⌋` bins of
/// `⌈e^{n(R' - ε_0)}⌉` codewords and reveals only the bin index.
#[derive(Debug, Clone)]
pub struct BinnedSchemeConfig {
    pub law: MarkovLaw,
    pub rate: f64,
    pub slack: f64,
    pub bin_rate: f64,
    pub bin_slack: f64,
    pub epsilon: f64,
    pub budget: Option<u64>,
    pub limits: DecoderLimits,
}

impl BinnedSchemeConfig {
    pub fn new(law: MarkovLaw, rate: f64, slack: f64, bin_rate: f64, bin_slack: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CodingError::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            law,
            rate,
            slack,
            bin_rate,
            bin_slack,
            epsilon,
            budget: None,
            limits: DecoderLimits::default(),
        })
    }

    pub fn codebooks(&self, n: usize, agents: usize, seed: u64) -> Result<Vec<CodebookSpec>> {
        (0..agents)
            .map(|l| {
                CodebookSpec::binned(
                    n,
                    self.rate,
                    self.slack,
                    self.bin_rate,
                    self.bin_slack,
                    self.law.p_y().clone(),
                    seed,
                    l,
                )
            })
            .collect()
    }
}

/// Scans the whole codebook row-major; only the bin `w` is transmitted.
pub fn encode_binned(xhat: &[usize], cfg: &BinnedSchemeConfig, book: &CodebookSpec) -> EncodeResult {
    scan_codebook(xhat, book, cfg.law.p_xhat_y(), cfg.epsilon, cfg.budget)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeStatus {
    /// Exactly one in-bin index tuple `(v_1, ..., v_L)` is consistent.
    Unique {
        tuple: Vec<u64>,
    },
    NoTuple,
    Ambiguous {
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedDecode {
    pub status: DecodeStatus,
    pub y: Vec<usize>,
}

/// Rejects binned instances too large for the exhaustive decoder.
pub fn check_decoder_limits(books: &[CodebookSpec], x_size: usize, limits: &DecoderLimits) -> Result<()> {
    let n = books[0].n();
    if n > limits.max_n {
        return Err(CodingError::DecoderBudget(format!("n = {n} > {}", limits.max_n)));
    }
    if books.len() > limits.max_agents {
        return Err(CodingError::DecoderBudget(format!(
            "L = {} > {}",
            books.len(),
            limits.max_agents
        )));
    }
    if x_size > limits.max_x_size {
        return Err(CodingError::DecoderBudget(format!(
            "|X| = {x_size} > {}",
            limits.max_x_size
        )));
    }
    match search_size(books, x_size) {
        Some(w) if w <= limits.max_work => Ok(()),
        _ => Err(CodingError::DecoderBudget(format!(
            "search space exceeds {} candidates",
            limits.max_work
        ))),
    }
}

/// `|X|^n * prod_l |bin_l|`, or `None` on overflow.
fn search_size(books: &[CodebookSpec], x_size: usize) -> Option<u64> {
    let start = (x_size as u64).checked_pow(books[0].n() as u32)?;
    books.iter().try_fold(start, |acc, b| acc.checked_mul(b.per_bin()))
}

/// Exhaustive joint decoder: finds every in-bin tuple `(v_1..v_L)` for which
/// some `x` makes the stacked type of `(x, Y_l(w_l, v_l))_l` `ε`-typical
/// under `p_XY`.
///
/// On a unique tuple the output is agent 0's codeword `(w_1, v_1)`;
/// otherwise it is agent 0's codeword `(w_1, 0)`.
pub fn decode_binned(
    bins: &[u64],
    books: &[CodebookSpec],
    law: &MarkovLaw,
    epsilon: f64,
    limits: &DecoderLimits,
) -> Result<BinnedDecode> {
    if books.is_empty() || bins.len() != books.len() {
        return Err(CodingError::Config(format!(
            "{} bin indices for {} codebooks",
            bins.len(),
            books.len()
        )));
    }
    check_decoder_limits(books, law.x_size(), limits)?;
    let codewords: Vec<Vec<Vec<usize>>> = books
        .iter()
        .zip(bins)
        .map(|(b, &w)| (0..b.per_bin()).map(|v| b.codeword(w, v)).collect())
        .collect::<Result<_>>()?;
    let status = search_bins(&codewords, law, epsilon);
    let v1 = match &status {
        DecodeStatus::Unique { tuple } => tuple[0],
        _ => 0,
    };
    Ok(BinnedDecode {
        y: books[0].codeword(bins[0], v1)?,
        status,
    })
}

/// The joint search of [`decode_binned`] over explicit bin contents:
/// `bins[l][v]` is codeword `v` of agent `l`'s received bin.
///
/// No work limit is applied beyond the caller's choice of inputs.
pub fn search_bins(codewords: &[Vec<Vec<usize>>], law: &MarkovLaw, epsilon: f64) -> DecodeStatus {
    let (xs, ys) = (law.x_size(), law.y_size());
    let n = codewords[0][0].len();
    let agents = codewords.len();
    let p_xy = law.p_x_y();
    let tol = cell_tolerance(epsilon, xs, ys);
    let p_x = law.p0().probs();
    let x_tol = epsilon / xs as f64;
    let total_n = (n * agents) as u64;
    let candidates = (xs as u64).pow(n as u32);

    let hits: Vec<Vec<u64>> = (0..candidates)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut x = vec![0usize; n];
            let mut rest = k;
            for slot in x.iter_mut().rev() {
                *slot = (rest % xs as u64) as usize;
                rest /= xs as u64;
            }
            let mut found = Vec::new();
            // Joint typicality of the stacked pair implies typicality of x.
            let mut marg = vec![0u64; xs];
            x.iter().for_each(|&a| marg[a] += 1);
            if !counts_within(&marg, n as u64, p_x, x_tol) {
                return found.into_iter();
            }
            let per_agent: Vec<Vec<Vec<u64>>> = codewords
                .iter()
                .map(|cws| {
                    cws.iter()
                        .map(|y| {
                            let mut c = vec![0u64; xs * ys];
                            x.iter().zip(y).for_each(|(&a, &b)| c[a * ys + b] += 1);
                            c
                        })
                        .collect()
                })
                .collect();
            let mut tuple = vec![0usize; agents];
            let mut stacked = vec![0u64; xs * ys];
            loop {
                stacked.iter_mut().for_each(|c| *c = 0);
                for (l, &v) in tuple.iter().enumerate() {
                    for (s, c) in stacked.iter_mut().zip(&per_agent[l][v]) {
                        *s += c;
                    }
                }
                if counts_within(&stacked, total_n, p_xy.data(), tol) {
                    found.push(tuple.iter().map(|&v| v as u64).collect());
                }
                let mut l = agents;
                loop {
                    if l == 0 {
                        return found.into_iter();
                    }
                    l -= 1;
                    tuple[l] += 1;
                    if tuple[l] < per_agent[l].len() {
                        break;
                    }
                    tuple[l] = 0;
                }
            }
        })
        .collect();

    let distinct: BTreeSet<Vec<u64>> = hits.into_iter().collect();
    match distinct.len() {
        0 => DecodeStatus::NoTuple,
        1 => DecodeStatus::Unique {
            tuple: distinct.into_iter().next().expect("one element"),
        },
        count => DecodeStatus::Ambiguous { count },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{CondPmf, Pmf};
    use crate::typicality;

    fn law() -> MarkovLaw {
        MarkovLaw::new(
            Pmf::uniform(2).unwrap(),
            CondPmf::binary_symmetric(0.1).unwrap(),
            CondPmf::binary_symmetric(0.1).unwrap(),
        )
        .unwrap()
    }

    /// Brute-force reference: loops over x and tuples with no pruning.
    fn reference(bins: &[u64], books: &[CodebookSpec], law: &MarkovLaw, eps: f64) -> BTreeSet<Vec<u64>> {
        let n = books[0].n();
        let mut out = BTreeSet::new();
        for k in 0..(1u64 << n) {
            let x: Vec<usize> = (0..n).map(|i| ((k >> (n - 1 - i)) & 1) as usize).collect();
            let sizes: Vec<u64> = books.iter().map(|b| b.per_bin()).collect();
            let combos: u64 = sizes.iter().product();
            for mut c in 0..combos {
                let mut tuple = vec![0u64; books.len()];
                for l in (0..books.len()).rev() {
                    tuple[l] = c % sizes[l];
                    c /= sizes[l];
                }
                let xs: Vec<usize> = x.iter().copied().cycle().take(n * books.len()).collect();
                let ys: Vec<usize> = books
                    .iter()
                    .zip(bins)
                    .zip(&tuple)
                    .flat_map(|((b, &w), &v)| b.codeword(w, v).unwrap())
                    .collect();
                if typicality::is_strongly_typical(&xs, &ys, law.p_x_y(), eps).unwrap() {
                    out.insert(tuple);
                }
            }
        }
        out
    }

    #[test]
    fn matches_brute_force() {
        let law = law();
        let cfg = BinnedSchemeConfig::new(law.clone(), 0.1, 0.0, 0.2, 0.0, 0.6).unwrap();
        for seed in 0..6 {
            let books = cfg.codebooks(8, 2, seed).unwrap();
            let bins: Vec<u64> = books.iter().map(|b| seed % b.bins()).collect();
            let dec = decode_binned(&bins, &books, &law, 0.6, &DecoderLimits::default()).unwrap();
            let expect = reference(&bins, &books, &law, 0.6);
            match &dec.status {
                DecodeStatus::NoTuple => assert!(expect.is_empty()),
                DecodeStatus::Unique { tuple } => {
                    assert_eq!(expect.len(), 1);
                    assert!(expect.contains(tuple));
                    assert_eq!(dec.y, books[0].codeword(bins[0], tuple[0]).unwrap());
                }
                DecodeStatus::Ambiguous { count } => assert_eq!(*count, expect.len()),
            }
        }
    }

    #[test]
    fn limits_are_enforced() {
        let law = law();
        let cfg = BinnedSchemeConfig::new(law.clone(), 0.1, 0.0, 0.1, 0.0, 0.5).unwrap();
        let books = cfg.codebooks(13, 1, 0).unwrap();
        let r = decode_binned(&[0], &books, &law, 0.5, &DecoderLimits::default());
        assert!(matches!(r, Err(CodingError::DecoderBudget(_))));
        let tight = DecoderLimits {
            max_work: 10,
            ..DecoderLimits::default()
        };
        let books = cfg.codebooks(8, 1, 0).unwrap();
        let r = decode_binned(&[0], &books, &law, 0.5, &tight);
        assert!(matches!(r, Err(CodingError::DecoderBudget(_))));
    }

    #[test]
    fn single_codeword_bins_are_unique_or_empty() {
        let law = law();
        let cfg = BinnedSchemeConfig::new(law.clone(), 0.2, 0.0, 0.0, 0.0, 0.6).unwrap();
        let books = cfg.codebooks(10, 1, 4).unwrap();
        assert_eq!(books[0].per_bin(), 1);
        let dec = decode_binned(&[0], &books, &law, 0.6, &DecoderLimits::default()).unwrap();
        assert!(matches!(
            dec.status,
            DecodeStatus::Unique { .. } | DecodeStatus::NoTuple
        ));
    }
}
