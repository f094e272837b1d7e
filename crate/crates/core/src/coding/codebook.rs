use super::{CodingError, Result};
use crate::probkit::Pmf;
use crate::rng::{Sampler, StreamKey, DOMAIN_CODEBOOK};

/// Upper limit on the number of addressable codewords in one codebook.
pub const MAX_CODEWORDS: u64 = 1 << 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Floor,
    Ceil,
}

/// `⌊e^x⌋` or `⌈e^x⌉` as an integer count, capped at [`MAX_CODEWORDS`].
///
/// Values within a relative `1e-12` of an integer are snapped to it, so
/// `x = n ln 2` yields exactly `2^n`.
pub fn codeword_count(log_size: f64, rounding: Rounding) -> Result<u64> {
    if log_size.is_nan() {
        return Err(CodingError::EmptyCodebook { log_size });
    }
    if log_size > (MAX_CODEWORDS as f64).ln() + 1e-9 {
        return Err(CodingError::CodebookTooLarge { count: log_size.exp() });
    }
    let raw = log_size.exp();
    let nearest = raw.round();
    let value = if (raw - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        match rounding {
            Rounding::Floor => raw.floor(),
            Rounding::Ceil => raw.ceil(),
        }
    };
    if value > MAX_CODEWORDS as f64 {
        return Err(CodingError::CodebookTooLarge { count: value });
    }
    Ok(value as u64)
}

/// A lazily generated random codebook: `bins x per_bin` codewords of length
/// `n`, every symbol i.i.d. from `p_y`.
///
/// Symbol `i` of codeword `(w, v)` is drawn from the stream keyed by
/// `(seed, CODEBOOK, agent, w, v)`; nothing is materialized.
#[derive(Debug, Clone)]
pub struct CodebookSpec {
    n: usize,
    bins: u64,
    per_bin: u64,
    log_size: f64,
    p_y: Pmf,
    sampler: Sampler,
    seed: u64,
    agent: usize,
    key: StreamKey,
}

impl CodebookSpec {
    /// `⌊e^{n(R + ε)}⌋` codewords, one per bin.
    pub fn direct(n: usize, rate: f64, slack: f64, p_y: Pmf, seed: u64, agent: usize) -> Result<Self> {
        let log_size = n as f64 * (rate + slack);
        let bins = codeword_count(log_size, Rounding::Floor)?;
        Self::build(n, bins, 1, log_size, p_y, seed, agent)
    }

    /// `⌊e^{n(R + ε)}⌋` bins of `⌈e^{n(R' - ε_0)}⌉` codewords each.
    #[allow(clippy::too_many_arguments)]
    pub fn binned(
        n: usize,
        rate: f64,
        slack: f64,
        bin_rate: f64,
        bin_slack: f64,
        p_y: Pmf,
        seed: u64,
        agent: usize,
    ) -> Result<Self> {
        let log_bins = n as f64 * (rate + slack);
        let log_per_bin = n as f64 * (bin_rate - bin_slack);
        let bins = codeword_count(log_bins, Rounding::Floor)?;
        let per_bin = codeword_count(log_per_bin, Rounding::Ceil)?.max(1);
        Self::build(n, bins, per_bin, log_bins + log_per_bin, p_y, seed, agent)
    }

    /// A codebook with explicit dimensions.
    pub fn with_counts(n: usize, bins: u64, per_bin: u64, p_y: Pmf, seed: u64, agent: usize) -> Result<Self> {
        let log_size = (bins as f64).ln() + (per_bin as f64).ln();
        Self::build(n, bins, per_bin, log_size, p_y, seed, agent)
    }

    fn build(n: usize, bins: u64, per_bin: u64, log_size: f64, p_y: Pmf, seed: u64, agent: usize) -> Result<Self> {
        if bins == 0 || per_bin == 0 {
            return Err(CodingError::EmptyCodebook { log_size });
        }
        if bins.checked_mul(per_bin).is_none_or(|t| t > MAX_CODEWORDS) {
            return Err(CodingError::CodebookTooLarge {
                count: bins as f64 * per_bin as f64,
            });
        }
        if n == 0 {
            return Err(CodingError::Config("blocklength must be positive".into()));
        }
        let key = StreamKey::new(seed).derive(DOMAIN_CODEBOOK).derive(agent as u64);
        Ok(Self {
            n,
            bins,
            per_bin,
            log_size,
            sampler: Sampler::new(&p_y),
            p_y,
            seed,
            agent,
            key,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bins(&self) -> u64 {
        self.bins
    }

    pub fn per_bin(&self) -> u64 {
        self.per_bin
    }

    pub fn total(&self) -> u64 {
        self.bins * self.per_bin
    }

    pub fn log_size(&self) -> f64 {
        self.log_size
    }

    pub fn p_y(&self) -> &Pmf {
        &self.p_y
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    #[inline]
    pub(crate) fn stream(&self, w: u64, v: u64) -> StreamKey {
        self.key.derive(w).derive(v)
    }

    #[inline]
    pub(crate) fn symbol(&self, stream: StreamKey, position: usize) -> usize {
        self.sampler.sample(stream.uniform(position as u64))
    }

    /// Codeword `(w, v)`, zero-based. Direct codebooks use `v = 0`.
    pub fn codeword(&self, w: u64, v: u64) -> Result<Vec<usize>> {
        if w >= self.bins || v >= self.per_bin {
            return Err(CodingError::IndexOutOfRange {
                w,
                v,
                bins: self.bins,
                per_bin: self.per_bin,
            });
        }
        let stream = self.stream(w, v);
        Ok((0..self.n).map(|i| self.symbol(stream, i)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{self, JointPmf};

    #[test]
    fn counts_round_and_snap() {
        assert_eq!(codeword_count(0.0, Rounding::Floor).unwrap(), 1);
        assert_eq!(codeword_count(-0.5, Rounding::Floor).unwrap(), 0);
        assert_eq!(codeword_count(-0.5, Rounding::Ceil).unwrap(), 1);
        assert_eq!(codeword_count(2.5f64.ln(), Rounding::Floor).unwrap(), 2);
        assert_eq!(codeword_count(2.5f64.ln(), Rounding::Ceil).unwrap(), 3);
        for n in 1..40 {
            let x = n as f64 * std::f64::consts::LN_2;
            assert_eq!(codeword_count(x, Rounding::Floor).unwrap(), 1u64 << n);
        }
        assert!(matches!(
            codeword_count(40.0, Rounding::Floor),
            Err(CodingError::CodebookTooLarge { .. })
        ));
    }

    #[test]
    fn deterministic_codewords() {
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let a = CodebookSpec::direct(20, 0.2, 0.0, p.clone(), 9, 1).unwrap();
        let b = CodebookSpec::direct(20, 0.2, 0.0, p.clone(), 9, 1).unwrap();
        assert_eq!(a.codeword(3, 0).unwrap(), b.codeword(3, 0).unwrap());
        let other_agent = CodebookSpec::direct(20, 0.2, 0.0, p, 9, 2).unwrap();
        assert_ne!(a.codeword(3, 0).unwrap(), other_agent.codeword(3, 0).unwrap());
    }

    #[test]
    fn point_mass_codewords_are_constant() {
        let book = CodebookSpec::direct(30, 0.1, 0.0, Pmf::point_mass(2, 1).unwrap(), 1, 0).unwrap();
        for w in 0..book.bins() {
            assert!(book.codeword(w, 0).unwrap().iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let book = CodebookSpec::binned(6, 0.1, 0.0, 0.1, 0.0, Pmf::uniform(2).unwrap(), 0, 0).unwrap();
        assert_eq!(book.bins(), 1);
        assert_eq!(book.per_bin(), 2);
        assert!(book.codeword(0, 1).is_ok());
        assert!(matches!(book.codeword(1, 0), Err(CodingError::IndexOutOfRange { .. })));
        assert!(matches!(book.codeword(0, 2), Err(CodingError::IndexOutOfRange { .. })));
    }

    #[test]
    fn empty_and_huge_books_rejected() {
        let p = Pmf::uniform(2).unwrap();
        assert!(matches!(
            CodebookSpec::direct(10, -0.5, 0.0, p.clone(), 0, 0),
            Err(CodingError::EmptyCodebook { .. })
        ));
        assert!(matches!(
            CodebookSpec::direct(100, 0.5, 0.0, p, 0, 0),
            Err(CodingError::CodebookTooLarge { .. })
        ));
    }

    #[test]
    fn symbol_frequencies_follow_p_y() {
        let p = Pmf::new(vec![0.15, 0.6, 0.25]).unwrap();
        let book = CodebookSpec::direct(1000, 0.01, 0.0, p.clone(), 4, 0).unwrap();
        assert!(book.bins() >= 100);
        let symbols: Vec<usize> = (0..100).flat_map(|w| book.codeword(w, 0).unwrap()).collect();
        let t = probkit::single_type(&symbols, 3).unwrap().to_pmf();
        let tv = probkit::tv_distance(&t, &JointPmf::new(3, 1, p.probs().to_vec()).unwrap()).unwrap();
        assert!(tv < 0.01, "tv = {tv}");
    }
}
