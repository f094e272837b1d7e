use super::{scan_codebook, CodebookSpec, CodingError, EncodeResult, MarkovLaw, Result};

/// Each agent owns a codebook of `⌊e^{n(R_l + ε_l)}⌋` codewords and sends the
/// index of the first one jointly typical with its observation.
#[derive(Debug, Clone)]
pub struct DirectSchemeConfig {
    pub law: MarkovLaw,
    /// Per-agent rates in nats; a single entry is shared by all agents.
    pub rates: Vec<f64>,
    /// Per-agent codebook slack; a single entry is shared by all agents.
    pub slacks: Vec<f64>,
    pub epsilon: f64,
    /// Maximum codewords examined per encoder.
    pub budget: Option<u64>,
}

impl DirectSchemeConfig {
    pub fn new(law: MarkovLaw, rates: Vec<f64>, slacks: Vec<f64>, epsilon: f64) -> Result<Self> {
        if rates.is_empty() || slacks.is_empty() {
            return Err(CodingError::Config("rates and slacks must be non-empty".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CodingError::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            law,
            rates,
            slacks,
            epsilon,
            budget: None,
        })
    }

    fn per_agent(values: &[f64], agent: usize, agents: usize, what: &str) -> Result<f64> {
        match values.len() {
            1 => Ok(values[0]),
            len if len == agents => Ok(values[agent]),
            len => Err(CodingError::Config(format!("{len} {what} given for {agents} agents"))),
        }
    }

    pub fn rate(&self, agent: usize, agents: usize) -> Result<f64> {
        Self::per_agent(&self.rates, agent, agents, "rates")
    }

    pub fn codebooks(&self, n: usize, agents: usize, seed: u64) -> Result<Vec<CodebookSpec>> {
        (0..agents)
            .map(|l| {
                let rate = Self::per_agent(&self.rates, l, agents, "rates")?;
                let slack = Self::per_agent(&self.slacks, l, agents, "slacks")?;
                CodebookSpec::direct(n, rate, slack, self.law.p_y().clone(), seed, l)
            })
            .collect()
    }
}

pub fn encode_direct(xhat: &[usize], cfg: &DirectSchemeConfig, book: &CodebookSpec) -> EncodeResult {
    scan_codebook(xhat, book, cfg.law.p_xhat_y(), cfg.epsilon, cfg.budget)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectDecode {
    pub y: Vec<usize>,
    /// Agent whose codeword was replayed; `None` when all encoders failed.
    pub chosen: Option<usize>,
}

/// Replays the codeword of the lowest-indexed agent whose encoder succeeded,
/// falling back to codeword 0 of agent 0.
pub fn decode_direct(encodings: &[EncodeResult], books: &[CodebookSpec]) -> DirectDecode {
    let chosen = encodings.iter().position(|e| e.found);
    let (agent, w) = chosen.map_or((0, 0), |l| (l, encodings[l].w));
    DirectDecode {
        y: books[agent]
            .codeword(w, 0)
            .expect("encoders only return indices inside their codebook"),
        chosen,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{CondPmf, Pmf};
    use crate::typicality;

    fn law(obs_flip: f64, chan_flip: f64) -> MarkovLaw {
        MarkovLaw::new(
            Pmf::uniform(2).unwrap(),
            CondPmf::binary_symmetric(obs_flip).unwrap(),
            CondPmf::binary_symmetric(chan_flip).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn found_codeword_is_typical_and_first() {
        let cfg = DirectSchemeConfig::new(law(0.1, 0.2), vec![0.25], vec![0.05], 0.3).unwrap();
        let books = cfg.codebooks(40, 1, 3).unwrap();
        let xhat: Vec<usize> = (0..40).map(|i| (i * 7 / 3) % 2).collect();
        let e = encode_direct(&xhat, &cfg, &books[0]);
        assert!(e.found);
        assert_eq!(e.search_cost, e.w + 1);
        let y = books[0].codeword(e.w, 0).unwrap();
        assert!(typicality::is_strongly_typical(&xhat, &y, cfg.law.p_xhat_y(), 0.3).unwrap());
        for w in 0..e.w {
            let y = books[0].codeword(w, 0).unwrap();
            assert!(!typicality::is_strongly_typical(&xhat, &y, cfg.law.p_xhat_y(), 0.3).unwrap());
        }
    }

    #[test]
    fn budget_stops_the_scan() {
        // A codeword matching a 0.05-typical target almost never appears.
        let cfg = DirectSchemeConfig {
            budget: Some(5),
            ..DirectSchemeConfig::new(law(0.0, 0.0), vec![0.3], vec![0.0], 0.01).unwrap()
        };
        let books = cfg.codebooks(60, 1, 0).unwrap();
        let xhat = vec![0usize; 60];
        let e = encode_direct(&xhat, &cfg, &books[0]);
        assert!(!e.found);
        assert!(e.budget_hit);
        assert_eq!(e.search_cost, 5);
        assert_eq!((e.w, e.v), (0, 0));
    }

    #[test]
    fn decoder_prefers_lowest_agent() {
        let cfg = DirectSchemeConfig::new(law(0.1, 0.1), vec![0.2], vec![0.0], 0.3).unwrap();
        let books = cfg.codebooks(30, 3, 8).unwrap();
        let fail = EncodeResult {
            w: 0,
            v: 0,
            found: false,
            search_cost: 1,
            budget_hit: false,
        };
        let hit = |w| EncodeResult {
            w,
            v: 0,
            found: true,
            search_cost: w + 1,
            budget_hit: false,
        };
        let d = decode_direct(&[fail, hit(4), hit(2)], &books);
        assert_eq!(d.chosen, Some(1));
        assert_eq!(d.y, books[1].codeword(4, 0).unwrap());
        let d = decode_direct(&[fail, fail, fail], &books);
        assert_eq!(d.chosen, None);
        assert_eq!(d.y, books[0].codeword(0, 0).unwrap());
    }

    #[test]
    fn mismatched_rate_vectors_are_rejected() {
        let cfg = DirectSchemeConfig::new(law(0.1, 0.1), vec![0.2, 0.3], vec![0.0], 0.3).unwrap();
        assert!(matches!(cfg.codebooks(10, 3, 0), Err(CodingError::Config(_))));
        assert_eq!(cfg.codebooks(10, 2, 0).unwrap().len(), 2);
    }
}
