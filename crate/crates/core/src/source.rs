//! Nature's actions: the i.i.d. source `X^n` and `L` conditionally
//! independent noisy observations `X̂_l^n`.

use crate::probkit::{CondPmf, Pmf, ProbError};
use crate::rng::{Sampler, StreamKey, DOMAIN_SOURCE};

#[derive(Debug, Clone)]
pub struct SourceConfig {
    p0: Pmf,
    obs_channel: CondPmf,
    agents: usize,
    n: usize,
}

impl SourceConfig {
    /// The observation channel maps the source alphabet onto itself.
    pub fn new(p0: Pmf, obs_channel: CondPmf, agents: usize, n: usize) -> Result<Self, ProbError> {
        if obs_channel.inputs() != p0.len() || obs_channel.outputs() != p0.len() {
            return Err(ProbError::Shape(format!(
                "observation channel must be {0}x{0}, got {1}x{2}",
                p0.len(),
                obs_channel.inputs(),
                obs_channel.outputs()
            )));
        }
        if agents == 0 {
            return Err(ProbError::Shape("at least one agent is required".into()));
        }
        if n == 0 {
            return Err(ProbError::EmptySequence);
        }
        Ok(Self {
            p0,
            obs_channel,
            agents,
            n,
        })
    }

    pub fn p0(&self) -> &Pmf {
        &self.p0
    }

    pub fn obs_channel(&self) -> &CondPmf {
        &self.obs_channel
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_size(&self) -> usize {
        self.p0.len()
    }

    pub fn with_n(&self, n: usize) -> Result<Self, ProbError> {
        Self::new(self.p0.clone(), self.obs_channel.clone(), self.agents, n)
    }

    pub fn with_agents(&self, agents: usize) -> Result<Self, ProbError> {
        Self::new(self.p0.clone(), self.obs_channel.clone(), agents, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDraw {
    pub x: Vec<usize>,
    pub xhat: Vec<Vec<usize>>,
}

/// Draws one trial. Symbol `i` of `x` uses stream 0 and symbol `i` of
/// agent `l`'s observation uses stream `l + 1`, both under the key
/// `(seed, SOURCE, trial_index)`.
pub fn draw_actions(cfg: &SourceConfig, seed: u64, trial_index: u64) -> ActionDraw {
    let key = StreamKey::new(seed).derive(DOMAIN_SOURCE).derive(trial_index);
    let x_stream = key.derive(0);
    let source = Sampler::new(&cfg.p0);
    let x: Vec<usize> = (0..cfg.n as u64).map(|i| source.sample(x_stream.uniform(i))).collect();

    let rows: Vec<Sampler> = (0..cfg.x_size())
        .map(|a| Sampler::new(&cfg.obs_channel.row_pmf(a)))
        .collect();
    let xhat = (0..cfg.agents as u64)
        .map(|l| {
            let stream = key.derive(l + 1);
            x.iter()
                .enumerate()
                .map(|(i, &xi)| rows[xi].sample(stream.uniform(i as u64)))
                .collect()
        })
        .collect();
    ActionDraw { x, xhat }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{self, JointPmf};

    fn cfg(p0: Pmf, obs: CondPmf, agents: usize, n: usize) -> SourceConfig {
        SourceConfig::new(p0, obs, agents, n).unwrap()
    }

    #[test]
    fn identity_observation_copies_source() {
        let c = cfg(
            Pmf::new(vec![0.2, 0.5, 0.3]).unwrap(),
            CondPmf::identity(3).unwrap(),
            3,
            500,
        );
        let d = draw_actions(&c, 11, 4);
        for xh in &d.xhat {
            assert_eq!(xh, &d.x);
        }
    }

    #[test]
    fn point_mass_source_is_constant() {
        let c = cfg(
            Pmf::point_mass(3, 2).unwrap(),
            CondPmf::from_rows(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]).unwrap(),
            1,
            100,
        );
        assert!(draw_actions(&c, 1, 0).x.iter().all(|&s| s == 2));
    }

    #[test]
    fn replay_is_bit_exact() {
        let c = cfg(
            Pmf::new(vec![0.3, 0.7]).unwrap(),
            CondPmf::binary_symmetric(0.2).unwrap(),
            4,
            64,
        );
        assert_eq!(draw_actions(&c, 99, 17), draw_actions(&c, 99, 17));
        assert_ne!(draw_actions(&c, 99, 17), draw_actions(&c, 99, 18));
    }

    #[test]
    fn source_type_converges() {
        let p0 = Pmf::new(vec![0.1, 0.6, 0.3]).unwrap();
        let c = cfg(p0.clone(), CondPmf::identity(3).unwrap(), 1, 100_000);
        let d = draw_actions(&c, 5, 0);
        let t = probkit::single_type(&d.x, 3).unwrap().to_pmf();
        let tv = probkit::tv_distance(&t, &JointPmf::new(3, 1, p0.probs().to_vec()).unwrap()).unwrap();
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn rejects_bad_shapes() {
        let p0 = Pmf::uniform(2).unwrap();
        assert!(SourceConfig::new(p0.clone(), CondPmf::identity(3).unwrap(), 1, 1).is_err());
        assert!(SourceConfig::new(p0.clone(), CondPmf::identity(2).unwrap(), 0, 1).is_err());
        assert!(SourceConfig::new(p0, CondPmf::identity(2).unwrap(), 1, 0).is_err());
    }
}
