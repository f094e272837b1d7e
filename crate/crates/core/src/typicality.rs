//! Strong typicality: membership tests and the `ε_m` / `δ_t` quantities
//! that drive the cardinality and probability bounds of typical sets.

use crate::probkit::{self, JointPmf, Pmf, ProbError, LOG_ZERO};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypError {
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, TypError>;

/// Typicality slack together with the alphabet sizes it is used with.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityParams {
    epsilon: f64,
    sizes: Vec<usize>,
}

impl TypicalityParams {
    pub fn new(epsilon: f64, sizes: Vec<usize>) -> Result<Self> {
        check_epsilon(epsilon)?;
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(ProbError::EmptyAlphabet.into());
        }
        Ok(Self { epsilon, sizes })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `ε / (2|X|)`, the slack used for the source/observation pair.
    pub fn eps_prime(&self) -> f64 {
        eps_prime(self.epsilon, self.sizes[0])
    }
}

pub fn eps_prime(epsilon: f64, x_size: usize) -> f64 {
    epsilon / (2.0 * x_size as f64)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(TypError::BadEpsilon(epsilon))
    }
}

/// The pair `(ε_m, δ_t)` at one blocklength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypBound {
    pub eps_m: f64,
    pub delta_t: f64,
    pub n: u64,
}

impl TypBound {
    pub fn new(j: &JointPmf, n: u64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            eps_m: epsilon_m(j, epsilon)?,
            delta_t: delta_t(n, epsilon, &[j.rows(), j.cols()]),
            n,
        })
    }

    /// True when `δ_t < 1`, i.e. the probability bound says something.
    pub fn informative(&self) -> bool {
        self.delta_t < 1.0
    }
}

/// `-ε ln p_min`, with `p_min` the smallest entry of the support.
pub fn epsilon_m(j: &JointPmf, epsilon: f64) -> Result<f64> {
    epsilon_m_of(j.data(), epsilon)
}

pub fn epsilon_m_of(probs: &[f64], epsilon: f64) -> Result<f64> {
    let p_min = probs
        .iter()
        .copied()
        .filter(|&p| p > LOG_ZERO)
        .min_by(f64::total_cmp)
        .ok_or(TypError::EmptySupport)?;
    Ok(-epsilon * p_min.ln())
}

/// `(n+1)^K exp(-n ε² / (2 K²))` with `K` the product of the alphabet sizes.
///
/// Evaluated in the log domain; may be `+inf` when the bound is vacuous.
pub fn delta_t(n: u64, epsilon: f64, sizes: &[usize]) -> f64 {
    let k = sizes.iter().product::<usize>() as f64;
    let n = n as f64;
    (k * (n + 1.0).ln() - n * epsilon * epsilon / (2.0 * k * k)).exp()
}

/// Per-cell slack of a `rows x cols` typical set.
pub fn cell_tolerance(epsilon: f64, rows: usize, cols: usize) -> f64 {
    epsilon / (rows * cols) as f64
}

/// Literal strong-typicality test on raw counts: every cell of `counts / n`
/// strictly within `tol` of `probs`.
#[inline]
pub fn counts_within(counts: &[u64], n: u64, probs: &[f64], tol: f64) -> bool {
    let n = n as f64;
    counts.iter().zip(probs).all(|(&c, &p)| (c as f64 / n - p).abs() < tol)
}

/// `(x, y) ∈ A*_ε(p_XY)`.
pub fn is_strongly_typical(x: &[usize], y: &[usize], j: &JointPmf, epsilon: f64) -> Result<bool> {
    check_epsilon(epsilon)?;
    let t = probkit::joint_type(x, y, j.rows(), j.cols())?;
    Ok(counts_within(
        t.counts(),
        t.n(),
        j.data(),
        cell_tolerance(epsilon, j.rows(), j.cols()),
    ))
}

/// `x ∈ A*_ε(p_X)`: every symbol frequency within `ε/|X|`.
pub fn is_sequence_typical(x: &[usize], p: &Pmf, epsilon: f64) -> Result<bool> {
    check_epsilon(epsilon)?;
    let t = probkit::single_type(x, p.len())?;
    Ok(counts_within(t.counts(), t.n(), p.probs(), epsilon / p.len() as f64))
}

/// `y ∈ A*_ε(p_XY | x)`, which by definition is joint typicality of `(x, y)`.
pub fn is_conditionally_typical(y: &[usize], x: &[usize], j: &JointPmf, epsilon: f64) -> Result<bool> {
    is_strongly_typical(x, y, j, epsilon)
}

/// `exp(n (H(X,Y) + ε_m))`, an upper bound on `|A*_ε(p_XY)|`.
pub fn typical_set_size_bound(j: &JointPmf, n: u64, epsilon: f64) -> Result<f64> {
    let eps_m = epsilon_m(j, epsilon)?;
    Ok((n as f64 * (j.entropy() + eps_m)).exp())
}

/// `exp(n (H(Y|X) + ε_m))`, an upper bound on `|A*_ε(p_XY | x)|`.
pub fn conditional_typical_set_size_bound(j: &JointPmf, n: u64, epsilon: f64) -> Result<f64> {
    let eps_m = epsilon_m(j, epsilon)?;
    Ok((n as f64 * (j.conditional_entropy() + eps_m)).exp())
}

/// Lower bound on `Pr[Y ∈ A*_ε(p_XY | x)]` when `Y` is drawn i.i.d. from
/// `p_Y` independently of a typical `x`:
/// `(1 - δ_t(n, ε/2)) exp(-n (I(X;Y) + 2 ε_m))`, clamped to `[0, 1]`.
pub fn hit_probability_lower_bound(j: &JointPmf, n: u64, epsilon: f64) -> Result<f64> {
    let eps3 = 2.0 * epsilon_m(j, epsilon)?;
    Ok(hit_bound_with(j, n, epsilon, eps3))
}

/// Same bound with the sharper exponent `ε_m(p_XY) + ε_m(p_Y)`.
pub fn hit_probability_lower_bound_sharp(j: &JointPmf, n: u64, epsilon: f64) -> Result<f64> {
    let eps3 = epsilon_m(j, epsilon)? + epsilon_m_of(j.marginal_cols().probs(), epsilon)?;
    Ok(hit_bound_with(j, n, epsilon, eps3))
}

fn hit_bound_with(j: &JointPmf, n: u64, epsilon: f64, eps3: f64) -> f64 {
    let dt = delta_t(n, epsilon / 2.0, &[j.rows(), j.cols()]);
    let mi = probkit::mutual_information(j);
    ((1.0 - dt).max(0.0) * (-(n as f64) * (mi + eps3)).exp()).clamp(0.0, 1.0)
}

/// `1 - δ_t(n, ε/2, |U||V||W|)`, clamped to `[0, 1]`.
pub fn markov_lemma_bound(n: u64, epsilon: f64, sizes: &[usize]) -> f64 {
    (1.0 - delta_t(n, epsilon / 2.0, sizes)).clamp(0.0, 1.0)
}

/// Checks `(1 - ξ)^θ ≤ exp(-θ ξ)` for `θ > 0`, `ξ ≤ 1`, in the log domain.
///
/// Returns `None` outside the domain.
pub fn exp_inequality_holds(theta: f64, xi: f64) -> Option<bool> {
    if !(theta > 0.0 && xi <= 1.0 && theta.is_finite() && xi.is_finite()) {
        return None;
    }
    let lhs = theta * (1.0 - xi).ln();
    let rhs = -theta * xi;
    Some(lhs <= rhs + 1e-12 * rhs.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform4() -> JointPmf {
        JointPmf::new(2, 2, vec![0.25; 4]).unwrap()
    }

    #[test]
    fn epsilon_m_examples() {
        let e = epsilon_m(&uniform4(), 0.1).unwrap();
        assert!((e - 0.138_629_436_111_989_06).abs() < 1e-12);
        let point = JointPmf::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(epsilon_m(&point, 0.1).unwrap(), 0.0);
        assert_eq!(epsilon_m(&uniform4(), 0.0).unwrap(), 0.0);
        assert_eq!(epsilon_m_of(&[0.0, 0.0], 0.1), Err(TypError::EmptySupport));
    }

    #[test]
    fn epsilon_m_ignores_zero_cells() {
        let j = JointPmf::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((epsilon_m(&j, 0.2).unwrap() - 0.2 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn delta_t_examples() {
        assert!(delta_t(10, 0.1, &[2, 2]) > 1.0);
        // (2001)^4 e^{-2.5}, evaluated independently.
        let v = delta_t(2000, 0.2, &[2, 2]);
        assert!((v / 1_315_988_668_635.074_7 - 1.0).abs() < 1e-9);
        // eventually decreasing
        let sizes = [2, 2];
        let mut prev = delta_t(200_000, 0.2, &sizes);
        for n in (210_000..400_000).step_by(10_000) {
            let cur = delta_t(n, 0.2, &sizes);
            assert!(cur < prev);
            prev = cur;
        }
        assert!(prev < 1.0);
    }

    #[test]
    fn typicality_examples() {
        let j = uniform4();
        assert!(is_strongly_typical(&[0, 0, 1, 1], &[0, 1, 0, 1], &j, 1e-6).unwrap());
        let half = Pmf::uniform(2).unwrap();
        assert!(!is_sequence_typical(&[0, 0, 0, 0], &half, 0.1).unwrap());
        assert!(is_sequence_typical(&[0, 1, 0, 1], &half, 0.1).unwrap());
        assert!(is_strongly_typical(&[0, 1], &[0], &j, 0.1).is_err());
        assert!(is_strongly_typical(&[0], &[0], &j, 0.0).is_err());
    }

    #[test]
    fn conditional_typicality_examples() {
        // y = (0,1,0,1) is typical for the uniform marginal but paired
        // with x = y the joint type is diagonal, far from uniform.
        let j = uniform4();
        let x = [0, 1, 0, 1];
        assert!(is_sequence_typical(&x, &Pmf::uniform(2).unwrap(), 0.1).unwrap());
        assert!(!is_conditionally_typical(&x, &x, &j, 0.1).unwrap());
        assert!(is_conditionally_typical(&[0, 0, 1, 1], &x, &j, 0.1).unwrap());
    }

    #[test]
    fn size_bounds() {
        let point = JointPmf::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(typical_set_size_bound(&point, 8, 0.0).unwrap(), 1.0);
        let j = uniform4();
        let a = typical_set_size_bound(&j, 8, 0.1).unwrap();
        let b = typical_set_size_bound(&j, 8, 0.2).unwrap();
        assert!(b > a);
        let c = conditional_typical_set_size_bound(&j, 8, 0.1).unwrap();
        assert!(c < a);
    }

    #[test]
    fn hit_bound_range() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let q = Pmf::new(vec![0.6, 0.4]).unwrap();
        let j = JointPmf::product(&p, &q);
        for n in [1u64, 10, 100, 10_000, 1_000_000] {
            let b = hit_probability_lower_bound(&j, n, 0.2).unwrap();
            assert!((0.0..=1.0).contains(&b));
            let s = hit_probability_lower_bound_sharp(&j, n, 0.2).unwrap();
            assert!(s >= b);
        }
        // Independent j: I = 0, so the bound is (1 - δ_t) e^{-2 n ε_m}.
        let n = 2_000_000;
        let dt = delta_t(n, 0.1, &[2, 2]);
        let em = epsilon_m(&j, 0.2).unwrap();
        let expect = (1.0 - dt) * (-(n as f64) * 2.0 * em).exp();
        let got = hit_probability_lower_bound(&j, n, 0.2).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.max(1e-300));
    }

    #[test]
    fn markov_bound_examples() {
        assert_eq!(markov_lemma_bound(5, 0.3, &[2, 2, 2]), 0.0);
        let direct = (1.0 - 3001f64.powi(8) * (-3000.0 * 0.15 * 0.15 / 128.0f64).exp()).clamp(0.0, 1.0);
        assert_eq!(markov_lemma_bound(3000, 0.3, &[2, 2, 2]), direct);
        let a = markov_lemma_bound(45_000, 1.0, &[2, 2, 2]);
        let b = markov_lemma_bound(50_000, 1.0, &[2, 2, 2]);
        assert!(b > a && a > 0.0);
    }

    #[test]
    fn eps_prime_value() {
        let p = TypicalityParams::new(0.3, vec![2, 2]).unwrap();
        assert!((p.eps_prime() - 0.075).abs() < 1e-15);
        assert!(TypicalityParams::new(-1.0, vec![2]).is_err());
    }

    #[test]
    fn exp_inequality_domain() {
        assert_eq!(exp_inequality_holds(0.0, 0.5), None);
        assert_eq!(exp_inequality_holds(1.0, 1.5), None);
        assert_eq!(exp_inequality_holds(2.0, 1.0), Some(true));
        assert_eq!(exp_inequality_holds(2.0, -3.0), Some(true));
    }
}
