//! Analytic companions to the simulated error cases.

use super::{codeword_count, MarkovLaw, Result, Rounding};
use crate::probkit::{self, JointPmf};
use crate::typicality::{self, cell_tolerance, delta_t, eps_prime};

/// Union bound on case A: `min(1, L δ_t(n, ε', |X|²))`.
pub fn case_a_bound(n: u64, epsilon: f64, x_size: usize, agents: usize) -> f64 {
    let eps_p = eps_prime(epsilon, x_size);
    (agents as f64 * delta_t(n, eps_p, &[x_size, x_size])).min(1.0)
}

/// Bound on every direct encoder failing: `min(1, Σ_l exp(-M_l π))`, with
/// `π` the typical-hit lower bound under `p_{X̂Y}` at slack `ε` and `M_l`
/// the codebook size. Each term bounds `(1 - π)^{M_l}`.
pub fn case_b_bound_direct(law: &MarkovLaw, n: usize, rates: &[f64], slacks: &[f64], epsilon: f64) -> Result<f64> {
    let hit = typicality::hit_probability_lower_bound(law.p_xhat_y(), n as u64, epsilon)
        .map_err(|e| super::CodingError::Config(e.to_string()))?;
    let mut total = 0.0;
    for (l, &rate) in rates.iter().enumerate() {
        let slack = slacks.get(l).or(slacks.first()).copied().unwrap_or(0.0);
        let m = codeword_count(n as f64 * (rate + slack), Rounding::Floor)? as f64;
        total += (-m * hit).exp();
    }
    Ok(total.min(1.0))
}

/// Union bound on some binned encoder failing: `min(1, L exp(-B V π))`.
#[allow(clippy::too_many_arguments)]
pub fn case_b_bound_binned(
    law: &MarkovLaw,
    n: usize,
    agents: usize,
    rate: f64,
    slack: f64,
    bin_rate: f64,
    bin_slack: f64,
    epsilon: f64,
) -> Result<f64> {
    let hit = typicality::hit_probability_lower_bound(law.p_xhat_y(), n as u64, epsilon)
        .map_err(|e| super::CodingError::Config(e.to_string()))?;
    let bins = codeword_count(n as f64 * (rate + slack), Rounding::Floor)? as f64;
    let per_bin = codeword_count(n as f64 * (bin_rate - bin_slack), Rounding::Ceil)?.max(1) as f64;
    Ok((agents as f64 * (-bins * per_bin * hit).exp()).min(1.0))
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Exact `Pr[(x̂, Y) ∈ A*_ε(p_{X̂Y})]` for `Y` i.i.d. from the column
/// marginal of `p_xhat_y`.
///
/// Given `x̂`, the counts in different rows are independent multinomials,
/// so the probability is a product over rows of a sum over the admissible
/// compositions of each row, computed by a log-domain convolution.
pub fn exact_hit_probability(xhat: &[usize], p_xhat_y: &JointPmf, epsilon: f64) -> Result<f64> {
    let (rows, cols) = p_xhat_y.shape();
    let n = xhat.len();
    let row_counts = probkit::single_type(xhat, rows)?;
    let p_y = p_xhat_y.marginal_cols();
    let tol = cell_tolerance(epsilon, rows, cols);
    let nf = n as f64;

    let mut log_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }

    let mut log_total = 0.0;
    for a in 0..rows {
        let na = row_counts.counts()[a] as usize;
        // dp[s]: log of sum over partial compositions with total s of
        // prod p^c / c!
        let mut dp = vec![f64::NEG_INFINITY; na + 1];
        dp[0] = 0.0;
        for b in 0..cols {
            let pab = p_xhat_y.get(a, b);
            let py = p_y.probs()[b];
            let mut next = vec![f64::NEG_INFINITY; na + 1];
            for c in 0..=na {
                if (c as f64 / nf - pab).abs() >= tol {
                    continue;
                }
                let term = if c == 0 {
                    0.0
                } else if py > 0.0 {
                    c as f64 * py.ln() - log_fact[c]
                } else {
                    continue;
                };
                for s in c..=na {
                    if dp[s - c] > f64::NEG_INFINITY {
                        next[s] = log_sum_exp(next[s], dp[s - c] + term);
                    }
                }
            }
            dp = next;
        }
        if dp[na] == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        log_total += log_fact[na] + dp[na];
    }
    Ok(log_total.exp().min(1.0))
}

/// `(1 - π)^M`: probability that none of `codebook_size` independent
/// codewords is typical with `x̂`.
pub fn encoder_failure_probability(
    xhat: &[usize],
    p_xhat_y: &JointPmf,
    epsilon: f64,
    codebook_size: u64,
) -> Result<f64> {
    let hit = exact_hit_probability(xhat, p_xhat_y, epsilon)?;
    if hit >= 1.0 {
        return Ok(0.0);
    }
    Ok((codebook_size as f64 * (-hit).ln_1p()).exp())
}
