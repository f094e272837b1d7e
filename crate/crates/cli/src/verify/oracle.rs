//! Brute-force reference implementations. They deliberately avoid the
//! library's kernels: counts are taken cell by cell, information
//! quantities go through entropies, TV through the supremum over events,
//! and the binned trial is replayed with explicit stacked sequences.

use coordsim::coding::CodebookSpec;
use coordsim::rng::StreamKey;
use coordsim::{ActionDraw, ErrorCase, MarkovLaw};
use std::collections::BTreeSet;

/// `counts[a * cols + b] = #{i : x_i = a, y_i = b}`, one pass per cell.
pub fn cell_counts(x: &[usize], y: &[usize], rows: usize, cols: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(rows * cols);
    for a in 0..rows {
        for b in 0..cols {
            out.push(x.iter().zip(y).filter(|&(&u, &v)| u == a && v == b).count() as u64);
        }
    }
    out
}

/// `max_A |P(A) - Q(A)|` over all `2^k` events of a `k`-cell space.
pub fn tv_sup(p: &[f64], q: &[f64]) -> f64 {
    let k = p.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << k) {
        let (mut pa, mut qa) = (0.0, 0.0);
        for i in 0..k {
            if mask >> i & 1 == 1 {
                pa += p[i];
                qa += q[i];
            }
        }
        best = best.max((pa - qa).abs());
    }
    best
}

/// [`tv_sup`] on integer counts of two types of length `n`, exact up to
/// the final division.
pub fn tv_sup_counts(c: &[u64], d: &[u64], n: u64) -> f64 {
    let k = c.len();
    let mut best = 0i64;
    for mask in 0u32..(1 << k) {
        let mut diff = 0i64;
        for i in 0..k {
            if mask >> i & 1 == 1 {
                diff += c[i] as i64 - d[i] as i64;
            }
        }
        best = best.max(diff.abs());
    }
    best as f64 / n as f64
}

fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Marginalizes a tensor with `dims` onto the axes in `keep`.
fn marginal(data: &[f64], dims: &[usize], keep: &[usize]) -> Vec<f64> {
    let out_dims: Vec<usize> = keep.iter().map(|&a| dims[a]).collect();
    let mut out = vec![0.0; out_dims.iter().product()];
    let mut idx = vec![0usize; dims.len()];
    for &p in data {
        let mut flat = 0;
        for (&a, &d) in keep.iter().zip(&out_dims) {
            flat = flat * d + idx[a];
        }
        out[flat] += p;
        for axis in (0..dims.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < dims[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    out
}

/// `H(A) + H(B) - H(A, B)`.
pub fn mutual_information(data: &[f64], rows: usize, cols: usize) -> f64 {
    let dims = [rows, cols];
    entropy(marginal(data, &dims, &[0])) + entropy(marginal(data, &dims, &[1])) - entropy(data.iter().copied())
}

/// `I(B; C | A) = H(A, B) + H(A, C) - H(A, B, C) - H(A)` for a tensor over
/// `(A, B, C)`.
pub fn conditional_mutual_information(data: &[f64], dims: [usize; 3]) -> f64 {
    entropy(marginal(data, &dims, &[0, 1])) + entropy(marginal(data, &dims, &[0, 2]))
        - entropy(data.iter().copied())
        - entropy(marginal(data, &dims, &[0]))
}

/// The definition of strong typicality, read literally: every cell of the
/// empirical distribution strictly within `ε / (rows · cols)` of `p`.
pub fn literally_typical(x: &[usize], y: &[usize], p: &[f64], rows: usize, cols: usize, epsilon: f64) -> bool {
    let n = x.len() as f64;
    let counts = cell_counts(x, y, rows, cols);
    let bound = epsilon / (rows * cols) as f64;
    counts.iter().zip(p).all(|(&c, &q)| (c as f64 / n - q).abs() < bound)
}

/// Single-sequence variant with divisor `|X|`.
pub fn literally_typical_single(x: &[usize], p: &[f64], epsilon: f64) -> bool {
    let n = x.len() as f64;
    let bound = epsilon / p.len() as f64;
    (0..p.len()).all(|a| {
        let c = x.iter().filter(|&&u| u == a).count() as f64;
        (c / n - p[a]).abs() < bound
    })
}

/// Random pmf of `size` entries from the stream `key`; roughly one entry
/// in eight is an exact zero (never all of them).
pub fn random_pmf(key: StreamKey, size: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..size as u64)
        .map(|i| {
            if key.uniform(2 * i) < 0.125 {
                0.0
            } else {
                -(1.0 - key.uniform(2 * i + 1)).ln() + 1e-3
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Random pmf with every entry positive.
pub fn random_positive_pmf(key: StreamKey, size: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..size as u64).map(|i| -(1.0 - key.uniform(i)).ln() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Random `rows x cols` channel, row by row from `key`.
pub fn random_channel(key: StreamKey, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows as u64).map(|a| random_pmf(key.derive(a), cols)).collect()
}

/// Everything the binned trial oracle decides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedReplay {
    pub y: Vec<usize>,
    pub case: ErrorCase,
    pub tuples: usize,
}

fn all_sequences(alphabet: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..alphabet).map(move |a| {
                    let mut t = s.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

/// Replays one binned trial by exhaustive search: encoders scan every
/// `(w, v)` in row-major order, the decoder tries every `x ∈ X^n` (no
/// pre-filter) and every in-bin tuple on explicitly stacked sequences.
pub fn binned_trial(draw: &ActionDraw, books: &[CodebookSpec], law: &MarkovLaw, epsilon: f64) -> BinnedReplay {
    let (xs, ys) = (law.x_size(), law.y_size());
    let n = draw.x.len();
    let eps_prime = epsilon / (2 * xs) as f64;

    let case_a = draw
        .xhat
        .iter()
        .any(|xh| !literally_typical(&draw.x, xh, law.p_x_xhat().data(), xs, xs, eps_prime));

    let mut sent = Vec::new();
    let mut failed = false;
    for (xh, book) in draw.xhat.iter().zip(books) {
        let mut hit = None;
        'scan: for w in 0..book.bins() {
            for v in 0..book.per_bin() {
                let cw = book.codeword(w, v).expect("in range");
                if literally_typical(xh, &cw, law.p_xhat_y().data(), xs, ys, epsilon) {
                    hit = Some(w);
                    break 'scan;
                }
            }
        }
        failed |= hit.is_none();
        sent.push(hit.unwrap_or(0));
    }

    let bins: Vec<Vec<Vec<usize>>> = books
        .iter()
        .zip(&sent)
        .map(|(b, &w)| (0..b.per_bin()).map(|v| b.codeword(w, v).expect("in range")).collect())
        .collect();
    let agents = books.len();
    let mut tuples: BTreeSet<Vec<usize>> = BTreeSet::new();
    for x in all_sequences(xs, n) {
        let stacked_x: Vec<usize> = (0..agents).flat_map(|_| x.iter().copied()).collect();
        let mut tuple = vec![0usize; agents];
        loop {
            let stacked_y: Vec<usize> = tuple
                .iter()
                .enumerate()
                .flat_map(|(l, &v)| bins[l][v].iter().copied())
                .collect();
            if literally_typical(&stacked_x, &stacked_y, law.p_x_y().data(), xs, ys, epsilon) {
                tuples.insert(tuple.clone());
            }
            let mut l = 0;
            while l < agents {
                tuple[l] += 1;
                if tuple[l] < bins[l].len() {
                    break;
                }
                tuple[l] = 0;
                l += 1;
            }
            if l == agents {
                break;
            }
        }
    }

    let v1 = if tuples.len() == 1 {
        tuples.iter().next().expect("one tuple")[0]
    } else {
        0
    };
    let y = bins[0][v1].clone();
    let final_ok = literally_typical(&draw.x, &y, law.p_x_y().data(), xs, ys, epsilon);
    let case = if case_a {
        ErrorCase::A
    } else if failed {
        ErrorCase::B
    } else if tuples.is_empty() {
        ErrorCase::Ca
    } else if tuples.len() > 1 {
        ErrorCase::Cb
    } else if final_ok {
        ErrorCase::None
    } else {
        ErrorCase::D
    };
    BinnedReplay {
        y,
        case,
        tuples: tuples.len(),
    }
}

/// `(I(X̂;Ŷ|X), I(X̂;Ŷ), TV)` for binary alphabets and the channel
/// `q = [[1-a, a], [1-b, b]]`, written out by hand.
pub fn binary_region_point(
    p0: &[f64; 2],
    obs: &[[f64; 2]; 2],
    target: &[[f64; 2]; 2],
    a: f64,
    b: f64,
) -> (f64, f64, f64) {
    let q = [[1.0 - a, a], [1.0 - b, b]];
    let xlogy = |x: f64, y: f64| if x > 0.0 { x * (x / y).ln() } else { 0.0 };
    let mut cmi = 0.0;
    let mut tv = 0.0;
    let mut pxh = [0.0; 2];
    for x in 0..2 {
        let mut py = [0.0; 2];
        for xh in 0..2 {
            pxh[xh] += p0[x] * obs[x][xh];
            for y in 0..2 {
                py[y] += obs[x][xh] * q[xh][y];
            }
        }
        for xh in 0..2 {
            for y in 0..2 {
                cmi += p0[x] * obs[x][xh] * xlogy(q[xh][y], py[y]);
            }
        }
        for y in 0..2 {
            tv += 0.5 * p0[x] * (py[y] - target[x][y]).abs();
        }
    }
    let r = [pxh[0] * q[0][0] + pxh[1] * q[1][0], pxh[0] * q[0][1] + pxh[1] * q[1][1]];
    let mut mi = 0.0;
    for xh in 0..2 {
        for y in 0..2 {
            mi += pxh[xh] * xlogy(q[xh][y], r[y]);
        }
    }
    (cmi.max(0.0), mi.max(0.0), tv)
}

/// Minimum of both rates over the grid `{0, 1/steps, ..., 1}^2` restricted
/// to TV `≤ delta + slack`; `None` when no grid point is feasible.
pub fn binary_region_grid(table: &[(f64, f64, f64)], delta: f64, slack: f64) -> Option<(f64, f64)> {
    table
        .iter()
        .filter(|p| p.2 <= delta + slack)
        .fold(None, |best, &(c, m, _)| match best {
            None => Some((c, m)),
            Some((bc, bm)) => Some((bc.min(c), bm.min(m))),
        })
}

/// Every grid point of [`binary_region_point`] at step `1/steps`.
pub fn binary_region_table(
    p0: &[f64; 2],
    obs: &[[f64; 2]; 2],
    target: &[[f64; 2]; 2],
    steps: usize,
) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        for j in 0..=steps {
            out.push(binary_region_point(
                p0,
                obs,
                target,
                i as f64 / steps as f64,
                j as f64 / steps as f64,
            ));
        }
    }
    out
}
