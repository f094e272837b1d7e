//! Finite-alphabet probability kernels.
//!
//! Symbols of an alphabet of size `k` are the integers `0..k`. All
//! information quantities are in nats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of a distribution.
pub const PROB_TOL: f64 = 1e-12;

/// Probabilities below this are exact zeros inside log terms.
pub const LOG_ZERO: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
    #[error("negative or non-finite probability {value} at index {index}")]
    BadEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sequence")]
    EmptySequence,
    #[error("symbol {symbol} at position {position} outside alphabet of size {size}")]
    SymbolOutOfRange {
        position: usize,
        symbol: usize,
        size: usize,
    },
    #[error("delta must be non-negative, got {0}")]
    NegativeDelta(f64),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Size of a finite alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn check(self, seq: &[usize]) -> Result<()> {
        match seq.iter().position(|&s| s >= self.0) {
            Some(position) => Err(ProbError::SymbolOutOfRange {
                position,
                symbol: seq[position],
                size: self.0,
            }),
            None => Ok(()),
        }
    }
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(ProbError::EmptyAlphabet);
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ProbError::BadEntry { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(ProbError::NotNormalized { sum });
    }
    Ok(())
}

/// `-p ln p` with the `0 ln 0 = 0` convention.
#[inline]
fn neg_plogp(p: f64) -> f64 {
    if p <= LOG_ZERO {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Entropy of an arbitrary mass vector (need not be normalized).
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| neg_plogp(p)).sum()
}

/// A probability mass function over one alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(Self { probs })
    }

    /// Accepts a vector whose mass is within `tol` of one and rescales it.
    pub fn normalized(mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol || !sum.is_finite() {
            return Err(ProbError::NotNormalized { sum });
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Self::new(probs)
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        Ok(Self {
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        Alphabet::new(size)?;
        if symbol >= size {
            return Err(ProbError::SymbolOutOfRange {
                position: 0,
                symbol,
                size,
            });
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.probs.len())
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

/// A conditional distribution: one row per conditioning symbol, each row a
/// distribution over the output alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondPmf {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl CondPmf {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(rows, None)
    }

    /// Like [`CondPmf::from_rows`] but rescales rows whose mass is within
    /// `tol` of one.
    pub fn from_rows_normalized(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        Self::build(rows, Some(tol))
    }

    fn build(rows: Vec<Vec<f64>>, tol: Option<f64>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        let outputs = rows[0].len();
        let mut data = Vec::with_capacity(inputs * outputs);
        for row in rows {
            if row.len() != outputs {
                return Err(ProbError::Shape(format!(
                    "ragged channel rows: {} vs {}",
                    row.len(),
                    outputs
                )));
            }
            let row = match tol {
                Some(tol) => Pmf::normalized(row, tol)?,
                None => Pmf::new(row)?,
            };
            data.extend_from_slice(row.probs());
        }
        Ok(Self { inputs, outputs, data })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Ok(Self {
            inputs: size,
            outputs: size,
            data,
        })
    }

    /// Every row equal to `out`.
    pub fn constant(inputs: usize, out: &Pmf) -> Result<Self> {
        Alphabet::new(inputs)?;
        let data = (0..inputs).flat_map(|_| out.probs().iter().copied()).collect();
        Ok(Self {
            inputs,
            outputs: out.len(),
            data,
        })
    }

    /// Binary symmetric channel with crossover `flip`.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        Self::from_rows(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.data[input * self.outputs + output]
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.data[input * self.outputs..(input + 1) * self.outputs]
    }

    pub fn row_pmf(&self, input: usize) -> Pmf {
        Pmf {
            probs: self.row(input).to_vec(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inputs).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Channel composition `self` then `next`: `(self ∘ next)(z|x) = Σ_y self(y|x) next(z|y)`.
    pub fn then(&self, next: &CondPmf) -> Result<CondPmf> {
        if self.outputs != next.inputs {
            return Err(ProbError::Shape(format!(
                "cannot compose {}x{} with {}x{}",
                self.inputs, self.outputs, next.inputs, next.outputs
            )));
        }
        let mut data = vec![0.0; self.inputs * next.outputs];
        for x in 0..self.inputs {
            for y in 0..self.outputs {
                let a = self.get(x, y);
                if a == 0.0 {
                    continue;
                }
                for z in 0..next.outputs {
                    data[x * next.outputs + z] += a * next.get(y, z);
                }
            }
        }
        Ok(CondPmf {
            inputs: self.inputs,
            outputs: next.outputs,
            data,
        })
    }

    /// Joint law `p(x) c(y|x)`.
    pub fn joint_with(&self, input: &Pmf) -> Result<JointPmf> {
        if input.len() != self.inputs {
            return Err(ProbError::Shape(format!(
                "input pmf over {} symbols, channel expects {}",
                input.len(),
                self.inputs
            )));
        }
        let data = (0..self.inputs)
            .flat_map(|x| self.row(x).iter().map(move |&c| input.probs[x] * c))
            .collect();
        Ok(JointPmf {
            rows: self.inputs,
            cols: self.outputs,
            data,
        })
    }

    /// Output distribution `Σ_x p(x) c(·|x)`.
    pub fn push_forward(&self, input: &Pmf) -> Result<Pmf> {
        Ok(self.joint_with(input)?.marginal_cols())
    }
}

/// Joint distribution over a pair of alphabets, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        if data.len() != rows * cols {
            return Err(ProbError::Shape(format!(
                "{} entries for a {}x{} joint",
                data.len(),
                rows,
                cols
            )));
        }
        validate_probs(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(ProbError::Shape("ragged joint rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// A `1 x k` joint holding a single pmf.
    pub fn from_pmf(p: &Pmf) -> Self {
        Self {
            rows: 1,
            cols: p.len(),
            data: p.probs.clone(),
        }
    }

    /// Product law `p(x) q(y)`.
    pub fn product(p: &Pmf, q: &Pmf) -> Self {
        let data = p
            .probs
            .iter()
            .flat_map(|&a| q.probs.iter().map(move |&b| a * b))
            .collect();
        Self {
            rows: p.len(),
            cols: q.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.cols + b]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn marginal_rows(&self) -> Pmf {
        Pmf {
            probs: (0..self.rows)
                .map(|a| self.data[a * self.cols..(a + 1) * self.cols].iter().sum())
                .collect(),
        }
    }

    pub fn marginal_cols(&self) -> Pmf {
        let mut probs = vec![0.0; self.cols];
        for a in 0..self.rows {
            for (b, p) in probs.iter_mut().enumerate() {
                *p += self.get(a, b);
            }
        }
        Pmf { probs }
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.data)
    }

    /// `H(col | row)`.
    pub fn conditional_entropy(&self) -> f64 {
        (self.entropy() - self.marginal_rows().entropy()).max(0.0)
    }

    /// Smallest nonzero entry.
    pub fn min_support(&self) -> Option<f64> {
        self.data
            .iter()
            .copied()
            .filter(|&p| p > LOG_ZERO)
            .min_by(f64::total_cmp)
    }
}

/// Joint distribution over three alphabets `(X, X̂, Ŷ)`, row-major in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl JointPmf3 {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(ProbError::EmptyAlphabet);
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(ProbError::Shape(format!(
                "{} entries for a {:?} tensor",
                data.len(),
                dims
            )));
        }
        validate_probs(&data)?;
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dims[1] + b) * self.dims[2] + c]
    }

    /// Marginal over the two listed axes (in that order).
    pub fn pair(&self, first: usize, second: usize) -> JointPmf {
        assert!(first < 3 && second < 3 && first != second, "bad axes");
        let (r, c) = (self.dims[first], self.dims[second]);
        let mut data = vec![0.0; r * c];
        for a in 0..self.dims[0] {
            for b in 0..self.dims[1] {
                for d in 0..self.dims[2] {
                    let idx = [a, b, d];
                    data[idx[first] * c + idx[second]] += self.get(a, b, d);
                }
            }
        }
        JointPmf { rows: r, cols: c, data }
    }

    pub fn single(&self, axis: usize) -> Pmf {
        let other = if axis == 0 { 1 } else { 0 };
        let j = self.pair(axis, other);
        j.marginal_rows()
    }

    pub fn p_x(&self) -> Pmf {
        self.single(0)
    }

    pub fn p_xhat(&self) -> Pmf {
        self.single(1)
    }

    pub fn p_y(&self) -> Pmf {
        self.single(2)
    }

    pub fn p_x_xhat(&self) -> JointPmf {
        self.pair(0, 1)
    }

    pub fn p_x_y(&self) -> JointPmf {
        self.pair(0, 2)
    }

    pub fn p_xhat_y(&self) -> JointPmf {
        self.pair(1, 2)
    }
}

/// Empirical joint distribution of a pair of sequences, kept as integer
/// counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointType {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    n: u64,
}

impl JointType {
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        if counts.len() != rows * cols {
            return Err(ProbError::Shape(format!(
                "{} counts for a {rows}x{cols} type",
                counts.len()
            )));
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(ProbError::EmptySequence);
        }
        Ok(Self { rows, cols, counts, n })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.cols + b]
    }

    pub fn freq(&self, a: usize, b: usize) -> f64 {
        self.count(a, b) as f64 / self.n as f64
    }

    pub fn to_pmf(&self) -> JointPmf {
        let n = self.n as f64;
        JointPmf {
            rows: self.rows,
            cols: self.cols,
            data: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    /// Type of the concatenation of the sequence pairs behind `types`.
    pub fn merge<'a>(types: impl IntoIterator<Item = &'a JointType>) -> Result<JointType> {
        let mut iter = types.into_iter();
        let first = iter.next().ok_or(ProbError::EmptySequence)?.clone();
        iter.try_fold(first, |mut acc, t| {
            if t.shape() != acc.shape() {
                return Err(ProbError::Shape("merging types of different shapes".into()));
            }
            acc.counts.iter_mut().zip(&t.counts).for_each(|(a, b)| *a += b);
            acc.n += t.n;
            Ok(acc)
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Counts `(x_i, y_i)` occurrences. Alphabet sizes are explicit so that
/// unobserved symbols still get cells.
pub fn joint_type(x: &[usize], y: &[usize], x_size: usize, y_size: usize) -> Result<JointType> {
    if x.len() != y.len() {
        return Err(ProbError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(ProbError::EmptySequence);
    }
    Alphabet::new(x_size)?.check(x)?;
    Alphabet::new(y_size)?.check(y)?;
    let mut counts = vec![0u64; x_size * y_size];
    for (&a, &b) in x.iter().zip(y) {
        counts[a * y_size + b] += 1;
    }
    Ok(JointType {
        rows: x_size,
        cols: y_size,
        counts,
        n: x.len() as u64,
    })
}

/// Empirical distribution of a single sequence.
pub fn single_type(x: &[usize], size: usize) -> Result<JointType> {
    let zeros = vec![0; x.len()];
    joint_type(x, &zeros, size, 1)
}

pub fn tv_distance(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    if p.shape() != q.shape() {
        return Err(ProbError::Shape(format!("{:?} vs {:?}", p.shape(), q.shape())));
    }
    Ok(tv_of(&p.data, &q.data))
}

pub(crate) fn tv_of(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * s).min(1.0)
}

/// TV distance between a joint type and a joint distribution.
pub fn type_tv(t: &JointType, q: &JointPmf) -> Result<f64> {
    tv_distance(&t.to_pmf(), q)
}

/// TV distance between two types of equal length, from the integer counts,
/// so the result is the correctly rounded value of `Σ|c - c'| / 2n`.
pub fn types_tv(s: &JointType, t: &JointType) -> Result<f64> {
    if s.shape() != t.shape() {
        return Err(ProbError::Shape(format!("{:?} vs {:?}", s.shape(), t.shape())));
    }
    if s.n != t.n {
        return Err(ProbError::LengthMismatch(s.n as usize, t.n as usize));
    }
    let diff: u64 = s.counts.iter().zip(&t.counts).map(|(a, b)| a.abs_diff(*b)).sum();
    Ok(diff as f64 / (2 * s.n) as f64)
}

/// Closed TV ball membership.
pub fn in_delta_neighborhood(p: &JointPmf, q: &JointPmf, delta: f64) -> Result<bool> {
    if delta < 0.0 || delta.is_nan() {
        return Err(ProbError::NegativeDelta(delta));
    }
    Ok(tv_distance(p, q)? <= delta)
}

pub fn entropy(p: &Pmf) -> f64 {
    p.entropy()
}

pub fn mutual_information(j: &JointPmf) -> f64 {
    let pa = j.marginal_rows();
    let pb = j.marginal_cols();
    let mut total = 0.0;
    for a in 0..j.rows {
        for b in 0..j.cols {
            let p = j.get(a, b);
            if p <= LOG_ZERO {
                continue;
            }
            total += p * (p / (pa.probs[a] * pb.probs[b])).ln();
        }
    }
    total.max(0.0)
}

/// `I(X̂; Ŷ | X)` for a tensor over `(X, X̂, Ŷ)`.
pub fn conditional_mutual_information(t: &JointPmf3) -> f64 {
    let [dx, dh, dy] = t.dims;
    let mut total = 0.0;
    for x in 0..dx {
        let slice: Vec<f64> = (0..dh)
            .flat_map(|h| (0..dy).map(move |y| (h, y)))
            .map(|(h, y)| t.get(x, h, y))
            .collect();
        let px: f64 = slice.iter().sum();
        if px <= LOG_ZERO {
            continue;
        }
        let cond = JointPmf {
            rows: dh,
            cols: dy,
            data: slice.iter().map(|p| p / px).collect(),
        };
        total += px * mutual_information(&cond);
    }
    total.max(0.0)
}

/// Builds `p0(x) chan1(x̂|x) chan2(ŷ|x̂)`.
pub fn compose_markov(p0: &Pmf, chan1: &CondPmf, chan2: &CondPmf) -> Result<JointPmf3> {
    if chan1.inputs != p0.len() || chan2.inputs != chan1.outputs {
        return Err(ProbError::Shape(format!(
            "p0 over {}, chan1 {}x{}, chan2 {}x{}",
            p0.len(),
            chan1.inputs,
            chan1.outputs,
            chan2.inputs,
            chan2.outputs
        )));
    }
    let dims = [p0.len(), chan1.outputs, chan2.outputs];
    let mut data = Vec::with_capacity(dims.iter().product());
    for x in 0..dims[0] {
        for h in 0..dims[1] {
            for y in 0..dims[2] {
                data.push(p0.probs[x] * chan1.get(x, h) * chan2.get(h, y));
            }
        }
    }
    Ok(JointPmf3 { dims, data })
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}
