//! Inner-bound rate regions for Δ-empirical coordination.
//!
//! The auxiliary output `Ŷ` is generated from the observation through a
//! channel `q(ŷ|x̂)`, so the chain `X - X̂ - Ŷ` holds by construction and
//! `Ŷ` takes values in the action alphabet `Y`. A channel is feasible for
//! `Δ` when the induced joint `p0(x) Σ_x̂ p(x̂|x) q(y|x̂)` lies within TV
//! distance `Δ` of `p0(x) p(y|x)`.
//!
//! Two rate objectives are minimized over the feasible set: `I(X̂;Ŷ)`, the
//! rate one agent must carry with finitely many agents, and `I(X̂;Ŷ|X)`,
//! the per-agent rate of the binned scheme. Both are convex in `q` and the
//! feasible set is a polytope; the solver is a log-barrier Newton method
//! started from a coarse grid and seeded random restarts.

mod barrier;

use crate::probkit::{self, CondPmf, JointPmf3, Pmf, ProbError};
use crate::rng::{StreamKey, DOMAIN_SOLVER};
use barrier::{Affine, ChannelMap, InfoObjective, Objective, Program};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the TV constraint.
pub const FEAS_TOL: f64 = 1e-9;
/// Accuracy target for optimal rates, in nats.
pub const OPT_TOL: f64 = 1e-4;
/// Largest alphabet the solver accepts.
pub const MAX_SOLVER_ALPHABET: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("delta must be a non-negative number, got {0}")]
    BadDelta(f64),
    #[error("alphabet of size {0} exceeds the solver limit of {MAX_SOLVER_ALPHABET}")]
    TooLarge(usize),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, RegionError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionQuery {
    pub p0: Pmf,
    /// `p(x̂|x)`, square over the source alphabet.
    pub obs: CondPmf,
    /// Desired `p(y|x)`.
    pub target: CondPmf,
    pub delta: f64,
}

impl RegionQuery {
    pub fn new(p0: Pmf, obs: CondPmf, target: CondPmf, delta: f64) -> Result<Self> {
        let nx = p0.len();
        if obs.inputs() != nx || obs.outputs() != nx {
            return Err(ProbError::Shape(format!(
                "observation channel must be {nx}x{nx}, got {}x{}",
                obs.inputs(),
                obs.outputs()
            ))
            .into());
        }
        if target.inputs() != nx {
            return Err(ProbError::Shape(format!(
                "target has {} inputs, source alphabet has {nx}",
                target.inputs()
            ))
            .into());
        }
        if delta.is_nan() || delta < 0.0 {
            return Err(RegionError::BadDelta(delta));
        }
        Ok(Self { p0, obs, target, delta })
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.p0.clone(), self.obs.clone(), self.target.clone(), delta)
    }

    pub fn x_size(&self) -> usize {
        self.p0.len()
    }

    pub fn y_size(&self) -> usize {
        self.target.outputs()
    }

    fn check_channel(&self, q: &CondPmf) -> Result<()> {
        if q.inputs() != self.x_size() || q.outputs() != self.y_size() {
            return Err(ProbError::Shape(format!(
                "auxiliary channel must be {}x{}, got {}x{}",
                self.x_size(),
                self.y_size(),
                q.inputs(),
                q.outputs()
            ))
            .into());
        }
        Ok(())
    }

    fn triple(&self, q: &CondPmf) -> Result<JointPmf3> {
        self.check_channel(q)?;
        Ok(probkit::compose_markov(&self.p0, &self.obs, q)?)
    }
}

/// `I(X̂;Ŷ)` under `p0 · p(x̂|x) · q(ŷ|x̂)`.
pub fn finite_agent_rate(q: &CondPmf, query: &RegionQuery) -> Result<f64> {
    Ok(probkit::mutual_information(&query.triple(q)?.p_xhat_y()))
}

/// `I(X̂;Ŷ|X)` under `p0 · p(x̂|x) · q(ŷ|x̂)`.
pub fn per_agent_rate(q: &CondPmf, query: &RegionQuery) -> Result<f64> {
    Ok(probkit::conditional_mutual_information(&query.triple(q)?))
}

/// `q(ŷ|x) = Σ_x̂ p(x̂|x) q(ŷ|x̂)`.
pub fn induced_target(q: &CondPmf, query: &RegionQuery) -> Result<CondPmf> {
    query.check_channel(q)?;
    Ok(query.obs.then(q)?)
}

/// TV distance between the induced joint and the target joint.
pub fn achieved_tv(q: &CondPmf, query: &RegionQuery) -> Result<f64> {
    let induced = induced_target(q, query)?;
    Ok(probkit::tv_distance(
        &induced.joint_with(&query.p0)?,
        &query.target.joint_with(&query.p0)?,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Coordinate step of the coarse start grid.
    pub grid_step: f64,
    pub restarts: usize,
    pub seed: u64,
    /// The coarse grid is skipped when it would have more points than this.
    pub grid_cap: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            restarts: 20,
            seed: 0,
            grid_cap: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    /// `I(X̂;Ŷ|X)`.
    PerAgent,
    /// `I(X̂;Ŷ)`.
    FiniteAgent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint {
    pub delta: f64,
    /// Objective at `q_star`, in nats.
    pub rate: f64,
    pub q_star: CondPmf,
    pub induced: CondPmf,
    pub achieved_tv: f64,
    pub feasible: bool,
}

/// Caches the query-level quantities shared by every `Δ`: the minimal
/// achievable TV and the best constant channel.
#[derive(Debug, Clone)]
pub struct RegionSolver {
    query: RegionQuery,
    opts: SolverOptions,
    support: Vec<usize>,
    q_arg: CondPmf,
    delta_min: f64,
    q_const: CondPmf,
    const_tv: f64,
}

impl RegionSolver {
    pub fn new(query: &RegionQuery, opts: &SolverOptions) -> Result<Self> {
        for size in [query.x_size(), query.y_size()] {
            if size > MAX_SOLVER_ALPHABET {
                return Err(RegionError::TooLarge(size));
            }
        }
        let support: Vec<usize> = (0..query.x_size()).filter(|&x| query.p0.probs()[x] > 0.0).collect();
        let (m, k) = (query.x_size(), query.y_size());
        let mut solver = Self {
            query: query.clone(),
            opts: opts.clone(),
            support,
            q_arg: CondPmf::constant(m, &Pmf::uniform(k)?)?,
            delta_min: 1.0,
            q_const: CondPmf::constant(m, &Pmf::uniform(k)?)?,
            const_tv: 1.0,
        };
        if k == 1 {
            // A single action: every channel is the same and exact.
            solver.delta_min = achieved_tv(&solver.q_arg, query)?;
            solver.const_tv = solver.delta_min;
            return Ok(solver);
        }
        solver.q_arg = solver.min_tv_channel(ChannelMap::full(m, k))?;
        solver.delta_min = achieved_tv(&solver.q_arg, query)?;
        solver.q_const = solver.min_tv_channel(ChannelMap::constant(m, k))?;
        solver.const_tv = achieved_tv(&solver.q_const, query)?;
        Ok(solver)
    }

    pub fn query(&self) -> &RegionQuery {
        &self.query
    }

    /// Smallest TV reachable by any channel, and a channel reaching it.
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }

    pub fn q_arg(&self) -> &CondPmf {
        &self.q_arg
    }

    /// TV of the best constant channel, below which no zero-rate point exists.
    pub fn constant_tv(&self) -> f64 {
        self.const_tv
    }

    fn point(&self, delta: f64, q: CondPmf, rate: f64, feasible: bool) -> Result<RegionPoint> {
        Ok(RegionPoint {
            delta,
            rate,
            induced: induced_target(&q, &self.query)?,
            achieved_tv: achieved_tv(&q, &self.query)?,
            q_star: q,
            feasible,
        })
    }

    fn rate_of(&self, q: &CondPmf, kind: RateKind) -> Result<f64> {
        match kind {
            RateKind::PerAgent => per_agent_rate(q, &self.query),
            RateKind::FiniteAgent => finite_agent_rate(q, &self.query),
        }
    }

    /// Minimal rate of `kind` over channels within TV `delta` of the target.
    pub fn solve(&self, delta: f64, kind: RateKind) -> Result<RegionPoint> {
        if delta.is_nan() || delta < 0.0 {
            return Err(RegionError::BadDelta(delta));
        }
        let budget = delta + FEAS_TOL;
        if self.const_tv <= budget {
            // Constant outputs carry no information about the observation.
            return self.point(delta, self.q_const.clone(), 0.0, true);
        }
        if self.delta_min > budget {
            let rate = self.rate_of(&self.q_arg, kind)?;
            return self.point(delta, self.q_arg.clone(), rate, false);
        }

        let (m, k) = (self.query.x_size(), self.query.y_size());
        let map = ChannelMap::full(m, k);
        let objective = Objective::Info(self.info_objective(kind));
        let prog = self.program(map, Some(budget), objective.clone());

        let arg = flat(&self.q_arg);
        let uniform = vec![1.0 / k as f64; m * k];
        let tv_u = self.tv_flat(&uniform);
        let theta = if tv_u > self.delta_min {
            (0.5 * (budget - self.delta_min) / (tv_u - self.delta_min)).min(0.5)
        } else {
            0.5
        };
        let center: Vec<f64> = arg
            .iter()
            .zip(&uniform)
            .map(|(a, u)| (1.0 - theta) * a + theta * u)
            .collect();

        let mut starts = vec![center.clone()];
        let Objective::Info(info) = &objective else {
            unreachable!()
        };
        if let Some(best) = self.coarse_grid_start(info, budget) {
            starts.push(best);
        }
        for i in 0..self.opts.restarts {
            let q = self.random_channel(i as u64);
            if self.tv_flat(&q) <= budget {
                starts.push(q);
            }
        }
        let starts: Vec<Vec<f64>> = starts
            .into_iter()
            .enumerate()
            .map(|(i, q)| {
                if i == 0 {
                    q
                } else {
                    q.iter().zip(&center).map(|(a, c)| 0.5 * (a + c)).collect()
                }
            })
            .collect();

        let solved: Vec<Option<(f64, CondPmf)>> = starts
            .par_iter()
            .map(|q0| {
                let v0 = self.start_vector(&prog, q0, budget)?;
                let v = prog.solve(v0);
                let q = to_cond(&prog.map.eval(&v[..prog.map.nz]), m, k)?;
                if achieved_tv(&q, &self.query).ok()? > budget {
                    return None;
                }
                let rate = self.rate_of(&q, kind).ok()?;
                Some((rate, q))
            })
            .collect();
        let best = solved
            .into_iter()
            .flatten()
            .reduce(|a, b| if b.0 < a.0 { b } else { a });
        match best {
            Some((rate, q)) => self.point(delta, q, rate, true),
            None => {
                let rate = self.rate_of(&self.q_arg, kind)?;
                let feasible = self.delta_min <= budget;
                self.point(delta, self.q_arg.clone(), rate, feasible)
            }
        }
    }

    fn info_objective(&self, kind: RateKind) -> InfoObjective {
        let components = match kind {
            RateKind::PerAgent => self
                .support
                .iter()
                .map(|&x| (self.query.p0.probs()[x], self.query.obs.row(x).to_vec()))
                .collect(),
            RateKind::FiniteAgent => vec![(
                1.0,
                self.query
                    .obs
                    .push_forward(&self.query.p0)
                    .expect("shapes checked")
                    .probs()
                    .to_vec(),
            )],
        };
        InfoObjective { components }
    }

    /// Inequalities shared by every program: positive channel entries and
    /// `s_xy > |r_xy|` for the deviations `r` of the induced joint, plus
    /// `Σ p0 s < 2 budget` when a budget is given.
    fn program(&self, map: ChannelMap, budget: Option<f64>, objective: Objective) -> Program {
        let (m, k, nz) = (map.m, map.k, map.nz);
        let ns = self.support.len() * k;
        let mut ineqs: Vec<Affine> = map
            .base
            .iter()
            .zip(&map.terms)
            .map(|(&c, t)| Affine { c, a: t.clone() })
            .collect();
        for (si, &x) in self.support.iter().enumerate() {
            for y in 0..k {
                let mut c = -self.query.target.get(x, y);
                let mut coef = vec![0.0; nz];
                for a in 0..m {
                    let o = self.query.obs.get(x, a);
                    c += o * map.base[a * k + y];
                    for &(i, v) in &map.terms[a * k + y] {
                        coef[i] += o * v;
                    }
                }
                let s = nz + si * k + y;
                let lin: Vec<(usize, f64)> = coef
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect();
                // s - r > 0
                let mut minus = vec![(s, 1.0)];
                minus.extend(lin.iter().map(|&(i, v)| (i, -v)));
                ineqs.push(Affine { c: -c, a: minus });
                // s + r > 0
                let mut plus = vec![(s, 1.0)];
                plus.extend(lin.iter().copied());
                ineqs.push(Affine { c, a: plus });
            }
        }
        let weights: Vec<(usize, f64)> = self
            .support
            .iter()
            .enumerate()
            .flat_map(|(si, &x)| {
                let w = self.query.p0.probs()[x];
                (0..k).map(move |y| (nz + si * k + y, w))
            })
            .collect();
        if let Some(b) = budget {
            ineqs.push(Affine {
                c: 2.0 * b,
                a: weights.iter().map(|&(i, w)| (i, -w)).collect(),
            });
        }
        let objective = match objective {
            Objective::Linear(_) => {
                let mut c = vec![0.0; nz + ns];
                for (i, w) in weights {
                    c[i] = 0.5 * w;
                }
                Objective::Linear(c)
            }
            other => other,
        };
        Program {
            dim: nz + ns,
            map,
            ineqs,
            objective,
        }
    }

    fn start_vector(&self, prog: &Program, q: &[f64], budget: f64) -> Option<Vec<f64>> {
        let k = self.query.y_size();
        let tv = self.tv_flat(q);
        let pad = ((budget - tv) / k as f64).max(0.0);
        let mut v = prog.map.preimage(q);
        v.extend(self.deviations(q).iter().map(|r| r.abs() + pad));
        prog.strictly_feasible(&v).then_some(v)
    }

    fn min_tv_channel(&self, map: ChannelMap) -> Result<CondPmf> {
        let (m, k) = (map.m, map.k);
        let prog = self.program(map, None, Objective::Linear(Vec::new()));
        let uniform = vec![1.0 / k as f64; m * k];
        let mut v0 = prog.map.preimage(&uniform);
        v0.extend(self.deviations(&uniform).iter().map(|r| r.abs() + 1.0));
        let v = prog.solve(v0);
        let q = prog.map.eval(&v[..prog.map.nz]);
        Ok(to_cond(&q, m, k).ok_or_else(|| ProbError::Shape("solver left the simplex".into()))?)
    }

    /// `r_xy = Σ_a p(a|x) q(a, y) - p(y|x)` over the support of `p0`.
    fn deviations(&self, q: &[f64]) -> Vec<f64> {
        let (m, k) = (self.query.x_size(), self.query.y_size());
        let mut out = Vec::with_capacity(self.support.len() * k);
        for &x in &self.support {
            for y in 0..k {
                let mut r = -self.query.target.get(x, y);
                for a in 0..m {
                    r += self.query.obs.get(x, a) * q[a * k + y];
                }
                out.push(r);
            }
        }
        out
    }

    fn tv_flat(&self, q: &[f64]) -> f64 {
        let k = self.query.y_size();
        0.5 * self
            .deviations(q)
            .iter()
            .enumerate()
            .map(|(i, r)| self.query.p0.probs()[self.support[i / k]] * r.abs())
            .sum::<f64>()
    }

    /// Rows with i.i.d. `Exp(1)` entries, normalized (Dirichlet(1, ..., 1)).
    fn random_channel(&self, index: u64) -> Vec<f64> {
        let (m, k) = (self.query.x_size(), self.query.y_size());
        let key = StreamKey::new(self.opts.seed).derive(DOMAIN_SOLVER).derive(index);
        let mut q = Vec::with_capacity(m * k);
        for a in 0..m {
            let row: Vec<f64> = (0..k)
                .map(|y| -(1.0 - key.uniform((a * k + y) as u64)).ln() + 1e-12)
                .collect();
            let s: f64 = row.iter().sum();
            q.extend(row.iter().map(|e| e / s));
        }
        q
    }

    /// Best feasible point of the coarse simplex-lattice grid, if the grid
    /// is small enough to enumerate.
    fn coarse_grid_start(&self, info: &InfoObjective, budget: f64) -> Option<Vec<f64>> {
        let (m, k) = (self.query.x_size(), self.query.y_size());
        let steps = (1.0 / self.opts.grid_step).round().max(1.0) as usize;
        let rows = compositions(steps, k);
        let total = (rows.len() as u64).checked_pow(m as u32)?;
        if total > self.opts.grid_cap {
            return None;
        }
        let best = (0..total)
            .into_par_iter()
            .filter_map(|idx| {
                let mut q = Vec::with_capacity(m * k);
                let mut rest = idx;
                for _ in 0..m {
                    let row = &rows[(rest % rows.len() as u64) as usize];
                    rest /= rows.len() as u64;
                    q.extend(row.iter().map(|&c| c as f64 / steps as f64));
                }
                (self.tv_flat(&q) <= budget).then(|| (info.value(&q, m, k), idx, q))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
        Some(best.2)
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn flat(q: &CondPmf) -> Vec<f64> {
    q.data().to_vec()
}

fn to_cond(q: &[f64], m: usize, k: usize) -> Option<CondPmf> {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|a| q[a * k..(a + 1) * k].iter().map(|v| v.max(0.0)).collect())
        .collect();
    CondPmf::from_rows_normalized(rows, 1e-9).ok()
}

/// `(delta_min, q_arg)`: the smallest TV to the target any channel reaches.
pub fn min_achievable_delta(query: &RegionQuery, opts: &SolverOptions) -> Result<(f64, CondPmf)> {
    let s = RegionSolver::new(query, opts)?;
    Ok((s.delta_min, s.q_arg))
}

/// `min I(X̂;Ŷ|X)` over channels within `query.delta` of the target.
pub fn min_per_agent_rate(query: &RegionQuery, opts: &SolverOptions) -> Result<RegionPoint> {
    RegionSolver::new(query, opts)?.solve(query.delta, RateKind::PerAgent)
}

/// `min I(X̂;Ŷ)` over channels within `query.delta` of the target.
pub fn min_finite_agent_rate(query: &RegionQuery, opts: &SolverOptions) -> Result<RegionPoint> {
    RegionSolver::new(query, opts)?.solve(query.delta, RateKind::FiniteAgent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub delta: f64,
    pub per_agent: RegionPoint,
    pub finite: RegionPoint,
}

/// Both minimal rates at every `Δ` of `deltas`, in the given order.
pub fn rate_delta_curve(query: &RegionQuery, deltas: &[f64], opts: &SolverOptions) -> Result<Vec<CurvePoint>> {
    let solver = RegionSolver::new(query, opts)?;
    deltas
        .iter()
        .map(|&delta| {
            Ok(CurvePoint {
                delta,
                per_agent: solver.solve(delta, RateKind::PerAgent)?,
                finite: solver.solve(delta, RateKind::FiniteAgent)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(p: f64) -> CondPmf {
        CondPmf::binary_symmetric(p).unwrap()
    }

    fn query(obs: f64, target: CondPmf, delta: f64) -> RegionQuery {
        RegionQuery::new(Pmf::uniform(2).unwrap(), bsc(obs), target, delta).unwrap()
    }

    #[test]
    fn rate_examples() {
        let q = query(0.0, bsc(0.2), 0.0);
        let constant = CondPmf::constant(2, &Pmf::new(vec![0.3, 0.7]).unwrap()).unwrap();
        assert!(finite_agent_rate(&constant, &q).unwrap().abs() < 1e-15);
        assert!(per_agent_rate(&constant, &q).unwrap().abs() < 1e-15);
        let id = CondPmf::identity(2).unwrap();
        assert!((finite_agent_rate(&id, &q).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(per_agent_rate(&bsc(0.3), &q).unwrap().abs() < 1e-15);

        let noisy = query(0.1, bsc(0.2), 0.0);
        let mi = finite_agent_rate(&bsc(0.1), &noisy).unwrap();
        // BSC(0.1) with uniform input: ln 2 - h(0.1)
        assert!((mi - 0.3680642071684971).abs() < 1e-12);
        let induced = induced_target(&bsc(0.1), &noisy).unwrap();
        assert!((induced.get(0, 1) - 0.18).abs() < 1e-15);
    }

    #[test]
    fn noiseless_observation_reaches_any_target() {
        let target = CondPmf::from_rows(vec![vec![0.8, 0.2], vec![0.35, 0.65]]).unwrap();
        let q = query(0.0, target, 0.0);
        let (dmin, _) = min_achievable_delta(&q, &SolverOptions::default()).unwrap();
        assert!(dmin < FEAS_TOL, "{dmin}");
        let p = min_per_agent_rate(&q, &SolverOptions::default()).unwrap();
        assert!(p.feasible);
        assert!(p.rate < 1e-8, "{}", p.rate);
    }

    #[test]
    fn achievable_target_has_zero_delta_min() {
        let q = query(0.1, bsc(0.18), 0.0);
        let (dmin, arg) = min_achievable_delta(&q, &SolverOptions::default()).unwrap();
        assert!(dmin < FEAS_TOL);
        assert!((arg.get(0, 1) - 0.1).abs() < 1e-6, "{arg:?}");
    }

    #[test]
    fn unreachable_target_is_infeasible_below_delta_min() {
        // Observation flip 0.4 cannot reproduce a copy of X.
        let q = query(0.4, CondPmf::identity(2).unwrap(), 0.0);
        let s = RegionSolver::new(&q, &SolverOptions::default()).unwrap();
        // Best channel is the identity: induced flip 0.4, TV 0.4.
        assert!((s.delta_min() - 0.4).abs() < 1e-8, "{}", s.delta_min());
        let p = s.solve(0.1, RateKind::PerAgent).unwrap();
        assert!(!p.feasible);
        let p = s.solve(0.45, RateKind::FiniteAgent).unwrap();
        assert!(p.feasible);
        assert!(p.achieved_tv <= 0.45 + FEAS_TOL);
    }

    #[test]
    fn full_budget_gives_zero_rate_exactly() {
        let q = query(0.2, bsc(0.05), 1.0);
        let a = min_per_agent_rate(&q, &SolverOptions::default()).unwrap();
        let b = min_finite_agent_rate(&q, &SolverOptions::default()).unwrap();
        assert_eq!(a.rate, 0.0);
        assert_eq!(b.rate, 0.0);
        assert!(a.feasible && b.feasible);
    }

    #[test]
    fn curve_is_non_increasing_and_consistent() {
        let q = query(0.15, bsc(0.25), 0.0);
        let deltas = [0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0];
        let curve = rate_delta_curve(&q, &deltas, &SolverOptions::default()).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].per_agent.rate <= w[0].per_agent.rate + 1e-9);
            assert!(w[1].finite.rate <= w[0].finite.rate + 1e-9);
        }
        for c in &curve {
            for p in [&c.per_agent, &c.finite] {
                assert!(p.feasible);
                assert!(p.achieved_tv <= c.delta + FEAS_TOL);
                assert!(p.rate >= 0.0);
            }
            let qd = q.with_delta(c.delta).unwrap();
            assert!((per_agent_rate(&c.per_agent.q_star, &qd).unwrap() - c.per_agent.rate).abs() < 1e-10);
            assert!((finite_agent_rate(&c.finite.q_star, &qd).unwrap() - c.finite.rate).abs() < 1e-10);
        }
        assert_eq!(curve.last().unwrap().per_agent.rate, 0.0);
    }

    #[test]
    fn larger_alphabets_solve() {
        let p0 = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let obs = CondPmf::from_rows(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.7, 0.2], vec![0.05, 0.15, 0.8]]).unwrap();
        let target = CondPmf::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let q = RegionQuery::new(p0, obs, target, 0.1).unwrap();
        let a = min_per_agent_rate(&q, &SolverOptions::default()).unwrap();
        let b = min_finite_agent_rate(&q, &SolverOptions::default()).unwrap();
        assert!(a.feasible && b.feasible);
        assert!(a.rate <= b.rate + 1e-9);
    }
}
