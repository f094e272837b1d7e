use super::{oracle, timed, CriterionReport, Failures, Tolerances};
use coordsim::region::{self, RegionQuery, SolverOptions, FEAS_TOL};
use coordsim::rng::StreamKey;
use coordsim::{CondPmf, Pmf};
use rayon::prelude::*;

pub const GRID_STEPS: usize = 1000;
pub const QUERY_DELTAS: [f64; 4] = [0.0, 0.05, 0.1, 0.3];

type Binary = ([f64; 2], [[f64; 2]; 2], [[f64; 2]; 2]);

/// Random binary `(p0, observation, target)` number `index`.
pub fn random_binary_query(index: u64) -> Binary {
    let key = StreamKey::new(0xC7).derive(index);
    let u = |i| key.uniform(i);
    (
        [u(0), 1.0 - u(0)],
        [[1.0 - u(1), u(1)], [u(2), 1.0 - u(2)]],
        [[1.0 - u(3), u(3)], [u(4), 1.0 - u(4)]],
    )
}

fn to_query((p0, obs, target): &Binary, delta: f64) -> RegionQuery {
    RegionQuery::new(
        Pmf::new(p0.to_vec()).expect("pmf"),
        CondPmf::from_rows(obs.iter().map(|r| r.to_vec()).collect()).expect("channel"),
        CondPmf::from_rows(target.iter().map(|r| r.to_vec()).collect()).expect("channel"),
        delta,
    )
    .expect("valid query")
}

struct QueryCheck {
    fails: Failures,
    checks: u64,
    worst: f64,
    grid_blind: u64,
}

fn check_query(index: u64, tol: &Tolerances, opts: &SolverOptions) -> QueryCheck {
    let b = random_binary_query(index);
    let (p0, obs, target) = &b;
    let table = oracle::binary_region_table(p0, obs, target, GRID_STEPS);
    let mut out = QueryCheck {
        fails: Failures::default(),
        checks: 0,
        worst: 0.0,
        grid_blind: 0,
    };
    for delta in QUERY_DELTAS {
        let query = to_query(&b, delta);
        let per = region::min_per_agent_rate(&query, opts).expect("binary query");
        let fin = region::min_finite_agent_rate(&query, opts).expect("binary query");
        let grid = oracle::binary_region_grid(&table, delta, FEAS_TOL);
        for (label, point, pick) in [("per-agent", &per, 0usize), ("finite", &fin, 1)] {
            out.checks += 1;
            let (a, bb) = (point.q_star.get(0, 1), point.q_star.get(1, 1));
            let (cmi, mi, tv) = oracle::binary_region_point(p0, obs, target, a, bb);
            let at_q = [cmi, mi][pick];
            if point.feasible && (tv > delta + FEAS_TOL || (at_q - point.rate).abs() > 1e-9) {
                out.fails.push(|| {
                    format!(
                        "query {index} delta {delta} {label}: witness has tv {tv}, rate {at_q} vs reported {}",
                        point.rate
                    )
                });
                continue;
            }
            match (grid, point.feasible) {
                (Some(g), true) => {
                    let want = [g.0, g.1][pick];
                    let dev = (point.rate - want).abs();
                    out.worst = out.worst.max(dev);
                    if dev > tol.region_rate_tol {
                        out.fails.push(|| {
                            format!(
                                "query {index} delta {delta} {label}: solver {:.6e} vs grid {want:.6e}",
                                point.rate
                            )
                        });
                    }
                }
                (Some(_), false) => out
                    .fails
                    .push(|| format!("query {index} delta {delta} {label}: grid feasible, solver not")),
                (None, true) => out.grid_blind += 1,
                (None, false) => {}
            }
        }
    }

    let mut deltas: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    deltas.extend([1.0, 1.5, 2.0]);
    let curve = region::rate_delta_curve(&to_query(&b, 0.0), &deltas, opts).expect("binary query");
    for w in curve.windows(2) {
        for (prev, next, label) in [
            (&w[0].per_agent, &w[1].per_agent, "per-agent"),
            (&w[0].finite, &w[1].finite, "finite"),
        ] {
            out.checks += 1;
            let worse = (prev.feasible && !next.feasible)
                || (prev.feasible && next.feasible && next.rate > prev.rate + tol.monotone_tol);
            if worse {
                out.fails.push(|| {
                    format!(
                        "query {index} {label} curve rises from {} at {} to {} at {}",
                        prev.rate, w[0].delta, next.rate, w[1].delta
                    )
                });
            }
        }
    }
    for p in curve.iter().filter(|p| p.delta >= 1.0) {
        out.checks += 1;
        if !(p.per_agent.rate == 0.0 && p.finite.rate == 0.0 && p.per_agent.feasible && p.finite.feasible) {
            out.fails.push(|| {
                format!(
                    "query {index} at delta {}: rates {} and {}",
                    p.delta, p.per_agent.rate, p.finite.rate
                )
            });
        }
    }
    out
}

/// Region solver against an exhaustive grid over binary channels.
pub fn criterion_7(tol: &Tolerances) -> CriterionReport {
    timed(7, "region solver vs exhaustive grid", 300.0, tol, || {
        let opts = SolverOptions::default();
        let results: Vec<QueryCheck> = (0..20u64).into_par_iter().map(|i| check_query(i, tol, &opts)).collect();
        let checks = results.iter().map(|r| r.checks).sum();
        let worst = results.iter().map(|r| r.worst).fold(0.0, f64::max);
        let blind: u64 = results.iter().map(|r| r.grid_blind).sum();
        let fails = results
            .into_iter()
            .fold(Failures::default(), |acc, r| acc.merge(r.fails));
        let (ok, detail) = fails.summary(checks);
        (
            ok,
            format!("{detail}; largest |solver - grid| {worst:.3e} nats; {blind} points feasible only off the grid"),
        )
    })
}

/// Random instance with an invertible observation channel and a target
/// realized exactly by the channel `q0`.
pub fn achievable_instance(index: u64) -> (RegionQuery, CondPmf) {
    let key = StreamKey::new(0xC8).derive(index);
    let nx = 2 + (key.word(0) % 2) as usize;
    let ny = 2 + (key.word(1) % 2) as usize;
    // Full support: with a null input symbol a constant channel could
    // match the target too.
    let p0 = Pmf::new(oracle::random_positive_pmf(key.derive(10), nx)).expect("pmf");
    // Diagonal weight keeps the observation channel well conditioned.
    let obs_rows: Vec<Vec<f64>> = oracle::random_channel(key.derive(11), nx, nx)
        .into_iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, &v)| 0.5 * v + if a == b { 0.5 } else { 0.0 })
                .collect()
        })
        .collect();
    let obs = CondPmf::from_rows_normalized(obs_rows, 1e-12).expect("channel");
    let q0 = CondPmf::from_rows(oracle::random_channel(key.derive(12), nx, ny)).expect("channel");
    let target = obs.then(&q0).expect("shapes agree");
    (RegionQuery::new(p0, obs, target, 0.0).expect("valid query"), q0)
}

/// At `Δ = 0` with an exactly achievable target, the minimized rates equal
/// the rates of the exact-match channel.
pub fn criterion_8(tol: &Tolerances) -> CriterionReport {
    timed(8, "zero-delta rates equal the exact-match rates", 60.0, tol, || {
        let opts = SolverOptions::default();
        let results: Vec<(Failures, f64)> = (0..40u64)
            .into_par_iter()
            .map(|i| {
                let mut fails = Failures::default();
                let (query, q0) = achievable_instance(i);
                let solver = region::RegionSolver::new(&query, &opts).expect("small query");
                if solver.delta_min() > FEAS_TOL {
                    fails.push(|| format!("instance {i}: delta_min {}", solver.delta_min()));
                }
                let per = region::min_per_agent_rate(&query, &opts).expect("small query");
                let fin = region::min_finite_agent_rate(&query, &opts).expect("small query");
                let want_per = region::per_agent_rate(&q0, &query).expect("shapes agree");
                let want_fin = region::finite_agent_rate(&q0, &query).expect("shapes agree");
                let dev = (per.rate - want_per).abs().max((fin.rate - want_fin).abs());
                if !(per.feasible && fin.feasible) || dev > tol.delta_zero_tol {
                    fails.push(|| {
                        format!(
                            "instance {i}: per-agent {} vs {want_per}, finite {} vs {want_fin}",
                            per.rate, fin.rate
                        )
                    });
                }
                (fails, dev)
            })
            .collect();
        let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
        let fails = results.into_iter().fold(Failures::default(), |acc, r| acc.merge(r.0));
        let (ok, detail) = fails.summary(40);
        (ok, format!("{detail}; largest deviation {worst:.3e} nats"))
    })
}
