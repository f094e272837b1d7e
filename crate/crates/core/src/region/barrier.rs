//! Log-barrier Newton method for the small convex programs behind the
//! region queries.
//!
//! Decision vector `v = (z, s)`: `z` are the free entries of a channel
//! `q` (an affine image, so row sums hold by construction) and `s` are
//! epigraph variables for the absolute deviations in the TV constraint.
//! All inequalities are affine, `c_i + a_i · v > 0`.

use nalgebra::{DMatrix, DVector};

/// An affine map from `z` to the flattened `m x k` channel `q`.
#[derive(Debug, Clone)]
pub(crate) struct ChannelMap {
    pub m: usize,
    pub k: usize,
    pub nz: usize,
    pub base: Vec<f64>,
    /// `terms[e]`: sparse coefficients of entry `e` of `q` in `z`.
    pub terms: Vec<Vec<(usize, f64)>>,
}

impl ChannelMap {
    /// Every row free: the last entry of each row is one minus the rest.
    pub fn full(m: usize, k: usize) -> Self {
        Self::build(m, k, |a| a * (k - 1), m * (k - 1))
    }

    /// All rows equal to one shared pmf.
    pub fn constant(m: usize, k: usize) -> Self {
        Self::build(m, k, |_| 0, k - 1)
    }

    fn build(m: usize, k: usize, offset: impl Fn(usize) -> usize, nz: usize) -> Self {
        let mut base = vec![0.0; m * k];
        let mut terms = vec![Vec::new(); m * k];
        for a in 0..m {
            let o = offset(a);
            for j in 0..k - 1 {
                terms[a * k + j].push((o + j, 1.0));
                terms[a * k + k - 1].push((o + j, -1.0));
            }
            base[a * k + k - 1] = 1.0;
        }
        Self { m, k, nz, base, terms }
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.terms)
            .map(|(b, t)| b + t.iter().map(|&(i, c)| c * z[i]).sum::<f64>())
            .collect()
    }

    /// Some `z` mapping exactly onto `q` (which must lie in the image).
    pub fn preimage(&self, q: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.nz];
        for (e, t) in self.terms.iter().enumerate() {
            if let ([(i, c)], 0.0) = (t.as_slice(), self.base[e]) {
                z[*i] = q[e] / c;
            }
        }
        z
    }
}

/// `c + a · v`.
#[derive(Debug, Clone)]
pub(crate) struct Affine {
    pub c: f64,
    pub a: Vec<(usize, f64)>,
}

impl Affine {
    fn eval(&self, v: &[f64]) -> f64 {
        self.c + self.a.iter().map(|&(i, x)| x * v[i]).sum::<f64>()
    }
}

/// Weighted sum of mutual informations `Σ_c w_c I(π_c, q)`.
#[derive(Debug, Clone)]
pub(crate) struct InfoObjective {
    pub components: Vec<(f64, Vec<f64>)>,
}

impl InfoObjective {
    pub fn value(&self, q: &[f64], m: usize, k: usize) -> f64 {
        let mut total = 0.0;
        for (w, pi) in &self.components {
            let rho = mix(pi, q, m, k);
            let mut val = 0.0;
            for a in 0..m {
                if pi[a] == 0.0 {
                    continue;
                }
                for y in 0..k {
                    let qa = q[a * k + y];
                    if qa > 0.0 {
                        val += pi[a] * qa * (qa / rho[y]).ln();
                    }
                }
            }
            total += w * val;
        }
        total
    }

    fn gradient(&self, q: &[f64], m: usize, k: usize) -> Vec<f64> {
        let mut g = vec![0.0; m * k];
        for (w, pi) in &self.components {
            let rho = mix(pi, q, m, k);
            for a in 0..m {
                for y in 0..k {
                    g[a * k + y] += w * pi[a] * (q[a * k + y] / rho[y]).ln();
                }
            }
        }
        g
    }

    fn hessian(&self, q: &[f64], m: usize, k: usize) -> DMatrix<f64> {
        let mk = m * k;
        let mut h = DMatrix::zeros(mk, mk);
        for (w, pi) in &self.components {
            let rho = mix(pi, q, m, k);
            for a in 0..m {
                if pi[a] == 0.0 {
                    continue;
                }
                for y in 0..k {
                    let i = a * k + y;
                    h[(i, i)] += w * pi[a] / q[i];
                    for b in 0..m {
                        h[(i, b * k + y)] -= w * pi[a] * pi[b] / rho[y];
                    }
                }
            }
        }
        h
    }
}

fn mix(pi: &[f64], q: &[f64], m: usize, k: usize) -> Vec<f64> {
    let mut rho = vec![0.0; k];
    for a in 0..m {
        for y in 0..k {
            rho[y] += pi[a] * q[a * k + y];
        }
    }
    rho
}

#[derive(Debug, Clone)]
pub(crate) enum Objective {
    /// `c · v`.
    Linear(Vec<f64>),
    /// Information objective of the channel `q(z)`.
    Info(InfoObjective),
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub dim: usize,
    pub map: ChannelMap,
    pub ineqs: Vec<Affine>,
    pub objective: Objective,
}

/// Duality-gap target `#inequalities / t`.
const GAP_TOL: f64 = 1e-11;
const MAX_NEWTON: usize = 200;

impl Program {
    pub fn strictly_feasible(&self, v: &[f64]) -> bool {
        self.ineqs.iter().all(|g| g.eval(v) > 0.0)
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        match &self.objective {
            Objective::Linear(c) => c.iter().zip(v).map(|(a, b)| a * b).sum(),
            Objective::Info(f) => f.value(&self.map.eval(&v[..self.map.nz]), self.map.m, self.map.k),
        }
    }

    fn phi(&self, v: &[f64], t: f64) -> Option<f64> {
        let mut barrier = 0.0;
        for g in &self.ineqs {
            let x = g.eval(v);
            if x <= 0.0 {
                return None;
            }
            barrier -= x.ln();
        }
        Some(t * self.objective_value(v) + barrier)
    }

    fn grad_hess(&self, v: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        match &self.objective {
            Objective::Linear(c) => {
                for (i, ci) in c.iter().enumerate() {
                    grad[i] += t * ci;
                }
            }
            Objective::Info(f) => {
                let (m, k, nz) = (self.map.m, self.map.k, self.map.nz);
                let q = self.map.eval(&v[..nz]);
                let gq = f.gradient(&q, m, k);
                let hq = f.hessian(&q, m, k);
                let mut jac: DMatrix<f64> = DMatrix::zeros(m * k, nz);
                for (e, terms) in self.map.terms.iter().enumerate() {
                    for &(i, c) in terms {
                        jac[(e, i)] += c;
                    }
                }
                let gz: DVector<f64> = jac.transpose() * DVector::from_vec(gq);
                let hz: DMatrix<f64> = jac.transpose() * hq * &jac;
                for i in 0..nz {
                    grad[i] += t * gz[i];
                    for j in 0..nz {
                        hess[(i, j)] += t * hz[(i, j)];
                    }
                }
            }
        }
        for g in &self.ineqs {
            let x = g.eval(v);
            for &(i, ai) in &g.a {
                grad[i] -= ai / x;
                for &(j, aj) in &g.a {
                    hess[(i, j)] += ai * aj / (x * x);
                }
            }
        }
        (grad, hess)
    }

    fn newton_step(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
        let rhs = -grad;
        if let Some(ch) = hess.clone().cholesky() {
            return Some(ch.solve(&rhs));
        }
        hess.lu().solve(&rhs)
    }

    /// Minimizes the objective from a strictly feasible `v0`.
    pub fn solve(&self, v0: Vec<f64>) -> Vec<f64> {
        debug_assert!(self.strictly_feasible(&v0));
        let mut v = v0;
        let mut t = 1.0;
        let m = self.ineqs.len().max(1) as f64;
        loop {
            self.center(&mut v, t);
            if m / t < GAP_TOL {
                return v;
            }
            t *= 10.0;
        }
    }

    fn center(&self, v: &mut Vec<f64>, t: f64) {
        for _ in 0..MAX_NEWTON {
            let (grad, hess) = self.grad_hess(v, t);
            let Some(step) = Self::newton_step(&grad, hess) else {
                return;
            };
            let slope = grad.dot(&step);
            if slope.is_nan() || slope >= 0.0 || -slope / 2.0 <= 1e-12 {
                return;
            }
            let Some(phi0) = self.phi(v, t) else {
                return;
            };
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-18 {
                let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect();
                if let Some(phi) = self.phi(&trial, t) {
                    if phi <= phi0 + 0.25 * alpha * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(next) => *v = next,
                None => return,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_preserve_row_sums() {
        let map = ChannelMap::full(3, 4);
        let z: Vec<f64> = (0..map.nz).map(|i| 0.05 * i as f64).collect();
        let q = map.eval(&z);
        for a in 0..3 {
            let s: f64 = q[a * 4..(a + 1) * 4].iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(map.preimage(&q), z);
        let c = ChannelMap::constant(3, 2);
        let q = c.eval(&[0.3]);
        assert_eq!(q, vec![0.3, 0.7, 0.3, 0.7, 0.3, 0.7]);
    }

    #[test]
    fn info_gradient_matches_finite_differences() {
        let f = InfoObjective {
            components: vec![(0.4, vec![0.3, 0.7]), (0.6, vec![0.9, 0.1])],
        };
        let q = vec![0.2, 0.5, 0.3, 0.6, 0.1, 0.3];
        let g = f.gradient(&q, 2, 3);
        let h = f.hessian(&q, 2, 3);
        for i in 0..6 {
            let mut up = q.clone();
            let mut dn = q.clone();
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            let fd = (f.value(&up, 2, 3) - f.value(&dn, 2, 3)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-7, "grad {i}: {fd} vs {}", g[i]);
            let gu = f.gradient(&up, 2, 3);
            let gd = f.gradient(&dn, 2, 3);
            for j in 0..6 {
                let fd = (gu[j] - gd[j]) / 2e-6;
                assert!((fd - h[(j, i)]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn solves_a_tiny_lp() {
        // min v0 + v1 subject to v0 > 0.2, v1 > 0.3, 1 - v0 - v1 > 0
        let prog = Program {
            dim: 2,
            map: ChannelMap {
                m: 0,
                k: 0,
                nz: 0,
                base: vec![],
                terms: vec![],
            },
            ineqs: vec![
                Affine {
                    c: -0.2,
                    a: vec![(0, 1.0)],
                },
                Affine {
                    c: -0.3,
                    a: vec![(1, 1.0)],
                },
                Affine {
                    c: 1.0,
                    a: vec![(0, -1.0), (1, -1.0)],
                },
            ],
            objective: Objective::Linear(vec![1.0, 1.0]),
        };
        let v = prog.solve(vec![0.3, 0.4]);
        assert!((v[0] + v[1] - 0.5).abs() < 1e-9);
    }
}
