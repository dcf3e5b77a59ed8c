//! Penalized backfitting.
//!
//! Blocks updated once per cycle, each by exact (penalized) least squares:
//!
//! * the parametric block: intercept, every linear component, and one free
//!   coefficient `θ` per interaction whose column is the product of the two
//!   partner factors (centered covariate for a linear partner, current fit
//!   for a spline partner);
//! * one block per spline, fit to its partial residual with the interaction
//!   multipliers `1 + Σ θ·partner` folded into the design and the training
//!   mean of the component pinned to zero.
//!
//! Each step minimizes `Σ w (z − η)² + λ·w̄·Σ gᵀΩg` (with `w̄` the mean weight,
//! 1 for the identity link) over its block, so the penalized objective never
//! increases.

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::glm::LinkKind;
use crate::linalg::{dot, solve_general, solve_spd, Mat};

use super::spline::KnotGeometry;

pub(crate) enum Kind {
    Linear {
        center: f64,
        degenerate: bool,
    },
    Spline {
        geometry: KnotGeometry,
        basis: Mat,
        /// Column means of `basis`; `cᵀg` is the component's training mean.
        constraint: Vec<f64>,
    },
}

pub(crate) struct Problem<'a> {
    pub features: &'a [FeatureVector],
    pub y: &'a [f64],
    pub kinds: Vec<Kind>,
    pub pairs: Vec<(usize, usize)>,
    pub lambda: f64,
    pub tolerance: f64,
    pub max_cycles: usize,
    pub link: LinkKind,
}

#[derive(Debug, Clone)]
pub(crate) struct State {
    pub intercept: f64,
    pub linear: Vec<f64>,
    pub spline: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

pub(crate) struct Outcome {
    pub state: State,
    pub cycles: usize,
    pub rss_trajectory: Vec<f64>,
    pub objective_trajectory: Vec<f64>,
}

const MAX_OUTER: usize = 100;

impl Problem<'_> {
    fn n(&self) -> usize {
        self.features.len()
    }

    pub fn initial_state(&self) -> State {
        let mean = self.y.iter().sum::<f64>() / self.n() as f64;
        State {
            intercept: self.link.link(mean),
            linear: vec![0.0; self.kinds.len()],
            spline: self
                .kinds
                .iter()
                .map(|k| match k {
                    Kind::Spline { geometry, .. } => vec![0.0; geometry.len()],
                    Kind::Linear { .. } => Vec::new(),
                })
                .collect(),
            theta: vec![0.0; self.pairs.len()],
        }
    }

    /// Current value of component `j` at every training row.
    fn component(&self, state: &State, j: usize) -> Vec<f64> {
        match &self.kinds[j] {
            Kind::Linear { center, .. } => self
                .features
                .iter()
                .map(|f| state.linear[j] * (f[j] - center))
                .collect(),
            Kind::Spline { basis, .. } => basis.mul_vec(&state.spline[j]),
        }
    }

    /// Factor that feature `j` contributes to an interaction column.
    fn partner_factor(&self, j: usize, components: &[Vec<f64>]) -> Vec<f64> {
        match &self.kinds[j] {
            Kind::Linear { center, .. } => self.features.iter().map(|f| f[j] - center).collect(),
            Kind::Spline { .. } => components[j].clone(),
        }
    }

    fn eta(&self, state: &State, components: &[Vec<f64>]) -> Vec<f64> {
        let mut eta: Vec<f64> = vec![state.intercept; self.n()];
        for c in components {
            eta.iter_mut().zip(c).for_each(|(e, v)| *e += v);
        }
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            let fa = self.partner_factor(a, components);
            let fb = self.partner_factor(b, components);
            for i in 0..self.n() {
                eta[i] += state.theta[p] * fa[i] * fb[i];
            }
        }
        eta
    }

    fn response_rss(&self, eta: &[f64]) -> f64 {
        eta.iter()
            .zip(self.y)
            .map(|(e, y)| (y - self.link.inverse(*e)).powi(2))
            .sum()
    }

    pub fn fit(&self, mut state: State) -> Result<Outcome> {
        let n = self.n();
        let mut rss_trajectory = Vec::new();
        let mut objective_trajectory = Vec::new();
        let mut cycles = 0;
        match self.link {
            LinkKind::Identity => {
                let w = vec![1.0; n];
                cycles = self.inner(&mut state, self.y, &w, &mut rss_trajectory, &mut objective_trajectory)?;
            }
            LinkKind::Log => {
                let mut converged = false;
                for _ in 0..MAX_OUTER {
                    let comps: Vec<Vec<f64>> =
                        (0..self.kinds.len()).map(|j| self.component(&state, j)).collect();
                    let eta = self.eta(&state, &comps);
                    let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
                    if mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                        return Err(Error::Convergence {
                            iterations: cycles,
                            detail: "fitted mean left (0, ∞) under the log link".into(),
                            trajectory: rss_trajectory,
                        });
                    }
                    let z: Vec<f64> = (0..n).map(|i| eta[i] + (self.y[i] - mu[i]) / mu[i]).collect();
                    let scale = mu.iter().map(|m| m * m).sum::<f64>() / n as f64;
                    let w: Vec<f64> = mu.iter().map(|m| m * m / scale).collect();
                    cycles += self.inner(&mut state, &z, &w, &mut rss_trajectory, &mut objective_trajectory)?;
                    let comps: Vec<Vec<f64>> =
                        (0..self.kinds.len()).map(|j| self.component(&state, j)).collect();
                    let next = self.eta(&state, &comps);
                    let change = next
                        .iter()
                        .zip(&eta)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if change < self.tolerance {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::Convergence {
                        iterations: cycles,
                        detail: "local scoring did not settle".into(),
                        trajectory: rss_trajectory,
                    });
                }
            }
        }
        Ok(Outcome {
            state,
            cycles,
            rss_trajectory,
            objective_trajectory,
        })
    }

    /// Backfitting cycles on working response `z` with weights `w`.
    fn inner(
        &self,
        state: &mut State,
        z: &[f64],
        w: &[f64],
        trajectory: &mut Vec<f64>,
        objective: &mut Vec<f64>,
    ) -> Result<usize> {
        let n = self.n();
        let p = self.kinds.len();
        let penalty_weight = self.lambda * w.iter().sum::<f64>() / n as f64;
        let mut comps: Vec<Vec<f64>> = (0..p).map(|j| self.component(state, j)).collect();

        for cycle in 1..=self.max_cycles {
            let mut max_change: f64 = 0.0;

            // parametric block
            let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
            let mut lin_idx = Vec::new();
            for (j, kind) in self.kinds.iter().enumerate() {
                if let Kind::Linear { center, degenerate: false } = kind {
                    cols.push(self.features.iter().map(|f| f[j] - center).collect());
                    lin_idx.push(j);
                }
            }
            for &(a, b) in &self.pairs {
                let fa = self.partner_factor(a, &comps);
                let fb = self.partner_factor(b, &comps);
                cols.push(fa.iter().zip(&fb).map(|(x, y)| x * y).collect());
            }
            let mut target = z.to_vec();
            for (j, kind) in self.kinds.iter().enumerate() {
                if matches!(kind, Kind::Spline { .. }) {
                    target.iter_mut().zip(&comps[j]).for_each(|(t, c)| *t -= c);
                }
            }
            let before: Vec<f64> = parametric_fit(state, &cols, &lin_idx);
            let coef = weighted_ls(&cols, &target, w);
            state.intercept = coef[0];
            for (k, &j) in lin_idx.iter().enumerate() {
                state.linear[j] = coef[1 + k];
                comps[j] = self.component(state, j);
            }
            for (q, t) in state.theta.iter_mut().enumerate() {
                *t = coef[1 + lin_idx.len() + q];
            }
            let after = parametric_fit(state, &cols, &lin_idx);
            max_change = max_change.max(max_abs_diff(&before, &after));

            // spline blocks
            for j in 0..p {
                let Kind::Spline { geometry, basis, constraint } = &self.kinds[j] else {
                    continue;
                };
                let mut multiplier = vec![1.0; n];
                for (q, &(a, b)) in self.pairs.iter().enumerate() {
                    let partner = if a == j {
                        b
                    } else if b == j {
                        a
                    } else {
                        continue;
                    };
                    let pf = self.partner_factor(partner, &comps);
                    for i in 0..n {
                        multiplier[i] += state.theta[q] * pf[i];
                    }
                }
                let eta = self.eta(state, &comps);
                let partial: Vec<f64> = (0..n)
                    .map(|i| z[i] - eta[i] + comps[j][i] * multiplier[i])
                    .collect();
                let values = penalized_constrained_ls(
                    basis,
                    &multiplier,
                    &partial,
                    w,
                    geometry.penalty(),
                    penalty_weight,
                    constraint,
                );
                state.spline[j] = values;
                let updated = self.component(state, j);
                max_change = max_change.max(max_abs_diff(&comps[j], &updated));
                comps[j] = updated;
            }

            let eta = self.eta(state, &comps);
            trajectory.push(self.response_rss(&eta));
            let mut penalized: f64 = (0..n).map(|i| w[i] * (z[i] - eta[i]).powi(2)).sum();
            for (j, kind) in self.kinds.iter().enumerate() {
                if let Kind::Spline { geometry, .. } = kind {
                    let g = &state.spline[j];
                    penalized += penalty_weight * dot(g, &geometry.penalty().mul_vec(g));
                }
            }
            objective.push(penalized);
            if !max_change.is_finite() {
                return Err(Error::Convergence {
                    iterations: cycle,
                    detail: "backfitting produced non-finite components".into(),
                    trajectory: trajectory.clone(),
                });
            }
            if max_change < self.tolerance {
                return Ok(cycle);
            }
        }
        Err(Error::Convergence {
            iterations: self.max_cycles,
            detail: "maximum component change stayed above tolerance".into(),
            trajectory: trajectory.clone(),
        })
    }
}

fn parametric_fit(state: &State, cols: &[Vec<f64>], lin_idx: &[usize]) -> Vec<f64> {
    let n = cols[0].len();
    let mut coef = vec![state.intercept];
    coef.extend(lin_idx.iter().map(|&j| state.linear[j]));
    coef.extend(&state.theta);
    (0..n)
        .map(|i| cols.iter().zip(&coef).map(|(c, b)| c[i] * b).sum())
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Weighted least squares over column vectors; near-singular systems get a
/// vanishing ridge on the non-intercept diagonal.
fn weighted_ls(cols: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let x = Mat::from_rows(&rows);
    let (mut gram, rhs) = x.weighted_normal_equations(y, Some(w));
    if let Ok(beta) = solve_spd(&gram, &rhs) {
        return beta;
    }
    let scale = (0..gram.cols).map(|j| gram.get(j, j)).fold(0.0, f64::max);
    for j in 1..gram.cols {
        gram.add_to(j, j, 1e-10 * scale.max(1.0));
    }
    solve_spd(&gram, &rhs).unwrap_or_else(|_| {
        let mut beta = vec![0.0; gram.cols];
        beta[0] = dot(w, y) / w.iter().sum::<f64>();
        beta
    })
}

/// `argmin Σ w (r − m·Bg)² + μ gᵀΩg` subject to `cᵀg = 0`.
fn penalized_constrained_ls(
    basis: &Mat,
    multiplier: &[f64],
    r: &[f64],
    w: &[f64],
    omega: &Mat,
    mu: f64,
    c: &[f64],
) -> Vec<f64> {
    let k = basis.cols;
    let n = basis.rows;
    let mut design = basis.clone();
    for i in 0..n {
        for j in 0..k {
            design.data[i * k + j] *= multiplier[i];
        }
    }
    let (gram, rhs) = design.weighted_normal_equations(r, Some(w));
    let mut kkt = Mat::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt.set(a, b, gram.get(a, b) + mu * omega.get(a, b));
        }
        kkt.set(a, k, c[a]);
        kkt.set(k, a, c[a]);
    }
    let mut b = rhs;
    b.push(0.0);
    match solve_general(&kkt, &b) {
        Some(sol) => sol[..k].to_vec(),
        None => {
            // empty-support knots: fall back to a vanishing ridge
            for a in 0..k {
                let d = kkt.get(a, a);
                kkt.set(a, a, d + 1e-10 * d.abs().max(1.0));
            }
            solve_general(&kkt, &b)
                .map(|s| s[..k].to_vec())
                .unwrap_or_else(|| vec![0.0; k])
        }
    }
}
