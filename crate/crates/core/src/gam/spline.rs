//! Natural cubic splines in value/second-derivative form.
//!
//! A spline is determined by its values `g` at ascending knots `t`. The
//! interior second derivatives `γ` solve `R γ = Qᵀ g` (with `γ = 0` at both
//! end knots) and the roughness `∫ f''² = gᵀ Q R⁻¹ Qᵀ g`. Outside the knot
//! range the spline continues linearly with its end slopes.

use crate::linalg::{solve_spd, Mat};

/// Tridiagonal system and roughness matrix for a fixed knot sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGeometry {
    knots: Vec<f64>,
    /// `K×K` map from knot values to second derivatives (end rows zero).
    second_map: Mat,
    /// `K×K` roughness penalty `Q R⁻¹ Qᵀ`.
    penalty: Mat,
}

impl KnotGeometry {
    /// Panics unless there are at least two strictly ascending knots.
    pub fn new(knots: Vec<f64>) -> Self {
        assert!(knots.len() >= 2, "a spline needs at least two knots");
        assert!(
            knots.windows(2).all(|w| w[0] < w[1]),
            "knots must be strictly ascending"
        );
        let k = knots.len();
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = k - 2;
        let mut second_map = Mat::zeros(k, k);
        let mut penalty = Mat::zeros(k, k);
        if m > 0 {
            // Q is k×m, R is m×m; interior knot i (1..k-1) maps to column i-1
            let mut q = Mat::zeros(k, m);
            let mut r = Mat::zeros(m, m);
            for c in 0..m {
                let i = c + 1;
                q.set(i - 1, c, 1.0 / h[i - 1]);
                q.set(i, c, -1.0 / h[i - 1] - 1.0 / h[i]);
                q.set(i + 1, c, 1.0 / h[i]);
                r.set(c, c, (h[i - 1] + h[i]) / 3.0);
                if c + 1 < m {
                    r.set(c, c + 1, h[i] / 6.0);
                    r.set(c + 1, c, h[i] / 6.0);
                }
            }
            // R⁻¹ Qᵀ column by column: column j solves R s = Qᵀ e_j
            for j in 0..k {
                let rhs: Vec<f64> = (0..m).map(|c| q.get(j, c)).collect();
                let s = solve_spd(&r, &rhs).expect("R is diagonally dominant");
                for c in 0..m {
                    second_map.set(c + 1, j, s[c]);
                }
            }
            for a in 0..k {
                for b in 0..k {
                    let v: f64 = (0..m).map(|c| q.get(a, c) * second_map.get(c + 1, b)).sum();
                    penalty.set(a, b, v);
                }
            }
            // symmetrize rounding
            for a in 0..k {
                for b in 0..a {
                    let v = 0.5 * (penalty.get(a, b) + penalty.get(b, a));
                    penalty.set(a, b, v);
                    penalty.set(b, a, v);
                }
            }
        }
        KnotGeometry {
            knots,
            second_map,
            penalty,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn penalty(&self) -> &Mat {
        &self.penalty
    }

    pub fn second_derivatives(&self, values: &[f64]) -> Vec<f64> {
        self.second_map.mul_vec(values)
    }

    /// Writes the value of every cardinal basis function at `x` into `out`.
    pub fn basis_row(&self, x: f64, out: &mut [f64]) {
        let k = self.knots.len();
        debug_assert_eq!(out.len(), k);
        out.iter_mut().for_each(|v| *v = 0.0);
        let t = &self.knots;
        if x <= t[0] {
            // f(x) = g0 + dx·((g1 − g0)/h − h·γ1/6)
            let (h, dx) = (t[1] - t[0], x - t[0]);
            out[0] += 1.0 - dx / h;
            out[1] += dx / h;
            for (j, o) in out.iter_mut().enumerate() {
                *o -= dx * h / 6.0 * self.second_map.get(1, j);
            }
            return;
        }
        if x >= t[k - 1] {
            // f(x) = gK + dx·((gK − gK-1)/h + h·γK-1/6)
            let (h, dx) = (t[k - 1] - t[k - 2], x - t[k - 1]);
            out[k - 1] += 1.0 + dx / h;
            out[k - 2] -= dx / h;
            for (j, o) in out.iter_mut().enumerate() {
                *o += dx * h / 6.0 * self.second_map.get(k - 2, j);
            }
            return;
        }
        let i = match t.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(k - 2),
            Err(i) => i - 1,
        };
        let h = t[i + 1] - t[i];
        let a = (t[i + 1] - x) / h;
        let b = (x - t[i]) / h;
        out[i] += a;
        out[i + 1] += b;
        let prod = (x - t[i]) * (t[i + 1] - x) / 6.0;
        let ci = prod * (1.0 + a);
        let ci1 = prod * (1.0 + b);
        for j in 0..k {
            out[j] -= ci * self.second_map.get(i, j) + ci1 * self.second_map.get(i + 1, j);
        }
    }

    pub fn basis_matrix(&self, xs: &[f64]) -> Mat {
        let k = self.len();
        let mut m = Mat::zeros(xs.len(), k);
        for (r, &x) in xs.iter().enumerate() {
            self.basis_row(x, &mut m.data[r * k..(r + 1) * k]);
        }
        m
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let mut row = vec![0.0; self.len()];
        self.basis_row(x, &mut row);
        row.iter().zip(values).map(|(b, g)| b * g).sum()
    }
}

/// `K` knots at evenly spaced quantiles of the distinct values of `xs`,
/// including both extremes. `None` when fewer than `K` distinct values exist.
pub fn quantile_knots(xs: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if k < 2 || sorted.len() < k {
        return None;
    }
    let last = (sorted.len() - 1) as f64;
    let mut knots: Vec<f64> = (0..k)
        .map(|q| {
            let pos = last * q as f64 / (k - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if frac == 0.0 {
                sorted[lo]
            } else {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            }
        })
        .collect();
    knots.dedup();
    (knots.len() == k).then_some(knots)
}
