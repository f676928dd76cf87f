//! Finite-horizon worst case of the FCFS-based PS bound over the uncertainty sets,
//! the traces attaining it, and an exhaustive vertex-enumeration oracle.
//!
//! Everything here is at unit speed: workloads are service times with mean `1/mu`.

use crate::error::{Error, Result};
use crate::rq::bound::sojourn_upper_bound;
use crate::rq::uncertainty::{check_membership_arrival, check_membership_workload, Membership, UncertaintyParams};

/// Largest `n` the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_N: usize = 7;

/// Primitive parameters of a single queue: rates and variability parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    pub lambda: f64,
    pub mu: f64,
    pub gamma_a: f64,
    pub gamma_s: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, mu: f64, gamma_a: f64, gamma_s: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("mu", mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("gamma_a", gamma_a), ("gamma_s", gamma_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(Self {
            lambda,
            mu,
            gamma_a,
            gamma_s,
        })
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Closed-form bound valid for every `n`; requires `rho < 1`.
    pub fn s_ub(&self) -> f64 {
        sojourn_upper_bound(self.lambda, self.gamma_a, self.gamma_s, self.rho())
    }

    pub fn arrival_set(&self) -> UncertaintyParams {
        UncertaintyParams::from_variability(self.lambda, self.gamma_a).expect("validated")
    }

    pub fn workload_set(&self) -> UncertaintyParams {
        UncertaintyParams::from_variability(self.mu, self.gamma_s).expect("validated")
    }

    /// Value of the `k`-th term (1-based) of the finite-`n` worst case.
    pub fn worst_term(&self, n: usize, k: usize) -> f64 {
        let m = (n - k) as f64;
        (2.0 * m + 1.0) / self.mu + self.gamma_s * ((m + 1.0).sqrt() + m.sqrt()) - 2.0 * m / self.lambda
            + 2.0 * self.gamma_a * m.sqrt()
    }
}

/// Exact worst case of `2 S_n^FCFS - X_n` over both sets and the maximizing `k` (1-based).
pub fn analytic_finite_worst(n: usize, q: &QueueParams) -> (f64, usize) {
    assert!(n >= 1, "n must be positive");
    (1..=n)
        .map(|k| (q.worst_term(n, k), k))
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// `2 S_n^FCFS - X_n` of a trace at unit speed; `gaps[0]` (time to the first arrival) is unused.
pub fn worst_objective(gaps: &[f64], work: &[f64]) -> f64 {
    let n = work.len();
    assert_eq!(gaps.len(), n, "trace lengths differ");
    // suffix sums from k to n and from k to n - 1, and of gaps from k + 1 to n
    let mut best = f64::NEG_INFINITY;
    let mut to_last = 0.0;
    let mut gap_sum = 0.0;
    for k in (0..n).rev() {
        to_last += work[k];
        let to_second_last = to_last - work[n - 1];
        if k + 1 < n {
            gap_sum += gaps[k + 1];
        }
        best = best.max(to_last + to_second_last - 2.0 * gap_sum);
    }
    best
}

/// Gaps and workloads that reach the finite-`n` worst case.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalTrace {
    pub n: usize,
    pub params: QueueParams,
    /// 1-based index of the maximizing term.
    pub k_star: usize,
    pub t_star: Vec<f64>,
    pub x_star: Vec<f64>,
}

/// Builds `T*` and `X*` for horizon `n`.
///
/// `X*` is the mean plus square-root increments from `k*` on, so both workload sums
/// starting at `k*` hit their caps. `T*` makes every gap sum ending at `n` minimal;
/// the first gap has no influence and is set to the mean `1/lambda`. Fails when a gap
/// would be negative, which happens exactly when `gamma_a > 1/lambda` and `n >= 2`.
pub fn build_extremal(n: usize, params: &QueueParams) -> Result<ExtremalTrace> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let (_, k_star) = analytic_finite_worst(n, params);
    let m = 1.0 / params.mu;
    let gs = params.gamma_s;
    let root = |v: usize| (v as f64).sqrt();
    let mut x_star = vec![m; n];
    for i in k_star..n {
        // 1-based i in k*..=n-1
        x_star[i - 1] = m + gs * (root(n - i) - root(n - i - 1));
    }
    x_star[n - 1] = m + gs * (root(n - k_star + 1) - root(n - k_star));
    let mut t_star = vec![1.0 / params.lambda; n];
    for i in 2..=n {
        let t = 1.0 / params.lambda - params.gamma_a * (root(n - i + 1) - root(n - i));
        if t < 0.0 {
            return Err(Error::Domain(format!(
                "extremal gap T*_{i} = {t} is negative (gamma_a * lambda = {} > 1)",
                params.gamma_a * params.lambda
            )));
        }
        t_star[i - 1] = t;
    }
    Ok(ExtremalTrace {
        n,
        params: *params,
        k_star,
        t_star,
        x_star,
    })
}

impl ExtremalTrace {
    pub fn objective(&self) -> f64 {
        worst_objective(&self.t_star, &self.x_star)
    }

    /// First gap from the same closed form as the others, so the `k = 1` arrival constraint binds too.
    pub fn formula_first_gap(&self) -> f64 {
        let n = self.n as f64;
        1.0 / self.params.lambda - self.params.gamma_a * (n.sqrt() - (n - 1.0).sqrt())
    }

    pub fn with_first_gap(&self, t1: f64) -> Self {
        let mut c = self.clone();
        c.t_star[0] = t1;
        c
    }

    pub fn arrival_membership(&self) -> Membership {
        check_membership_arrival(&self.t_star, &self.params.arrival_set())
    }

    pub fn workload_membership(&self) -> Membership {
        check_membership_workload(&self.x_star, &self.params.workload_set())
    }

    /// Largest |slack| over the workload constraints that bind at `k*`:
    /// both sums from `k*` on, and the sums to `n - 1` from every `k >= k*`.
    pub fn binding_workload_slack(&self) -> f64 {
        let m = self.workload_membership();
        let mut worst = m.slack_to_last[self.k_star - 1].abs();
        for k in self.k_star..self.n {
            worst = worst.max(m.slack_to_second_last[k - 1].abs());
        }
        worst
    }

    /// Largest |slack| over the arrival constraints `k = 2..=n`, all binding by construction.
    pub fn binding_arrival_slack(&self) -> f64 {
        self.arrival_membership().max_abs_slack_to_last(2..=self.n)
    }
}

/// Closed forms for `X*` in the form they are usually printed, intended to hit the
/// combined workload cap for every `k` at once. Kept for diagnostics only.
pub fn printed_extremal_workloads(n: usize, mu: f64, gamma_s: f64) -> Vec<f64> {
    let m = 1.0 / mu;
    let r = |v: usize| (v as f64).sqrt();
    let mut x = Vec::with_capacity(n);
    for i in 1..=n.saturating_sub(2) {
        x.push(m + 0.5 * gamma_s * (r(n - i + 1) - r(n - i - 1)));
    }
    if n >= 2 {
        x.push(m + 0.5 * gamma_s * (1.0 + 2f64.sqrt() + r(n - 1) - r(n)));
    }
    x.push(m + gamma_s * (r(n) - r(n - 1)));
    x
}

/// Residual of `sum_{k}^{n-1} X + sum_{k}^{n} X - [(2n-2k+1)/mu + gamma_s (sqrt(n-k+1) + sqrt(n-k))]` per `k`.
pub fn combined_cap_residuals(work: &[f64], mu: f64, gamma_s: f64) -> Vec<f64> {
    let n = work.len();
    let mut out = vec![0.0; n];
    let mut to_last = 0.0;
    for k in (1..=n).rev() {
        to_last += work[k - 1];
        let to_second_last = to_last - work[n - 1];
        let m = (n - k) as f64;
        out[k - 1] = to_last + to_second_last - ((2.0 * m + 1.0) / mu + gamma_s * ((m + 1.0).sqrt() + m.sqrt()));
    }
    out
}

/// Result of the exhaustive oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    /// Maximizing gaps (first entry is a placeholder `1/lambda`) and workloads.
    pub gaps: Vec<f64>,
    pub work: Vec<f64>,
    pub workload_vertices: usize,
    pub gap_vertices: usize,
}

/// Polyhedron `{z : A z <= b}` given row by row.
struct Polyhedron {
    dim: usize,
    rows: Vec<(Vec<f64>, f64)>,
}

impl Polyhedron {
    fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        if d == 0 {
            return vec![Vec::new()];
        }
        let m = self.rows.len();
        let scale = self.rows.iter().map(|(_, b)| b.abs()).fold(1.0, f64::max);
        let tol = 1e-9 * scale;
        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            if let Some(z) = self.solve_active(&idx) {
                let inside = self
                    .rows
                    .iter()
                    .all(|(a, b)| a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>() <= b + tol);
                if inside && !found.iter().any(|v| v.iter().zip(&z).all(|(p, q)| (p - q).abs() <= tol)) {
                    found.push(z);
                }
            }
            // next combination in lexicographic order
            let mut pos = d;
            while pos > 0 && idx[pos - 1] == m - d + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for k in pos..d {
                idx[k] = idx[k - 1] + 1;
            }
        }
        found
    }

    /// Solves the rows in `active` as equalities; `None` when singular.
    fn solve_active(&self, active: &[usize]) -> Option<Vec<f64>> {
        let d = self.dim;
        let mut a: Vec<Vec<f64>> = active
            .iter()
            .map(|&r| {
                let mut row = self.rows[r].0.clone();
                row.push(self.rows[r].1);
                row
            })
            .collect();
        for col in 0..d {
            let piv = (col..d).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
            if a[piv][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, piv);
            for r in 0..d {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    if f != 0.0 {
                        for c in col..=d {
                            a[r][c] -= f * a[col][c];
                        }
                    }
                }
            }
        }
        Some((0..d).map(|r| a[r][d] / a[r][r]).collect())
    }
}

/// Workload polytope: both families of upper suffix-sum caps plus `X >= 0`.
fn workload_polytope(n: usize, q: &QueueParams) -> Polyhedron {
    let mut rows = Vec::new();
    for k in 1..=n {
        let m = (n - k + 1) as f64;
        let a = (0..n).map(|i| if i + 1 >= k { 1.0 } else { 0.0 }).collect();
        rows.push((a, m / q.mu + q.gamma_s * m.sqrt()));
    }
    for k in 1..n {
        let m = (n - k) as f64;
        let a = (0..n).map(|i| if i + 1 >= k && i + 1 < n { 1.0 } else { 0.0 }).collect();
        rows.push((a, m / q.mu + q.gamma_s * m.sqrt()));
    }
    for i in 0..n {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        rows.push((a, 0.0));
    }
    Polyhedron { dim: n, rows }
}

/// Gap polyhedron in `T_2..T_n`: lower suffix-sum bounds plus `T >= 0`.
///
/// The `k = 1` constraint also involves `T_1`, which is free and unused, so it never binds.
fn gap_polyhedron(n: usize, q: &QueueParams) -> Polyhedron {
    let d = n - 1;
    let mut rows = Vec::new();
    for k in 2..=n {
        let m = (n - k + 1) as f64;
        // variables are T_2..T_n at positions 0..d
        let a = (0..d).map(|p| if p + 2 >= k { -1.0 } else { 0.0 }).collect();
        rows.push((a, -(m / q.lambda - q.gamma_a * m.sqrt())));
    }
    for p in 0..d {
        let mut a = vec![0.0; d];
        a[p] = -1.0;
        rows.push((a, 0.0));
    }
    Polyhedron { dim: d, rows }
}

/// Maximizes `2 S_n^FCFS - X_n` over all vertex pairs of the two (non-negative) sets.
///
/// The objective is a maximum of linear functions, hence convex, and is non-increasing
/// along the recession directions of the gap set, so its maximum sits at a vertex pair.
pub fn brute_force_worst_fcfs(n: usize, params: &QueueParams) -> Result<BruteForce> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::ResourceGuard(format!(
            "vertex enumeration limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let xs = workload_polytope(n, params).vertices();
    let ts = gap_polyhedron(n, params).vertices();
    let mut best = BruteForce {
        value: f64::NEG_INFINITY,
        gaps: Vec::new(),
        work: Vec::new(),
        workload_vertices: xs.len(),
        gap_vertices: ts.len(),
    };
    let mut gaps = vec![1.0 / params.lambda; n];
    for t in &ts {
        gaps[1..].copy_from_slice(t);
        for x in &xs {
            let v = worst_objective(&gaps, x);
            if v > best.value {
                best.value = v;
                best.gaps = gaps.clone();
                best.work = x.clone();
            }
        }
    }
    Ok(best)
}
