//! Dense two-phase primal simplex for the small linear programs that
//! arise when concavifying over the simplex: a handful of rows (one per
//! alphabet symbol or cost constraint) against up to a few thousand
//! candidate columns.
//!
//! Solves  max cᵀx  s.t.  A_eq x = b_eq,  A_ub x ≤ b_ub,  x ≥ 0.

const EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m rows, each of length ncols + 1 (rhs last)
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i == pr {
                continue;
            }
            let factor = self.rows[i][pc];
            if factor == 0.0 {
                continue;
            }
            for j in 0..=self.ncols {
                let upd = self.rows[pr][j] * factor;
                self.rows[i][j] -= upd;
            }
            self.rows[i][pc] = 0.0; // exact after elimination
        }
    }
}

enum SimplexStatus {
    Optimal,
    Unbounded,
}

/// Runs the simplex loop for maximization of `costs` over the current
/// tableau; `blocked` columns may never enter the basis.
fn run_simplex(
    t: &mut Tableau,
    costs: &[f64],
    basis: &mut [usize],
    blocked: &[bool],
) -> SimplexStatus {
    let m = t.rows.len();
    // Reduced costs r = c − c_Bᵀ B⁻¹ A, maintained incrementally.
    let mut reduced = costs.to_vec();
    for i in 0..m {
        let cb = costs[basis[i]];
        if cb == 0.0 {
            continue;
        }
        for j in 0..t.ncols {
            reduced[j] -= cb * t.rows[i][j];
        }
    }

    let mut iters = 0usize;
    let max_dantzig = 50 * (t.ncols + m);
    loop {
        iters += 1;
        // Entering column: Dantzig (largest reduced cost), falling back
        // to Bland's rule if the iteration count looks degenerate.
        let bland = iters > max_dantzig;
        let mut enter: Option<usize> = None;
        let mut best = EPS;
        for j in 0..t.ncols {
            if blocked[j] || reduced[j] <= EPS {
                continue;
            }
            if bland {
                enter = Some(j);
                break;
            }
            if reduced[j] > best {
                best = reduced[j];
                enter = Some(j);
            }
        }
        let Some(pc) = enter else {
            return SimplexStatus::Optimal;
        };

        // Ratio test; smallest row index breaks ties (anti-cycling).
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = t.rows[i][pc];
            if a > EPS {
                let ratio = t.rhs(i) / a;
                if ratio < best_ratio - EPS
                    || (ratio < best_ratio + EPS && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(pr) = leave else {
            return SimplexStatus::Unbounded;
        };

        t.pivot(pr, pc);
        basis[pr] = pc;
        let r_pc = reduced[pc];
        for j in 0..t.ncols {
            reduced[j] -= r_pc * t.rows[pr][j];
        }
        reduced[pc] = 0.0;
    }
}

/// Maximizes `c·x` subject to `a_eq x = b_eq`, `a_ub x ≤ b_ub`, `x ≥ 0`.
pub fn maximize(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_ub: &[Vec<f64>],
    b_ub: &[f64],
) -> LpOutcome {
    let n = c.len();
    let m_eq = a_eq.len();
    let m_ub = a_ub.len();
    let m = m_eq + m_ub;
    assert_eq!(b_eq.len(), m_eq);
    assert_eq!(b_ub.len(), m_ub);

    // Columns: original n, then m_ub slacks, then m artificials.
    let n_slack = m_ub;
    let ncols = n + n_slack + m;
    let mut rows = Vec::with_capacity(m);
    for (i, a) in a_eq.iter().chain(a_ub.iter()).enumerate() {
        assert_eq!(a.len(), n, "constraint row {i} has wrong width");
        let mut row = vec![0.0; ncols + 1];
        row[..n].copy_from_slice(a);
        if i >= m_eq {
            row[n + (i - m_eq)] = 1.0; // slack
        }
        let b = if i < m_eq { b_eq[i] } else { b_ub[i - m_eq] };
        row[ncols] = b;
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n + n_slack + i] = 1.0; // artificial
        rows.push(row);
    }
    let mut t = Tableau { rows, ncols };
    let mut basis: Vec<usize> = (0..m).map(|i| n + n_slack + i).collect();

    // Phase 1: maximize −Σ artificials.
    let mut phase1 = vec![0.0; ncols];
    for j in n + n_slack..ncols {
        phase1[j] = -1.0;
    }
    let blocked = vec![false; ncols];
    match run_simplex(&mut t, &phase1, &mut basis, &blocked) {
        SimplexStatus::Unbounded => unreachable!("phase 1 is bounded by construction"),
        SimplexStatus::Optimal => {}
    }
    let infeasibility: f64 = (0..m)
        .filter(|&i| basis[i] >= n + n_slack)
        .map(|i| t.rhs(i))
        .sum();
    if infeasibility > 1e-7 {
        return LpOutcome::Infeasible;
    }

    // Drive any zero-level artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(pc) = (0..n + n_slack).find(|&j| t.rows[i][j].abs() > EPS) {
                t.pivot(i, pc);
                basis[i] = pc;
            }
        }
    }

    // Phase 2 with artificials blocked.
    let mut phase2 = vec![0.0; ncols];
    phase2[..n].copy_from_slice(c);
    let mut blocked = vec![false; ncols];
    for b in blocked.iter_mut().skip(n + n_slack) {
        *b = true;
    }
    match run_simplex(&mut t, &phase2, &mut basis, &blocked) {
        SimplexStatus::Unbounded => LpOutcome::Unbounded,
        SimplexStatus::Optimal => {
            let mut x = vec![0.0; n];
            for i in 0..m {
                if basis[i] < n {
                    x[basis[i]] = t.rhs(i).max(0.0);
                }
            }
            let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            LpOutcome::Optimal(LpSolution { x, value })
        }
    }
}
