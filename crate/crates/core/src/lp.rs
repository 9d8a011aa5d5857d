//! Dense two-phase simplex for small linear programs.
//!
//! Maximises `c·x` subject to rows `a·x {≤,≥,=} b` and `x ≥ 0`. Pivoting
//! follows Bland's rule, so the method terminates on degenerate problems.
//! Optionally the optimum is refined to the lexicographically smallest
//! point of the optimal face.

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow price of each row's right-hand side (`∂z/∂b`). Nonpositive for
    /// `≥` rows and nonnegative for `≤` rows at an optimum.
    pub duals: Vec<f64>,
    /// `c_j − y·A_j` per variable; nonpositive at an optimum.
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `m` rows of `B⁻¹A` with the right-hand side in the last column.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<Column>,
    /// For each row, the slack or artificial column carrying its identity.
    row_marker: Vec<usize>,
}

enum Step {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn n_cols(&self) -> usize {
        self.kinds.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_cols()]
    }

    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let mut d = costs.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(&self.rows[i]) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for a in self.rows[r].iter_mut() {
            *a /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs primal simplex with Bland's rule over columns allowed by `allowed`.
    fn optimise(&mut self, costs: &[f64], allowed: &[bool]) -> Step {
        let rhs_col = self.n_cols();
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(costs);
            let Some(enter) = (0..rhs_col).find(|&j| allowed[j] && d[j] > COST_TOL) else {
                return Step::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[rhs_col].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - 1e-12 * best.abs().max(1.0)
                                || (ratio <= best + 1e-12 * best.abs().max(1.0)
                                    && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Step::Unbounded,
            }
        }
        Step::IterationLimit
    }

    fn values(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        x
    }
}

/// Solves `lp`. With `lexicographic` set, ties between optimal points are
/// broken toward the smallest `x_0`, then the smallest `x_1`, and so on.
pub fn maximize(lp: &LinearProgram, lexicographic: bool) -> LpOutcome {
    let n = lp.objective.len();
    let m = lp.rows.len();

    let mut flip = vec![1.0; m];
    let mut norm: Vec<Row> = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        debug_assert_eq!(row.coeffs.len(), n);
        if row.rhs < 0.0 {
            flip[i] = -1.0;
            norm.push(Row {
                coeffs: row.coeffs.iter().map(|a| -a).collect(),
                sense: match row.sense {
                    RowSense::Le => RowSense::Ge,
                    RowSense::Ge => RowSense::Le,
                    RowSense::Eq => RowSense::Eq,
                },
                rhs: -row.rhs,
            });
        } else {
            norm.push(row.clone());
        }
    }

    let mut kinds = vec![Column::Structural; n];
    let mut slack_of = vec![None; m];
    let mut art_of = vec![None; m];
    for (i, row) in norm.iter().enumerate() {
        if row.sense != RowSense::Eq {
            slack_of[i] = Some(kinds.len());
            kinds.push(Column::Slack);
        }
    }
    for (i, row) in norm.iter().enumerate() {
        if row.sense != RowSense::Le {
            art_of[i] = Some(kinds.len());
            kinds.push(Column::Artificial);
        }
    }
    let width = kinds.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut row_marker = Vec::with_capacity(m);
    for (i, row) in norm.iter().enumerate() {
        let mut t = vec![0.0; width + 1];
        t[..n].copy_from_slice(&row.coeffs);
        if let Some(s) = slack_of[i] {
            t[s] = if row.sense == RowSense::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = art_of[i] {
            t[a] = 1.0;
        }
        t[width] = row.rhs;
        rows.push(t);
        let marker = art_of[i].or(slack_of[i]).unwrap();
        basis.push(marker);
        row_marker.push(marker);
    }
    let mut tab = Tableau {
        rows,
        basis,
        kinds,
        row_marker,
    };

    // Phase 1: drive artificials to zero.
    let phase1: Vec<f64> = tab
        .kinds
        .iter()
        .map(|k| if *k == Column::Artificial { -1.0 } else { 0.0 })
        .collect();
    let everything = vec![true; width];
    match tab.optimise(&phase1, &everything) {
        Step::Optimal => {}
        Step::IterationLimit => return LpOutcome::IterationLimit,
        Step::Unbounded => unreachable!("phase 1 objective is bounded"),
    }
    let infeasibility: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| tab.kinds[b] == Column::Artificial)
        .map(|(i, _)| tab.rhs(i))
        .sum();
    let scale = norm.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    for i in 0..m {
        if tab.kinds[tab.basis[i]] == Column::Artificial {
            if let Some(j) = (0..width)
                .find(|&j| tab.kinds[j] != Column::Artificial && tab.rows[i][j].abs() > PIVOT_TOL)
            {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2.
    let mut costs = vec![0.0; width];
    costs[..n].copy_from_slice(&lp.objective);
    let mut allowed: Vec<bool> = tab.kinds.iter().map(|k| *k != Column::Artificial).collect();
    match tab.optimise(&costs, &allowed) {
        Step::Optimal => {}
        Step::Unbounded => return LpOutcome::Unbounded,
        Step::IterationLimit => return LpOutcome::IterationLimit,
    }
    let d = tab.reduced_costs(&costs);
    let duals: Vec<f64> = (0..m)
        .map(|i| {
            let col = tab.row_marker[i];
            let sign = if tab.kinds[col] == Column::Slack && norm[i].sense == RowSense::Ge {
                1.0
            } else {
                -1.0
            };
            flip[i] * sign * d[col]
        })
        .collect();
    let reduced_costs = d[..n].to_vec();

    if lexicographic {
        let is_basic = |tab: &Tableau, j: usize| tab.basis.contains(&j);
        for j in 0..width {
            if allowed[j] && d[j] < -COST_TOL && !is_basic(&tab, j) {
                allowed[j] = false;
            }
        }
        for k in 0..n {
            let mut c = vec![0.0; width];
            c[k] = -1.0;
            match tab.optimise(&c, &allowed) {
                Step::Optimal => {}
                Step::Unbounded => unreachable!("minimising a nonnegative variable"),
                Step::IterationLimit => return LpOutcome::IterationLimit,
            }
            let dk = tab.reduced_costs(&c);
            for j in 0..width {
                if allowed[j] && dk[j] < -COST_TOL && !is_basic(&tab, j) {
                    allowed[j] = false;
                }
            }
        }
    }

    let x = tab.values(n);
    let objective = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal(LpSolution {
        x,
        objective,
        duals,
        reduced_costs,
    })
}
