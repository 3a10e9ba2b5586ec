//! Dense two-phase simplex for the small linear programs that appear as
//! inner problems (at most a few dozen variables).
//!
//! Bland's rule is used for both the entering and leaving choice, so the
//! method terminates on degenerate problems.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coefs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `opt c·x` subject to the rows and `lower <= x <= upper`.
///
/// Lower bounds must be finite; upper bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal { x: Vec<f64>, value: f64 },
    /// Phase one stalled with this total artificial infeasibility.
    Infeasible { violation: f64 },
    Unbounded,
}

impl LpSolution {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

impl LinearProgram {
    pub fn new(objective: Vec<f64>, sense: Sense, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(objective.len(), lower.len());
        assert_eq!(objective.len(), upper.len());
        LinearProgram { objective, sense, rows: Vec::new(), lower, upper }
    }

    pub fn add_row(&mut self, coefs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coefs.len(), self.objective.len());
        self.rows.push(Row { coefs, relation, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> LpSolution {
        let n = self.num_vars();
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > &(u + FEASIBILITY_EPS)) {
            return LpSolution::Infeasible { violation: f64::INFINITY };
        }

        // Shift to y = x - lower >= 0 and collect rows in standard orientation.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(self.rows.len() + n);
        for row in &self.rows {
            let shift: f64 = row.coefs.iter().zip(&self.lower).map(|(a, l)| a * l).sum();
            rows.push((row.coefs.clone(), row.relation, row.rhs - shift));
        }
        for j in 0..n {
            if self.upper[j].is_finite() {
                let mut coefs = vec![0.0; n];
                coefs[j] = 1.0;
                rows.push((coefs, Relation::Le, (self.upper[j] - self.lower[j]).max(0.0)));
            }
        }
        for (coefs, rel, rhs) in rows.iter_mut() {
            if *rhs < 0.0 {
                coefs.iter_mut().for_each(|a| *a = -*a);
                *rhs = -*rhs;
                *rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let cols = n + n_slack + n_art;
        let art_start = n + n_slack;

        let mut tab = Tableau { a: vec![vec![0.0; cols + 1]; m], basis: vec![0; m], cols };
        let (mut next_slack, mut next_art) = (n, art_start);
        for (i, (coefs, rel, rhs)) in rows.iter().enumerate() {
            tab.a[i][..n].copy_from_slice(coefs);
            tab.a[i][cols] = *rhs;
            match rel {
                Relation::Le => {
                    tab.a[i][next_slack] = 1.0;
                    tab.basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    tab.a[i][next_slack] = -1.0;
                    next_slack += 1;
                    tab.a[i][next_art] = 1.0;
                    tab.basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    tab.a[i][next_art] = 1.0;
                    tab.basis[i] = next_art;
                    next_art += 1;
                }
            }
        }

        if n_art > 0 {
            let mut phase1 = vec![0.0; cols];
            phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
            if tab.optimize(&phase1, |_| true).is_err() {
                // Phase one is bounded below by zero; this is unreachable in exact arithmetic.
                return LpSolution::Infeasible { violation: f64::INFINITY };
            }
            let violation: f64 = (0..m)
                .filter(|&i| tab.basis[i] >= art_start)
                .map(|i| tab.a[i][cols])
                .sum();
            if violation > FEASIBILITY_EPS {
                return LpSolution::Infeasible { violation };
            }
            // Drive zero-valued artificials out of the basis where possible.
            for i in 0..m {
                if tab.basis[i] >= art_start {
                    if let Some(j) = (0..art_start).find(|&j| tab.a[i][j].abs() > 1e-9) {
                        tab.pivot(i, j);
                    }
                }
            }
        }

        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; cols];
        for j in 0..n {
            cost[j] = sign * self.objective[j];
        }
        if tab.optimize(&cost, |j| j < art_start).is_err() {
            return LpSolution::Unbounded;
        }

        let mut y = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                y[b] = tab.a[i][cols];
            }
        }
        let x: Vec<f64> = y
            .iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((yi, l), u)| (yi + l).min(*u).max(*l))
            .collect();
        let value = x.iter().zip(&self.objective).map(|(a, c)| a * c).sum();
        LpSolution::Optimal { x, value }
    }
}

struct Tableau {
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

struct Unbounded;

impl Tableau {
    /// Minimizes `cost · x` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> Result<(), Unbounded> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.cols).filter(|&j| allowed(j)).find(|&j| {
                let reduced = cost[j]
                    - self.basis.iter().enumerate().map(|(i, &b)| cost[b] * self.a[i][j]).sum::<f64>();
                reduced < -PIVOT_EPS
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aij = self.a[i][j];
                if aij > PIVOT_EPS {
                    let ratio = self.a[i][self.cols] / aij;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-14 || (ratio <= best + 1e-14 && self.basis[i] < self.basis[r]) {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            match leaving {
                None => return Err(Unbounded),
                Some((i, _)) => self.pivot(i, j),
            }
        }
        log::warn!("simplex pivot limit reached");
        Ok(())
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }
}
