//! Dense tableau simplex for small equality-form linear programs
//! `max cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! The constraint data is fixed at construction (phase 1 runs once); the
//! objective can then be changed repeatedly and each [`DenseLp::maximize`]
//! warm-starts from the previous optimal basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 32;

#[derive(Debug, Clone)]
pub struct DenseLp {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    n: usize,
    tol: f64,
    basis: Vec<usize>,
    /// `B⁻¹[A | b]`, row-major, `m × (n + 1)`.
    tab: Vec<f64>,
    pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl DenseLp {
    /// Finds an initial basic feasible solution. Redundant equality rows are
    /// dropped; an infeasible system yields [`Error::Infeasible`].
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64) -> Result<Self> {
        let m = a.len();
        let n = a.first().map_or(0, Vec::len);
        if b.len() != m || a.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("LP constraint shapes differ".into()));
        }

        // Phase 1 on [A | I] with b ≥ 0.
        let width = n + m + 1;
        let mut tab = vec![0.0; m * width];
        for r in 0..m {
            let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                tab[r * width + j] = sign * a[r][j];
            }
            tab[r * width + n + r] = 1.0;
            tab[r * width + n + m] = sign * b[r];
        }
        let mut phase1 = Tableau {
            rows: m,
            cols: n + m,
            tab,
            basis: (n..n + m).collect(),
        };
        let mut cost = vec![0.0; n + m];
        cost[n..].iter_mut().for_each(|c| *c = -1.0);
        phase1.optimize(&cost, tol)?;

        let infeasibility: f64 = (0..m)
            .filter(|&r| phase1.basis[r] >= n)
            .map(|r| phase1.rhs(r))
            .sum();
        if infeasibility > tol {
            return Err(Error::Infeasible);
        }

        // Pivot remaining artificials out; rows where that is impossible are redundant.
        let mut keep = vec![true; m];
        for r in 0..m {
            if phase1.basis[r] < n {
                continue;
            }
            let entering = (0..n)
                .filter(|j| !phase1.basis.contains(j))
                .max_by(|&i, &j| phase1.at(r, i).abs().total_cmp(&phase1.at(r, j).abs()))
                .filter(|&j| phase1.at(r, j).abs() > tol);
            match entering {
                Some(j) => phase1.pivot(r, j),
                None => keep[r] = false,
            }
        }

        let rows: Vec<usize> = (0..m).filter(|&r| keep[r]).collect();
        let basis: Vec<usize> = rows.iter().map(|&r| phase1.basis[r]).collect();
        let mut lp = Self {
            a: rows.iter().map(|&r| a[r].clone()).collect(),
            b: rows.iter().map(|&r| b[r]).collect(),
            n,
            tol,
            basis,
            tab: Vec::new(),
            pivots: 0,
        };
        lp.refactor()?;
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Equality rows kept after redundancy removal.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.a
    }

    /// Number of equality rows kept after redundancy removal.
    pub fn num_rows(&self) -> usize {
        self.a.len()
    }

    /// The current basic feasible solution.
    pub fn point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        let width = self.n + 1;
        for (r, &j) in self.basis.iter().enumerate() {
            x[j] = self.tab[r * width + self.n].max(0.0);
        }
        x
    }

    pub fn maximize(&mut self, c: &[f64]) -> Result<LpSolution> {
        if c.len() != self.n {
            return Err(Error::DimensionMismatch("LP objective length".into()));
        }
        let scale = c.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut t = Tableau {
            rows: self.basis.len(),
            cols: self.n,
            tab: std::mem::take(&mut self.tab),
            basis: std::mem::take(&mut self.basis),
        };
        let outcome = t.optimize(c, self.tol * scale);
        self.pivots += outcome.as_ref().map_or(0, |p| *p);
        self.tab = t.tab;
        self.basis = t.basis;
        outcome?;
        if self.pivots >= REFACTOR_EVERY {
            self.refactor()?;
        }
        let x = self.point();
        let value = x.iter().zip(c).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, value })
    }

    /// Recomputes `B⁻¹[A | b]` from the original data to shed pivot error.
    fn refactor(&mut self) -> Result<()> {
        let m = self.basis.len();
        let width = self.n + 1;
        self.pivots = 0;
        if m == 0 {
            self.tab = Vec::new();
            return Ok(());
        }
        let basis_matrix = DMatrix::from_fn(m, m, |r, k| self.a[r][self.basis[k]]);
        let full = DMatrix::from_fn(m, width, |r, j| {
            if j < self.n {
                self.a[r][j]
            } else {
                self.b[r]
            }
        });
        let solved = basis_matrix
            .lu()
            .solve(&full)
            .ok_or_else(|| Error::DimensionMismatch("singular LP basis".into()))?;
        let mut tab = vec![0.0; m * width];
        for r in 0..m {
            for j in 0..width {
                tab[r * width + j] = solved[(r, j)];
            }
            tab[r * width + self.basis[r]] = 1.0;
        }
        self.tab = tab;
        Ok(())
    }
}

/// Solves a one-shot feasibility problem `Ax = b, x ≥ 0`.
pub fn find_feasible(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    DenseLp::new(a, b, tol).map(|lp| lp.point())
}

struct Tableau {
    rows: usize,
    cols: usize,
    tab: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, j: usize) -> f64 {
        self.tab[r * self.width() + j]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width();
        let p = self.tab[row * w + col];
        for j in 0..w {
            self.tab[row * w + j] /= p;
        }
        self.tab[row * w + col] = 1.0;
        let pivot_row: Vec<f64> = self.tab[row * w..(row + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let f = self.tab[r * w + col];
            if f == 0.0 {
                continue;
            }
            for (t, &pv) in self.tab[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                *t -= f * pv;
            }
            self.tab[r * w + col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Primal simplex from the current feasible basis. Uses the largest
    /// reduced cost, switching to Bland's rule during degenerate streaks.
    /// Returns the number of pivots.
    fn optimize(&mut self, c: &[f64], tol: f64) -> Result<usize> {
        let mut pivots = 0;
        let mut degenerate = 0;
        let mut is_basic = vec![false; self.cols];
        loop {
            is_basic.iter_mut().for_each(|b| *b = false);
            for &j in &self.basis {
                is_basic[j] = true;
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = tol;
            for j in 0..self.cols {
                if is_basic[j] {
                    continue;
                }
                let mut d = c[j];
                for r in 0..self.rows {
                    d -= c[self.basis[r]] * self.at(r, j);
                }
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Ok(pivots);
            };

            let pivot_tol = 1e-12;
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let coef = self.at(r, col);
                if coef > pivot_tol {
                    let ratio = self.rhs(r).max(0.0) / coef;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leaving else {
                return Err(Error::Unbounded);
            };
            self.pivot(row, col);
            for r in 0..self.rows {
                let w = self.width();
                let v = &mut self.tab[r * w + self.cols];
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            pivots += 1;
            if ratio <= 1e-15 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            if pivots > 50_000 {
                return Err(Error::Unbounded);
            }
        }
    }
}
