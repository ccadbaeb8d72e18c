//! Conditional-gradient maximization of `I(A;Y|Y')` over the polytope of
//! stationary joints `P(y', a)`.
//!
//! The feasible set is `{J ≥ 0, ΣJ = 1, Σ_a J(ỹ,a) = Σ_{y',a} J(y',a) Q(ỹ|a,y') ∀ỹ}`.
//! Its linear-maximization oracle is a warm-started [`DenseLp`]. The partial
//! derivative of the objective with respect to `J(y',a)` is the divergence
//! `D(Q(·|a,y') ‖ P(·|y'))`, so the objective equals `⟨∇I(J), J⟩`.

use nalgebra::{DMatrix, DVector};

use crate::channel::AveragedChannel;
use crate::error::{Error, Result};
use crate::lp::DenseLp;
use crate::markov::{joint_from_policy, Policy};

/// Gradient entries are clipped here; an infinite entry means some output has
/// zero conditional probability but positive probability under that letter.
const GRADIENT_CAP: f64 = 1e12;

/// Coordinates that are positive never drop below this.
const COORDINATE_FLOOR: f64 = 1e-300;

/// Smallest stationary mass tolerated in the starting point before it is
/// mixed with the analytic center.
const MIN_START_MASS: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub(crate) struct FwOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub lp_tolerance: f64,
    pub away_after: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct FwOutcome {
    pub joint: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Evaluates `I(A;Y|Y')` in bits and its gradient at a (possibly unnormalized
/// but nonnegative) joint.
pub(crate) struct Objective<'a> {
    av: &'a AveragedChannel,
    cond: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(av: &'a AveragedChannel) -> Self {
        Self {
            av,
            cond: vec![0.0; av.y_size()],
        }
    }

    /// Fills `grad` and returns `⟨grad, joint⟩`.
    pub fn gradient(&mut self, joint: &[f64], grad: &mut [f64]) -> f64 {
        let (ny, na) = (self.av.y_size(), self.av.in_size());
        let mut value = 0.0;
        for yp in 0..ny {
            let row = &joint[yp * na..(yp + 1) * na];
            let m: f64 = row.iter().sum();
            self.cond.iter_mut().for_each(|c| *c = 0.0);
            for (a, &j) in row.iter().enumerate() {
                let w = if m > 0.0 { j / m } else { 1.0 / na as f64 };
                if w == 0.0 {
                    continue;
                }
                for (c, &q) in self.cond.iter_mut().zip(self.av.row(yp, a)) {
                    *c += w * q;
                }
            }
            for a in 0..na {
                let mut d = 0.0;
                for (&q, &c) in self.av.row(yp, a).iter().zip(&self.cond) {
                    if q > 0.0 {
                        d += if c > 0.0 {
                            q * (q / c).log2()
                        } else {
                            GRADIENT_CAP
                        };
                    }
                }
                let d = d.min(GRADIENT_CAP);
                grad[yp * na + a] = d;
                value += row[a] * d;
            }
        }
        value
    }
}

/// The stationary-joint polytope with its linear oracle.
pub(crate) struct StationaryPolytope {
    lp: DenseLp,
    n: usize,
}

impl StationaryPolytope {
    pub fn new(av: &AveragedChannel, lp_tolerance: f64) -> Result<Self> {
        let (ny, na) = (av.y_size(), av.in_size());
        let n = ny * na;
        let mut a = Vec::with_capacity(ny + 1);
        for target in 0..ny {
            let mut row = vec![0.0; n];
            for yp in 0..ny {
                for u in 0..na {
                    let own = if yp == target { 1.0 } else { 0.0 };
                    row[yp * na + u] = own - av.row(yp, u)[target];
                }
            }
            a.push(row);
        }
        a.push(vec![1.0; n]);
        let mut b = vec![0.0; ny];
        b.push(1.0);
        Ok(Self {
            lp: DenseLp::new(a, b, lp_tolerance)?,
            n,
        })
    }

    /// Vertex maximizing `⟨c, J⟩`.
    pub fn argmax(&mut self, c: &[f64]) -> Result<Vec<f64>> {
        Ok(self.lp.maximize(c)?.x)
    }

    /// Analytic center over the coordinates that can be positive somewhere in
    /// the polytope; the remaining coordinates are identically zero.
    pub fn analytic_center(&mut self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut start = vec![0.0; n];
        let mut hits = 0usize;
        let mut unit = vec![0.0; n];
        for i in 0..n {
            unit[i] = 1.0;
            let v = self.argmax(&unit)?;
            unit[i] = 0.0;
            if v[i] > 0.0 {
                hits += 1;
                start.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
            }
        }
        start.iter_mut().for_each(|s| *s /= hits as f64);
        let free: Vec<usize> = (0..n).filter(|&i| start[i] > 0.0).collect();

        // Equality-constrained Newton on Σ ln x over the free coordinates.
        let rows = &self.lp_rows();
        let k = free.len();
        let m = rows.len();
        let mut x: Vec<f64> = free.iter().map(|&i| start[i]).collect();
        let barrier = |x: &[f64]| x.iter().map(|v| v.ln()).sum::<f64>();
        for _ in 0..100 {
            let mut kkt = DMatrix::<f64>::zeros(k + m, k + m);
            let mut rhs = DVector::<f64>::zeros(k + m);
            for i in 0..k {
                kkt[(i, i)] = -1.0 / (x[i] * x[i]);
                rhs[i] = -1.0 / x[i];
                for (r, row) in rows.iter().enumerate() {
                    kkt[(i, k + r)] = row[free[i]];
                    kkt[(k + r, i)] = row[free[i]];
                }
            }
            let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-14) else {
                break;
            };
            let dx: Vec<f64> = (0..k).map(|i| sol[i]).collect();
            let decrement: f64 = dx.iter().zip(&x).map(|(d, v)| (d / v).powi(2)).sum();
            if decrement < 1e-20 {
                break;
            }
            let base = barrier(&x);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(v, d)| v + t * d).collect();
                if trial.iter().all(|v| *v > 0.0) && barrier(&trial) >= base {
                    x = trial;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    break;
                }
            }
            if t < 1e-12 {
                break;
            }
        }
        let mut center = vec![0.0; n];
        for (i, &j) in free.iter().enumerate() {
            center[j] = x[i];
        }
        let total: f64 = center.iter().sum();
        center.iter_mut().for_each(|v| *v /= total);
        Ok(center)
    }

    fn lp_rows(&self) -> Vec<Vec<f64>> {
        self.lp.rows().to_vec()
    }
}

/// Feasible interior start: the stationary joint of the uniform policy, mixed
/// half-and-half with the analytic center when some output is nearly absent.
pub(crate) fn initial_joint(av: &AveragedChannel, polytope: &mut StationaryPolytope) -> Result<Vec<f64>> {
    let uniform = Policy::uniform(av.y_size(), av.in_size());
    match joint_from_policy(&uniform, av) {
        Ok(joint) => {
            let p = joint.as_slice().to_vec();
            if joint.marginal().iter().all(|&m| m >= MIN_START_MASS) {
                return Ok(p);
            }
            let center = polytope.analytic_center()?;
            Ok(p.iter().zip(&center).map(|(a, b)| 0.5 * a + 0.5 * b).collect())
        }
        Err(Error::NonUniqueStationary { .. } | Error::StationaryResidual { .. }) => {
            polytope.analytic_center()
        }
        Err(e) => Err(e),
    }
}

struct Atom {
    /// Support of a vertex; `None` for the interior starting point.
    key: Option<Vec<usize>>,
    point: Vec<f64>,
    weight: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn support(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Pairwise conditional gradient: each step moves weight from the active atom
/// with the smallest linearized value to the oracle vertex. Plain Frank–Wolfe
/// steps are used for the first `away_after` iterations.
pub(crate) fn maximize(av: &AveragedChannel, opts: &FwOptions) -> Result<FwOutcome> {
    let mut polytope = StationaryPolytope::new(av, opts.lp_tolerance)?;
    let n = av.y_size() * av.in_size();
    let mut x = initial_joint(av, &mut polytope)?;
    let mut objective = Objective::new(av);

    let mut atoms = vec![Atom {
        key: None,
        point: x.clone(),
        weight: 1.0,
    }];
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut gap = f64::INFINITY;

    for iteration in 0..opts.max_iterations {
        let value = objective.gradient(&x, &mut grad);
        let vertex = polytope.argmax(&grad)?;
        gap = (dot(&grad, &vertex) - value).max(0.0);
        if gap <= opts.tolerance {
            return Ok(FwOutcome {
                joint: x,
                gap,
                iterations: iteration,
                converged: true,
            });
        }

        // Pairwise step: shift mass from the worst active atom to the vertex.
        let mut pair: Option<usize> = None;
        if iteration >= opts.away_after {
            pair = atoms
                .iter()
                .enumerate()
                .filter(|(_, atom)| atom.weight > 0.0)
                .map(|(i, atom)| (i, dot(&grad, &atom.point)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i);
        }

        let max_step = match pair {
            Some(i) => {
                for k in 0..n {
                    dir[k] = vertex[k] - atoms[i].point[k];
                }
                atoms[i].weight
            }
            None => {
                for k in 0..n {
                    dir[k] = vertex[k] - x[k];
                }
                1.0
            }
        };

        let mut cap = max_step;
        for k in 0..n {
            if dir[k] < 0.0 && x[k] > COORDINATE_FLOOR {
                cap = cap.min((x[k] - COORDINATE_FLOOR) / -dir[k]);
            }
        }
        let step = line_search(&mut objective, &x, &dir, cap, &mut trial, &mut trial_grad);
        if step <= 0.0 {
            // No ascent possible along the chosen direction within floating point.
            return Ok(FwOutcome {
                joint: x,
                gap,
                iterations: iteration,
                converged: gap <= opts.tolerance,
            });
        }

        for k in 0..n {
            x[k] = (x[k] + step * dir[k]).max(0.0);
        }
        match pair {
            None => atoms.iter_mut().for_each(|a| a.weight *= 1.0 - step),
            Some(i) => {
                atoms[i].weight = if step >= max_step { 0.0 } else { atoms[i].weight - step };
            }
        }
        let key = support(&vertex);
        match atoms.iter_mut().find(|a| a.key.as_ref() == Some(&key)) {
            Some(atom) => atom.weight += step,
            None => atoms.push(Atom {
                key: Some(key),
                point: vertex,
                weight: step,
            }),
        }
        atoms.retain(|a| a.weight > 0.0);

        // Keep total mass exactly one.
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
    }

    Ok(FwOutcome {
        joint: x,
        gap,
        iterations: opts.max_iterations,
        converged: false,
    })
}

/// Exact line search for a concave objective: the root of the directional
/// derivative on `[0, cap]`, located by Illinois-modified regula falsi.
fn line_search(
    objective: &mut Objective<'_>,
    x: &[f64],
    dir: &[f64],
    cap: f64,
    trial: &mut [f64],
    grad: &mut [f64],
) -> f64 {
    let mut slope = |t: f64, trial: &mut [f64], grad: &mut [f64]| {
        for k in 0..x.len() {
            trial[k] = (x[k] + t * dir[k]).max(0.0);
        }
        objective.gradient(trial, grad);
        dot(grad, dir)
    };
    if cap <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut f_lo) = (0.0, slope(0.0, trial, grad));
    if f_lo <= 0.0 {
        return 0.0;
    }
    let (mut hi, mut f_hi) = (cap, slope(cap, trial, grad));
    if f_hi >= 0.0 {
        return cap;
    }
    let mut side = 0i8;
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        t = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let f = slope(t, trial, grad);
        if f > 0.0 {
            lo = t;
            f_lo = f;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else if f < 0.0 {
            hi = t;
            f_hi = f;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        } else {
            return t;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    t
}
