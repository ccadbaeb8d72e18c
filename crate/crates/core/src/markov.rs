//! Output Markov chain induced by a policy, its stationary distribution, and
//! the conditional mutual information `I(A;Y|Y')` in bits.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channel::{check_distribution, reachability, AveragedChannel, ROW_SUM_TOL};
use crate::error::{Error, Result};

/// Largest tolerated `‖πP − π‖∞`.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

/// `P(y|y')` as a row-stochastic `[y'][y]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputKernel {
    y_size: usize,
    p: Vec<f64>,
}

impl OutputKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let y_size = rows.len();
        let mut p = Vec::with_capacity(y_size * y_size);
        for (yp, row) in rows.iter().enumerate() {
            if row.len() != y_size {
                return Err(Error::DimensionMismatch(format!(
                    "kernel row {yp} has {} entries, expected {y_size}",
                    row.len()
                )));
            }
            check_distribution(row, &format!("kernel row {yp}"))?;
            p.extend_from_slice(row);
        }
        Ok(Self { y_size, p })
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn row(&self, y_prev: usize) -> &[f64] {
        &self.p[y_prev * self.y_size..(y_prev + 1) * self.y_size]
    }

    /// `‖πP − π‖∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        (0..self.y_size)
            .map(|y| {
                let flow: f64 = (0..self.y_size).map(|yp| pi[yp] * self.row(yp)[y]).sum();
                (flow - pi[y]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Number of closed communication classes of the support graph.
    pub fn closed_classes(&self) -> usize {
        let n = self.y_size;
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| self.row(i)[j] > 0.0).collect())
            .collect();
        let reach = reachability(&adj);
        let closed: Vec<usize> = (0..n)
            .filter(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
            .collect();
        let mut seen = vec![false; n];
        let mut classes = 0;
        for &i in &closed {
            if !seen[i] {
                classes += 1;
                for &j in &closed {
                    if reach[i][j] {
                        seen[j] = true;
                    }
                }
            }
        }
        classes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StationaryDist {
    pub pi: Vec<f64>,
}

/// Joint distribution `P(y', a)` stored `[y'][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    y_size: usize,
    in_size: usize,
    p: Vec<f64>,
}

impl JointDist {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let y_size = rows.len();
        let in_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != in_size) || in_size == 0 {
            return Err(Error::DimensionMismatch("ragged or empty joint table".into()));
        }
        Self::from_flat(y_size, in_size, rows.into_iter().flatten().collect())
    }

    pub(crate) fn from_flat(y_size: usize, in_size: usize, p: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(p.len(), y_size * in_size);
        check_distribution(&p, "joint")?;
        Ok(Self { y_size, in_size, p })
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn row(&self, y_prev: usize) -> &[f64] {
        &self.p[y_prev * self.in_size..(y_prev + 1) * self.in_size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// `m(y') = Σ_a P(y', a)`.
    pub fn marginal(&self) -> Vec<f64> {
        (0..self.y_size).map(|yp| self.row(yp).iter().sum()).collect()
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.y_size).map(|yp| self.row(yp).to_vec()).collect()
    }

    /// `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &JointDist, lambda: f64) -> Result<JointDist> {
        if self.y_size != other.y_size || self.in_size != other.in_size {
            return Err(Error::DimensionMismatch("joint shapes differ".into()));
        }
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(Self {
            y_size: self.y_size,
            in_size: self.in_size,
            p,
        })
    }
}

/// Conditional distribution `P(a|y')` stored `[y'][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    y_size: usize,
    in_size: usize,
    p: Vec<f64>,
}

impl Policy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let y_size = rows.len();
        let in_size = rows.first().map_or(0, Vec::len);
        if in_size == 0 {
            return Err(Error::DimensionMismatch("empty policy".into()));
        }
        for (yp, row) in rows.iter().enumerate() {
            if row.len() != in_size {
                return Err(Error::DimensionMismatch(format!(
                    "policy row {yp} has {} entries, expected {in_size}",
                    row.len()
                )));
            }
            check_distribution(row, &format!("policy row {yp}"))?;
        }
        Ok(Self {
            y_size,
            in_size,
            p: rows.into_iter().flatten().collect(),
        })
    }

    pub fn uniform(y_size: usize, in_size: usize) -> Self {
        Self {
            y_size,
            in_size,
            p: vec![1.0 / in_size as f64; y_size * in_size],
        }
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn row(&self, y_prev: usize) -> &[f64] {
        &self.p[y_prev * self.in_size..(y_prev + 1) * self.in_size]
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.y_size).map(|yp| self.row(yp).to_vec()).collect()
    }
}

fn check_shapes(y_size: usize, in_size: usize, av: &AveragedChannel) -> Result<()> {
    if y_size != av.y_size() || in_size != av.in_size() {
        return Err(Error::DimensionMismatch(format!(
            "table is {y_size}×{in_size} but the channel is {}×{}",
            av.y_size(),
            av.in_size()
        )));
    }
    Ok(())
}

/// `P(y|y') = Σ_a P(a|y') Q(y|a,y')`.
pub fn induced_output_kernel(policy: &Policy, av: &AveragedChannel) -> Result<OutputKernel> {
    check_shapes(policy.y_size, policy.in_size, av)?;
    let n = av.y_size();
    let mut p = vec![0.0; n * n];
    for yp in 0..n {
        let out = &mut p[yp * n..(yp + 1) * n];
        for (a, &w) in policy.row(yp).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &q) in out.iter_mut().zip(av.row(yp, a)) {
                *o += w * q;
            }
        }
    }
    Ok(OutputKernel { y_size: n, p })
}

/// Solves `πP = π`, `Σπ = 1`.
///
/// Fails with [`Error::NonUniqueStationary`] when the support graph has more
/// than one closed communication class.
pub fn stationary_distribution(k: &OutputKernel) -> Result<StationaryDist> {
    let n = k.y_size;
    let classes = k.closed_classes();
    if classes != 1 {
        return Err(Error::NonUniqueStationary { classes });
    }

    // (Pᵀ − I) π = 0 with the normalization row appended.
    let mut a = DMatrix::<f64>::zeros(n + 1, n);
    for y in 0..n {
        for yp in 0..n {
            a[(y, yp)] = k.row(yp)[y] - if y == yp { 1.0 } else { 0.0 };
        }
    }
    for yp in 0..n {
        a[(n, yp)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n + 1);
    b[n] = 1.0;

    // Square system: drop the last balance equation (it is implied by the others).
    let mut square = a.clone().remove_row(n - 1);
    let mut rhs = b.clone().remove_row(n - 1);
    if n == 1 {
        square = DMatrix::from_element(1, 1, 1.0);
        rhs = DVector::from_element(1, 1.0);
    }
    let solution = square
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .or_else(|| {
            a.clone()
                .svd(true, true)
                .solve(&b, 1e-14)
                .ok()
        })
        .ok_or(Error::StationaryResidual {
            residual: f64::INFINITY,
        })?;

    let mut pi: Vec<f64> = solution.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);

    let residual = k.residual(&pi);
    if !(residual <= STATIONARY_RESIDUAL_TOL) {
        return Err(Error::StationaryResidual { residual });
    }
    Ok(StationaryDist { pi })
}

/// `I(A;Y|Y')` in bits for `P(y',a,y) = joint[y'][a]·Q(y|a,y')`.
pub fn conditional_mutual_information(joint: &JointDist, av: &AveragedChannel) -> Result<f64> {
    check_shapes(joint.y_size, joint.in_size, av)?;
    let n = av.y_size();
    let mut total = 0.0;
    let mut cond = vec![0.0; n];
    for yp in 0..n {
        let row = joint.row(yp);
        let m: f64 = row.iter().sum();
        if m <= 0.0 {
            continue;
        }
        cond.iter_mut().for_each(|v| *v = 0.0);
        for (a, &j) in row.iter().enumerate() {
            for (c, &q) in cond.iter_mut().zip(av.row(yp, a)) {
                *c += j / m * q;
            }
        }
        for (a, &j) in row.iter().enumerate() {
            if j <= 0.0 {
                continue;
            }
            for (y, &q) in av.row(yp, a).iter().enumerate() {
                if q > 0.0 {
                    total += j * q * (q / cond[y]).log2();
                }
            }
        }
    }
    Ok(total.max(0.0))
}

/// Splits a joint into its policy and `y'` marginal. Rows with zero marginal
/// get the uniform policy.
pub fn policy_from_joint(joint: &JointDist) -> (Policy, Vec<f64>) {
    let marginal = joint.marginal();
    let k = joint.in_size;
    let mut p = Vec::with_capacity(joint.p.len());
    for (yp, &m) in marginal.iter().enumerate() {
        if m > 0.0 {
            p.extend(joint.row(yp).iter().map(|v| v / m));
        } else {
            p.extend(std::iter::repeat_n(1.0 / k as f64, k));
        }
    }
    (
        Policy {
            y_size: joint.y_size,
            in_size: k,
            p,
        },
        marginal,
    )
}

/// `P(y', a) = π(y') P(a|y')` with π stationary for the induced output chain.
pub fn joint_from_policy(policy: &Policy, av: &AveragedChannel) -> Result<JointDist> {
    let kernel = induced_output_kernel(policy, av)?;
    let pi = stationary_distribution(&kernel)?;
    let mut p = Vec::with_capacity(policy.p.len());
    for (yp, &w) in pi.pi.iter().enumerate() {
        p.extend(policy.row(yp).iter().map(|v| w * v));
    }
    Ok(JointDist {
        y_size: policy.y_size,
        in_size: policy.in_size,
        p,
    })
}

/// `max_ỹ |Σ_a P(ỹ,a) − Σ_{y',a} P(y',a) Q(ỹ|a,y')|`.
pub fn stationarity_residual(joint: &JointDist, av: &AveragedChannel) -> Result<f64> {
    check_shapes(joint.y_size, joint.in_size, av)?;
    let n = av.y_size();
    let mut inflow = vec![0.0; n];
    for yp in 0..n {
        for (a, &j) in joint.row(yp).iter().enumerate() {
            for (f, &q) in inflow.iter_mut().zip(av.row(yp, a)) {
                *f += j * q;
            }
        }
    }
    Ok(joint
        .marginal()
        .iter()
        .zip(&inflow)
        .map(|(m, f)| (m - f).abs())
        .fold(0.0, f64::max))
}

/// Checks a joint's total mass against [`ROW_SUM_TOL`].
pub fn is_normalized(joint: &JointDist) -> bool {
    (joint.p.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL
}
