//! Feedback capacity with and without causal state information at the
//! encoder, each posed as a concave program over stationary joints.

mod certificate;
mod closed_form;
mod frank_wolfe;
mod oracle;

use serde::{Deserialize, Serialize};

pub use certificate::{csi_gain_certificate, CertificateStatus, CsiCertificate};
pub use closed_form::{binary_entropy, noisy_post_objective};
pub use oracle::{grid_oracle, GRID_POINT_LIMIT};

use crate::channel::{
    average_channel, build_strategy_channel, check_connectivity, enumerate_strategies,
    Alphabets, AveragedChannel, NostChannel, StrategySet,
};
use crate::error::{Error, Result};
use crate::lp::DenseLp;
use crate::markov::{
    conditional_mutual_information, induced_output_kernel, policy_from_joint,
    stationarity_residual, JointDist, Policy, StationaryDist,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target for the conditional-gradient optimality gap, in bits.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub lp_tolerance: f64,
    /// Plain Frank–Wolfe iterations before pairwise steps are allowed.
    pub away_after: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100_000,
            lp_tolerance: 1e-11,
            away_after: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "FB")]
    Fb,
    #[serde(rename = "FB_CSI")]
    FbCsi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub setting: Setting,
    pub value_bits: f64,
    pub joint: JointDist,
    pub policy: Policy,
    pub pi: StationaryDist,
    /// Final linearized optimality gap; an upper bound on the value's shortfall.
    pub gap: f64,
    pub stationarity_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Strategies behind the policy columns (CSI setting only).
    pub strategies: Option<StrategySet>,
    /// Number of strategies used after each `y'` (CSI setting only).
    pub support_sizes: Option<Vec<usize>>,
    pub cardinality_bound: Option<usize>,
}

/// `max I(A;Y|Y')` over stationary joints for an arbitrary averaged channel.
pub fn maximize_information(av: &AveragedChannel, cfg: &SolverConfig) -> Result<CapacityResult> {
    if !check_connectivity(av).connected {
        return Err(Error::NotConnected);
    }
    let outcome = frank_wolfe::maximize(
        av,
        &frank_wolfe::FwOptions {
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_iterations,
            lp_tolerance: cfg.lp_tolerance,
            away_after: cfg.away_after,
        },
    )?;
    let joint = JointDist::from_flat(av.y_size(), av.in_size(), outcome.joint)?;
    let (policy, marginal) = policy_from_joint(&joint);
    Ok(CapacityResult {
        setting: Setting::Fb,
        value_bits: conditional_mutual_information(&joint, av)?,
        stationarity_residual: stationarity_residual(&joint, av)?,
        joint,
        policy,
        pi: StationaryDist { pi: marginal },
        gap: outcome.gap,
        iterations: outcome.iterations,
        converged: outcome.converged,
        strategies: None,
        support_sizes: None,
        cardinality_bound: None,
    })
}

fn finish(result: CapacityResult) -> Result<CapacityResult> {
    if result.converged {
        Ok(result)
    } else {
        Err(Error::IterationLimit(Box::new(result)))
    }
}

/// Feedback capacity without state information at the encoder.
pub fn solve_cfb(c: &NostChannel, cfg: &SolverConfig) -> Result<CapacityResult> {
    finish(maximize_information(&average_channel(c), cfg)?)
}

/// Feedback capacity with causal state information, over all `|X|^|S|`
/// strategies.
pub fn solve_cfb_csi(c: &NostChannel, cfg: &SolverConfig) -> Result<CapacityResult> {
    let strategies = enumerate_strategies(&c.alphabets())?;
    solve_cfb_csi_with_strategies(c, &strategies, cfg)
}

/// The CSI program restricted to a given strategy set.
///
/// The returned policy is reduced so that each row uses at most `|Y|`
/// strategies without lowering the value.
pub fn solve_cfb_csi_with_strategies(
    c: &NostChannel,
    strategies: &StrategySet,
    cfg: &SolverConfig,
) -> Result<CapacityResult> {
    let av = build_strategy_channel(c, strategies)?;
    let mut result = maximize_information(&av, cfg)?;
    result.setting = Setting::FbCsi;
    if let Some(reduced) = reduce_support(&result, &av, cfg.lp_tolerance)? {
        result = reduced;
    }
    result.support_sizes = Some(support_sizes(&result));
    result.cardinality_bound = Some(cardinality_bound(&c.alphabets()));
    result.strategies = Some(strategies.clone());
    finish(result)
}

/// Strategies with positive probability in each row of positive mass.
fn support_sizes(result: &CapacityResult) -> Vec<usize> {
    (0..result.policy.y_size())
        .map(|yp| {
            if result.pi.pi[yp] > 0.0 {
                result.policy.row(yp).iter().filter(|&&p| p > 1e-12).count()
            } else {
                0
            }
        })
        .collect()
}

fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Re-expresses each row `P(y|y')` with a basic solution of
/// `min Σ_u p_u H(Y|u,y')  s.t.  Σ_u p_u Q(·|u,y') = P(·|y')`.
///
/// The output chain and the stationary distribution are unchanged, and the
/// conditional entropy term cannot grow, so the value does not drop.
fn reduce_support(
    result: &CapacityResult,
    av: &AveragedChannel,
    lp_tolerance: f64,
) -> Result<Option<CapacityResult>> {
    let (ny, nu) = (av.y_size(), av.in_size());
    let kernel = induced_output_kernel(&result.policy, av)?;
    let mut rows = Vec::with_capacity(ny);
    for yp in 0..ny {
        if result.pi.pi[yp] <= 0.0 {
            rows.push(result.policy.row(yp).to_vec());
            continue;
        }
        let a: Vec<Vec<f64>> = (0..ny)
            .map(|y| (0..nu).map(|u| av.row(yp, u)[y]).collect())
            .collect();
        let mut lp = match DenseLp::new(a, kernel.row(yp).to_vec(), lp_tolerance) {
            Ok(lp) => lp,
            Err(Error::Infeasible) => return Ok(None),
            Err(e) => return Err(e),
        };
        let cost: Vec<f64> = (0..nu).map(|u| -entropy_bits(av.row(yp, u))).collect();
        let mut p = lp.maximize(&cost)?.x;
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        rows.push(p);
    }
    let policy = Policy::new(rows)?;
    let mut p = Vec::with_capacity(ny * nu);
    for yp in 0..ny {
        p.extend(policy.row(yp).iter().map(|v| v * result.pi.pi[yp]));
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let joint = JointDist::from_flat(ny, nu, p)?;
    let value = conditional_mutual_information(&joint, av)?;
    let residual = stationarity_residual(&joint, av)?;
    if value < result.value_bits - 1e-12 || residual > 1e-9 {
        return Ok(None);
    }
    let (policy, marginal) = policy_from_joint(&joint);
    Ok(Some(CapacityResult {
        value_bits: value,
        stationarity_residual: residual,
        joint,
        policy,
        pi: StationaryDist { pi: marginal },
        ..result.clone()
    }))
}

/// `L = min{|X|^|S|, (|X|−1)|S||Y| + 1, (|Y|−1)|Y| + 1}`.
pub fn cardinality_bound(a: &Alphabets) -> usize {
    let strategies = u32::try_from(a.s_size)
        .ok()
        .and_then(|e| a.x_size.checked_pow(e))
        .unwrap_or(usize::MAX);
    let from_inputs = (a.x_size - 1)
        .saturating_mul(a.s_size)
        .saturating_mul(a.y_size)
        .saturating_add(1);
    let from_outputs = (a.y_size - 1).saturating_mul(a.y_size).saturating_add(1);
    strategies.min(from_inputs).min(from_outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_noisy_post, NostChannel};

    #[test]
    fn cardinality_bound_arithmetic() {
        let l = |x, y, s| cardinality_bound(&Alphabets::new(x, y, s).unwrap());
        assert_eq!(l(2, 2, 2), 3);
        assert_eq!(l(2, 2, 3), 3);
        assert_eq!(l(3, 4, 1), 3);
        assert_eq!(l(2, 5, 64), 21);
    }

    #[test]
    fn post_endpoint() {
        let c = make_noisy_post(0.5, 0.0).unwrap();
        let r = solve_cfb(&c, &SolverConfig::default()).unwrap();
        assert!((r.value_bits + 0.8f64.log2()).abs() < 1e-8, "{}", r.value_bits);
        assert!((r.policy.row(0)[1] - 0.4).abs() < 1e-3);
        assert!((r.policy.row(1)[0] - 0.4).abs() < 1e-3);
        assert!(r.gap <= 1e-9);
        assert!(r.stationarity_residual <= 1e-9);
    }

    #[test]
    fn input_independent_kernel_has_zero_capacity() {
        let q = vec![vec![0.3, 0.7], vec![0.3, 0.7]];
        let c = NostChannel::new(
            vec![q.clone(), vec![vec![0.6, 0.4], vec![0.6, 0.4]]],
            vec![vec![0.5, 0.5], vec![0.1, 0.9]],
        )
        .unwrap();
        let r = solve_cfb(&c, &SolverConfig::default()).unwrap();
        assert!(r.value_bits.abs() < 1e-12);
    }

    #[test]
    fn disconnected_channel_is_refused() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let c = NostChannel::new(vec![vec![id[0].clone(), id[0].clone()], vec![id[1].clone(), id[1].clone()]], id)
            .unwrap();
        assert!(matches!(
            solve_cfb(&c, &SolverConfig::default()),
            Err(Error::NotConnected)
        ));
    }

    #[test]
    fn csi_reports_supports_and_bound() {
        let c = make_noisy_post(0.5, 0.5).unwrap();
        let r = solve_cfb_csi(&c, &SolverConfig::default()).unwrap();
        assert_eq!(r.setting, Setting::FbCsi);
        assert_eq!(r.cardinality_bound, Some(3));
        let sizes = r.support_sizes.unwrap();
        assert!(sizes.iter().all(|&s| s <= 2), "{sizes:?}");
    }
}
