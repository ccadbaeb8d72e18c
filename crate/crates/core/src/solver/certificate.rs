//! Sufficient condition for state information to be useless: an input policy
//! that reproduces the CSI-optimal output chain `P(y|y')` without raising the
//! conditional output entropy.
//!
//! Matching the chain alone is not enough. With `Y = X ⊕ S` and a uniform
//! i.i.d. state, every input policy reproduces the CSI-optimal chain while
//! the capacity without state information is zero and with it is one bit.
//! The certificate therefore also requires `H₂(Y|X,Y') ≤ H₁(Y|U,Y')`, which
//! gives `I₂(X;Y|Y') ≥ I₁(U;Y|Y')`.

use serde::Serialize;

use super::{CapacityResult, Setting, SolverConfig};
use crate::channel::{average_channel, build_strategy_channel, NostChannel};
use crate::error::{Error, Result};
use crate::lp::DenseLp;
use crate::markov::{induced_output_kernel, Policy};

/// Rows with stationary mass at or below this are not checked.
pub const SUPPORT_MASS: f64 = 1e-10;

/// Largest accepted `|P₂(y|y') − P₁(y|y')|`.
pub const KERNEL_MATCH_TOL: f64 = 1e-8;

/// Largest accepted excess of `H₂(Y|X,Y')` over `H₁(Y|U,Y')`, in bits.
pub const ENTROPY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateStatus {
    NoGainCertified,
    NoCertificateFound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiCertificate {
    pub status: CertificateStatus,
    /// Input policy `P₂(x|y')`; rows outside the support are uniform.
    pub p2_policy: Option<Policy>,
    /// Largest kernel mismatch over the checked rows (infinite when some row
    /// has no feasible input mixture).
    pub max_kernel_mismatch: f64,
    /// `H₁(Y|U,Y') − H₂(Y|X,Y')` in bits; negative values beyond
    /// [`ENTROPY_TOL`] refuse the certificate. NaN when no `P₂` exists.
    pub entropy_slack: f64,
}

fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Searches, row by row on the support of π, for `p ≥ 0` with
/// `Σ_x p(x) Q(·|x,y') = P₁(·|y')` that minimizes `Σ_x p(x) H(Q(·|x,y'))`,
/// then compares the π-weighted entropies of both policies.
///
/// Absence of a certificate does not prove that state information helps.
pub fn csi_gain_certificate(
    c: &NostChannel,
    csi_result: &CapacityResult,
    cfg: &SolverConfig,
) -> Result<CsiCertificate> {
    if csi_result.setting != Setting::FbCsi {
        return Err(Error::DimensionMismatch(
            "certificate needs a result from the CSI program".into(),
        ));
    }
    let strategies = csi_result
        .strategies
        .as_ref()
        .ok_or_else(|| Error::DimensionMismatch("CSI result carries no strategy set".into()))?;
    let strategy_channel = build_strategy_channel(c, strategies)?;
    let target = induced_output_kernel(&csi_result.policy, &strategy_channel)?;
    let av = average_channel(c);
    let (ny, nx) = (av.y_size(), av.in_size());

    let mut rows = Vec::with_capacity(ny);
    let mut mismatch = 0.0f64;
    let mut feasible = true;
    let pi = &csi_result.pi.pi;
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    for yp in 0..ny {
        if csi_result.pi.pi[yp] <= SUPPORT_MASS {
            rows.push(vec![1.0 / nx as f64; nx]);
            continue;
        }
        let mut a: Vec<Vec<f64>> = (0..ny)
            .map(|y| (0..nx).map(|x| av.row(yp, x)[y]).collect())
            .collect();
        a.push(vec![1.0; nx]);
        let mut b = target.row(yp).to_vec();
        b.push(1.0);
        h1 += pi[yp]
            * (0..strategy_channel.in_size())
                .map(|u| csi_result.policy.row(yp)[u] * entropy_bits(strategy_channel.row(yp, u)))
                .sum::<f64>();
        let cost: Vec<f64> = (0..nx).map(|x| -entropy_bits(av.row(yp, x))).collect();
        match DenseLp::new(a, b, cfg.lp_tolerance).and_then(|mut lp| Ok(lp.maximize(&cost)?.x)) {
            Ok(mut p) => {
                let total: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= total);
                for (y, &want) in target.row(yp).iter().enumerate() {
                    let got: f64 = (0..nx).map(|x| p[x] * av.row(yp, x)[y]).sum();
                    mismatch = mismatch.max((got - want).abs());
                }
                h2 += pi[yp] * p.iter().zip(&cost).map(|(w, c)| -w * c).sum::<f64>();
                rows.push(p);
            }
            Err(Error::Infeasible) => {
                feasible = false;
                mismatch = f64::INFINITY;
                rows.push(vec![1.0 / nx as f64; nx]);
            }
            Err(e) => return Err(e),
        }
    }

    let entropy_slack = if feasible { h1 - h2 } else { f64::NAN };
    if feasible && mismatch <= KERNEL_MATCH_TOL && entropy_slack >= -ENTROPY_TOL {
        Ok(CsiCertificate {
            status: CertificateStatus::NoGainCertified,
            p2_policy: Some(Policy::new(rows)?),
            max_kernel_mismatch: mismatch,
            entropy_slack,
        })
    } else {
        Ok(CsiCertificate {
            status: CertificateStatus::NoCertificateFound,
            p2_policy: None,
            max_kernel_mismatch: mismatch,
            entropy_slack,
        })
    }
}
