use crate::error::{Error, Result};

/// `H(p)` in bits with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// `I(X;Y|Y')` of the noisy-POST(0.5, η) channel under the policy
/// `a = P(X=1|Y'=0)`, `b = P(X=0|Y'=1)`.
pub fn noisy_post_objective(a: f64, b: f64, eta: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b), ("eta", eta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ParameterOutOfRange { name, value: v });
        }
    }
    let denom = a + b + eta;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let h = binary_entropy;
    let first = (b + eta) / denom * (h(a / 2.0) - a);
    let second = a / denom
        * (h((b + eta) / 2.0) - b * h((1.0 - eta) / 2.0) - (1.0 - b) * h(eta / 2.0));
    Ok(first + second)
}
