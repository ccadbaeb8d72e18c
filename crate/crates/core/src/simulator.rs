//! Monte Carlo run of the closed loop: state from the previous output, input
//! (or strategy) from the policy, output from the channel law.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{check_distribution, NostChannel, StrategySet};
use crate::error::{Error, Result};
use crate::markov::Policy;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub steps: u64,
    pub seed: u64,
    pub initial_output: usize,
    /// Distribution of the first state; uniform when `None`.
    pub initial_state_dist: Option<Vec<f64>>,
    /// Discarded leading steps; `steps / 10` when `None`.
    pub burn_in: Option<u64>,
}

impl SimConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        Self {
            steps,
            seed,
            initial_output: 0,
            initial_state_dist: None,
            burn_in: None,
        }
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.steps / 10)
    }
}

/// What the encoder draws after each output.
#[derive(Debug, Clone, Copy)]
pub enum SimPolicy<'a> {
    /// `P(x|y')` over channel inputs.
    Inputs(&'a Policy),
    /// `P(u|y')` over strategies; the input is `f(u, s')`.
    Strategies {
        policy: &'a Policy,
        strategies: &'a StrategySet,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub empirical_pi: Vec<f64>,
    pub empirical_rate_bits: f64,
    /// Transition counts `[y'][a][y]` after burn-in.
    pub counts: Vec<Vec<Vec<u64>>>,
}

impl SimReport {
    /// Counts as CSV with columns `y_prev,a,y,count`.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("y_prev,a,y,count\n");
        for (yp, per_a) in self.counts.iter().enumerate() {
            for (a, per_y) in per_a.iter().enumerate() {
                for (y, n) in per_y.iter().enumerate() {
                    out.push_str(&format!("{yp},{a},{y},{n}\n"));
                }
            }
        }
        out
    }
}

fn sampler(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidDistribution(format!("cannot sample from {weights:?}: {e}")))
}

/// Plug-in estimate of `I(A;Y|Y')` in bits from transition counts.
pub fn plug_in_information(counts: &[Vec<Vec<u64>>]) -> f64 {
    let total: u64 = counts.iter().flatten().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let mut info = 0.0;
    for per_a in counts {
        let n_prev: u64 = per_a.iter().flatten().sum();
        let ny = per_a.first().map_or(0, Vec::len);
        let n_prev_y: Vec<u64> = (0..ny).map(|y| per_a.iter().map(|r| r[y]).sum()).collect();
        for per_y in per_a {
            let n_prev_a: u64 = per_y.iter().sum();
            for (y, &n) in per_y.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let ratio = (n as f64 * n_prev as f64) / (n_prev_a as f64 * n_prev_y[y] as f64);
                info += n as f64 / total * ratio.log2();
            }
        }
    }
    info.max(0.0)
}

pub fn simulate_policy(c: &NostChannel, policy: SimPolicy<'_>, cfg: &SimConfig) -> Result<SimReport> {
    let alph = c.alphabets();
    let (policy, strategies) = match policy {
        SimPolicy::Inputs(p) => {
            if p.in_size() != alph.x_size {
                return Err(Error::DimensionMismatch(format!(
                    "policy has {} input letters, channel has {}",
                    p.in_size(),
                    alph.x_size
                )));
            }
            (p, None)
        }
        SimPolicy::Strategies { policy, strategies } => {
            if strategies.x_size() != alph.x_size
                || strategies.s_size() != alph.s_size
                || policy.in_size() != strategies.len()
            {
                return Err(Error::DimensionMismatch(
                    "policy, strategies and channel alphabets disagree".into(),
                ));
            }
            (policy, Some(strategies))
        }
    };
    if policy.y_size() != alph.y_size {
        return Err(Error::DimensionMismatch(format!(
            "policy has {} rows, channel has {} outputs",
            policy.y_size(),
            alph.y_size
        )));
    }
    if cfg.initial_output >= alph.y_size {
        return Err(Error::DimensionMismatch(format!(
            "initial output {} outside the output alphabet",
            cfg.initial_output
        )));
    }
    let burn_in = cfg.burn_in();
    if cfg.steps == 0 || burn_in >= cfg.steps {
        return Err(Error::DimensionMismatch(
            "need steps > 0 and burn_in < steps".into(),
        ));
    }
    let initial_state = match &cfg.initial_state_dist {
        Some(d) => {
            if d.len() != alph.s_size {
                return Err(Error::DimensionMismatch("initial state distribution length".into()));
            }
            check_distribution(d, "initial state distribution")?;
            d.clone()
        }
        None => vec![1.0 / alph.s_size as f64; alph.s_size],
    };

    let initial_state = sampler(&initial_state)?;
    let state_given_output = (0..alph.y_size)
        .map(|y| sampler(c.state_row(y)))
        .collect::<Result<Vec<_>>>()?;
    let letter_given_output = (0..alph.y_size)
        .map(|y| sampler(policy.row(y)))
        .collect::<Result<Vec<_>>>()?;
    let output = (0..alph.s_size * alph.x_size)
        .map(|k| sampler(c.output_row(k / alph.x_size, k % alph.x_size)))
        .collect::<Result<Vec<_>>>()?;

    let n_letters = policy.in_size();
    let mut counts = vec![vec![vec![0u64; alph.y_size]; n_letters]; alph.y_size];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut y_prev = cfg.initial_output;
    for step in 0..cfg.steps {
        let s_prev = if step == 0 {
            initial_state.sample(&mut rng)
        } else {
            state_given_output[y_prev].sample(&mut rng)
        };
        let letter = letter_given_output[y_prev].sample(&mut rng);
        let x = match strategies {
            Some(set) => set.get(letter).input(s_prev),
            None => letter,
        };
        let y = output[s_prev * alph.x_size + x].sample(&mut rng);
        if step >= burn_in {
            counts[y_prev][letter][y] += 1;
        }
        y_prev = y;
    }

    let kept = (cfg.steps - burn_in) as f64;
    let empirical_pi = counts
        .iter()
        .map(|per_a| per_a.iter().flatten().sum::<u64>() as f64 / kept)
        .collect();
    Ok(SimReport {
        steps: cfg.steps,
        burn_in,
        seed: cfg.seed,
        empirical_pi,
        empirical_rate_bits: plug_in_information(&counts),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_noisy_post;

    #[test]
    fn counts_add_up() {
        let c = make_noisy_post(0.5, 0.3).unwrap();
        let policy = Policy::uniform(2, 2);
        let report = simulate_policy(&c, SimPolicy::Inputs(&policy), &SimConfig::new(10_000, 7)).unwrap();
        let total: u64 = report.counts.iter().flatten().flatten().sum();
        assert_eq!(total, 9_000);
        assert!((report.empirical_pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plug_in_of_independent_counts_is_zero() {
        let counts = vec![vec![vec![10, 30], vec![20, 60]], vec![vec![5, 5], vec![7, 7]]];
        assert!(plug_in_information(&counts).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_policy() {
        let c = make_noisy_post(0.5, 0.3).unwrap();
        let policy = Policy::uniform(2, 3);
        assert!(simulate_policy(&c, SimPolicy::Inputs(&policy), &SimConfig::new(100, 1)).is_err());
        let policy = Policy::uniform(2, 2);
        assert!(simulate_policy(&c, SimPolicy::Inputs(&policy), &SimConfig::new(0, 1)).is_err());
    }

    #[test]
    fn csv_has_one_line_per_cell() {
        let c = make_noisy_post(0.5, 0.0).unwrap();
        let policy = Policy::uniform(2, 2);
        let report = simulate_policy(&c, SimPolicy::Inputs(&policy), &SimConfig::new(100, 3)).unwrap();
        let csv = report.counts_csv();
        assert_eq!(csv.lines().count(), 1 + 8);
        assert!(csv.starts_with("y_prev,a,y,count\n"));
    }
}
