//! Exhaustive search over stationary policies on a uniform grid.

use crate::channel::AveragedChannel;
use crate::error::{Error, Result};
use crate::markov::{
    conditional_mutual_information, joint_from_policy, Policy,
};

pub const GRID_POINT_LIMIT: f64 = 1e8;

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Maximum of `I(A;Y|Y')` over policies whose rows lie on the grid with
/// spacing `step`. Policies with several stationary distributions are
/// skipped.
pub fn grid_oracle(av: &AveragedChannel, step: f64) -> Result<f64> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "step",
            value: step,
        });
    }
    let exponent = (av.y_size() * (av.in_size() - 1)) as f64;
    let points = (1.0 / step + 1.0).powf(exponent);
    if points > GRID_POINT_LIMIT {
        return Err(Error::GridTooLarge { points });
    }
    let divisions = (1.0 / step).round() as usize;
    let rows: Vec<Vec<f64>> = compositions(divisions, av.in_size())
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / divisions as f64).collect())
        .collect();

    let ny = av.y_size();
    let mut choice = vec![0usize; ny];
    let mut best = 0.0f64;
    loop {
        let policy = Policy::new(choice.iter().map(|&i| rows[i].clone()).collect())?;
        match joint_from_policy(&policy, av) {
            Ok(joint) => best = best.max(conditional_mutual_information(&joint, av)?),
            Err(Error::NonUniqueStationary { .. } | Error::StationaryResidual { .. }) => {}
            Err(e) => return Err(e),
        }
        // Odometer over the grid rows.
        let mut k = 0;
        loop {
            if k == ny {
                return Ok(best);
            }
            choice[k] += 1;
            if choice[k] < rows.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{average_channel, make_noisy_post};

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(4, 1), vec![vec![4]]);
        assert_eq!(compositions(2, 2).len(), 3);
        assert_eq!(compositions(10, 3).len(), 66);
        assert!(compositions(5, 3).iter().all(|c| c.iter().sum::<usize>() == 5));
    }

    #[test]
    fn post_grid_value() {
        let av = average_channel(&make_noisy_post(0.5, 0.0).unwrap());
        let v = grid_oracle(&av, 0.005).unwrap();
        assert!((v - 0.32192).abs() < 1e-3, "{v}");
    }

    #[test]
    fn input_independent_kernel_is_zero() {
        let w = vec![vec![0.2, 0.8], vec![0.2, 0.8]];
        let av = AveragedChannel::new(vec![w.clone(), w]).unwrap();
        assert!(grid_oracle(&av, 0.1).unwrap() < 1e-15);
    }

    #[test]
    fn oversized_grid_is_refused() {
        let w = vec![vec![0.25; 4]; 16];
        let av = AveragedChannel::new(vec![w.clone(), w.clone(), w.clone(), w]).unwrap();
        assert!(matches!(
            grid_oracle(&av, 0.01),
            Err(Error::GridTooLarge { .. })
        ));
    }
}
