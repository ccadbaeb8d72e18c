#![allow(dead_code)]

use nostcap::{
    average_channel, check_connectivity, make_iid_state_channel, noisy_post_objective,
    NostChannel,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random distribution on `n` letters; with probability `zero_prob` each
/// entry is forced to zero (at least one entry stays positive).
pub fn random_row(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < zero_prob {
                    0.0
                } else {
                    -rng.gen::<f64>().max(1e-300).ln()
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|p| p / s).collect();
        }
    }
}

pub fn random_channel(rng: &mut ChaCha8Rng, x: usize, y: usize, s: usize, zero_prob: f64) -> NostChannel {
    let q_y = (0..s)
        .map(|_| (0..x).map(|_| random_row(rng, y, zero_prob)).collect())
        .collect();
    let q_s = (0..y).map(|_| random_row(rng, s, zero_prob)).collect();
    NostChannel::new(q_y, q_s).unwrap()
}

pub fn random_connected_channel(rng: &mut ChaCha8Rng, x: usize, y: usize, s: usize) -> NostChannel {
    loop {
        let c = random_channel(rng, x, y, s, 0.15);
        if check_connectivity(&average_channel(&c)).connected {
            return c;
        }
    }
}

pub fn random_iid_channel(rng: &mut ChaCha8Rng, x: usize, y: usize, s: usize) -> NostChannel {
    let q_s = random_row(rng, s, 0.0);
    let q_y = (0..s)
        .map(|_| (0..x).map(|_| random_row(rng, y, 0.15)).collect())
        .collect();
    make_iid_state_channel(&q_s, q_y).unwrap()
}

/// Capacity of the DMC `w[x][y]` in bits by Blahut–Arimoto, stopped when the
/// upper and lower bounds are within `tol`.
pub fn blahut_arimoto(w: &[Vec<f64>], tol: f64) -> f64 {
    let nx = w.len();
    let ny = w[0].len();
    let mut p = vec![1.0 / nx as f64; nx];
    for _ in 0..1_000_000 {
        let q: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| p[x] * w[x][y]).sum())
            .collect();
        // D(W(·|x) || q) in nats.
        let d: Vec<f64> = w
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&q)
                    .filter(|(&wy, _)| wy > 0.0)
                    .map(|(&wy, &qy)| wy * (wy / qy).ln())
                    .sum()
            })
            .collect();
        let lower: f64 = p.iter().zip(&d).map(|(pi, di)| pi * di).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol * std::f64::consts::LN_2 {
            return lower / std::f64::consts::LN_2;
        }
        let z: f64 = p.iter().zip(&d).map(|(pi, di)| pi * di.exp()).sum();
        for (pi, di) in p.iter_mut().zip(&d) {
            *pi *= di.exp() / z;
        }
    }
    panic!("Blahut–Arimoto did not converge");
}

/// Maximum of the noisy-POST closed form over an `(a, b)` grid with the given
/// number of divisions per axis, with the maximizing pair.
pub fn closed_form_grid_max(eta: f64, divisions: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=divisions {
        let a = i as f64 / divisions as f64;
        for j in 0..=divisions {
            let b = j as f64 / divisions as f64;
            if let Ok(v) = noisy_post_objective(a, b, eta) {
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
    }
    best
}
