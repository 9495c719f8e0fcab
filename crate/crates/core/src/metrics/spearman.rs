use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::LossSurface;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const DEFAULT_PERMUTATION_SEED: u64 = 0x5eed_5eed;

/// Default number of history levels correlated against final loss (levels
/// `0..=50`).
pub const DEFAULT_LEVELS: usize = 51;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub rho: f64,
    /// Two-sided permutation p-value; never below `1 / (permutations + 1)`.
    pub p_value: f64,
    pub n: usize,
}

/// 1-based ranks, ties receiving the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    spearman_with(x, y, DEFAULT_PERMUTATIONS, DEFAULT_PERMUTATION_SEED)
}

/// Spearman's rho with a seeded two-sided permutation test. Permutation `i`
/// draws from stream `i` of a ChaCha generator keyed by `seed`, so the p-value
/// does not depend on how the permutations are scheduled.
pub fn spearman_with(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("spearman inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!("need at least 3 samples, got {}", x.len())));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = pearson(&rx, &ry).ok_or_else(|| Error::UndefinedCorrelation("constant input".into()))?;

    let threshold = rho.abs() - 1e-12;
    let extreme: usize = (0..permutations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut perm = ry.clone();
            perm.shuffle(&mut rng);
            usize::from(pearson(&rx, &perm).is_some_and(|r| r.abs() >= threshold))
        })
        .sum();
    Ok(CorrelationResult {
        rho,
        p_value: (extreme + 1) as f64 / (permutations + 1) as f64,
        n: x.len(),
    })
}

/// Correlation between history level and last-iteration loss over the first
/// `levels` history levels.
pub fn final_loss_vs_history(surface: &LossSurface, levels: usize) -> Result<CorrelationResult> {
    let last = surface
        .last_row()
        .ok_or_else(|| Error::Shape("loss surface has no iterations".into()))?;
    if levels > last.len() {
        return Err(Error::Shape(format!(
            "requested {levels} history levels, surface has {}",
            last.len()
        )));
    }
    let h: Vec<f64> = (0..levels).map(|l| l as f64).collect();
    spearman(&h, &last[..levels])
}
