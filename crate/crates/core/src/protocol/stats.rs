//! Exact binomial tails for the crop-probe significance test.

use crate::error::{Error, Result};

/// `ln(i!)` for `i` in `0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(acc);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

/// `P[X >= k]` for every `k` in `0..=n + 1`, where `X ~ Binomial(n, p)`.
/// Summed from the top so small tails keep full relative precision.
pub fn binomial_upper_tails(n: usize, p: f64) -> Vec<f64> {
    let lf = ln_factorials(n);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let pmf = |j: usize| {
        let ln = lf[n] - lf[j] - lf[n - j] + j as f64 * lp + (n - j) as f64 * lq;
        ln.exp()
    };
    let mut tails = vec![0.0; n + 2];
    for j in (0..=n).rev() {
        tails[j] = (tails[j + 1] + pmf(j)).min(1.0);
    }
    tails
}

fn check_inputs(n_test: usize, num_classes: usize, confidence: f64) -> Result<()> {
    if n_test == 0 {
        return Err(Error::InvalidAudit("chance threshold needs n_test >= 1".into()));
    }
    if num_classes < 2 {
        return Err(Error::InvalidAudit("chance threshold needs K >= 2".into()));
    }
    if !(0.5..1.0).contains(&confidence) {
        return Err(Error::InvalidAudit(format!(
            "confidence must lie in [0.5, 1), got {confidence}"
        )));
    }
    Ok(())
}

/// Smallest count `k` with `P[Binomial(n, 1/K) >= k] <= 1 - confidence`.
/// Always exists because the tail at `n + 1` is zero.
pub fn critical_count(n_test: usize, num_classes: usize, confidence: f64) -> Result<usize> {
    check_inputs(n_test, num_classes, confidence)?;
    let alpha = 1.0 - confidence;
    let tails = binomial_upper_tails(n_test, 1.0 / num_classes as f64);
    Ok(tails.iter().position(|&t| t <= alpha).unwrap_or(n_test + 1))
}

/// Accuracy threshold of the one-sided exact binomial test against chance
/// `1/K`: an observed accuracy is significant iff it is strictly greater.
/// Equals `(k* - 1) / n` for the critical count `k*`.
pub fn chance_threshold(n_test: usize, num_classes: usize, confidence: f64) -> Result<f64> {
    let k = critical_count(n_test, num_classes, confidence)?;
    Ok((k as f64 - 1.0) / n_test as f64)
}
