use nalgebra::DVector;

use crate::error::{Error, Result};

/// Empirical convergence order from the last admissible window of four iterates:
///
/// `q = ln(|x3 - x2| / |x2 - x1|) / ln(|x2 - x1| / |x1 - x0|)`.
///
/// Windows containing a difference below `100 eps |x|` (round-off level) or
/// a degenerate denominator are skipped.
pub fn estimate_rate(iterates: &[DVector<f64>]) -> Result<f64> {
    if iterates.len() < 4 {
        return Err(Error::InsufficientIterates);
    }
    let diffs: Vec<f64> = iterates.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
    for t in (0..diffs.len() - 2).rev() {
        let scale = iterates[t..t + 4].iter().map(|x| x.norm()).fold(0.0, f64::max);
        let floor = 100.0 * f64::EPSILON * scale;
        let (d0, d1, d2) = (diffs[t], diffs[t + 1], diffs[t + 2]);
        if d0 <= floor || d1 <= floor || d2 <= floor {
            continue;
        }
        let den = (d1 / d0).ln();
        if den.abs() < 1e-12 {
            continue;
        }
        return Ok((d2 / d1).ln() / den);
    }
    Err(Error::InsufficientIterates)
}
