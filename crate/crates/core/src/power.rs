//! Power budget split: equal repartition across subbands, FTPA within one.

use crate::channel::CellGeometry;
use crate::num::Real;
use crate::{Error, Result};

/// Per-subband power under equal repartition of the BS budget: P_max / S, mW.
pub fn equal_subband_power<R: Real>(geometry: &CellGeometry<R>) -> R {
    geometry.pmax_mw() / R::of(geometry.num_subbands as f64)
}

/// Fractional transmit power allocation among the users multiplexed on one
/// subband. User `i` receives
///
///   P_i = P_s * g_i^(-alpha) / sum_j g_j^(-alpha)
///
/// where `g` are the noise-normalized squared channel gains. With alpha > 0
/// weaker users get more power; alpha = 0 is an equal split.
///
/// Returns powers aligned with `norm_gains`.
pub fn ftpa_allocate<R: Real>(norm_gains: &[R], p_subband: R, alpha: R) -> Result<Vec<R>> {
    if norm_gains.is_empty() {
        return Err(Error::Invalid("FTPA needs at least one user".into()));
    }
    for &g in norm_gains {
        if !(g > R::zero()) || !g.is_finite() {
            return Err(Error::Invalid(format!(
                "FTPA requires strictly positive gains, got {g}"
            )));
        }
    }
    let weights: Vec<R> = norm_gains.iter().map(|g| g.powf(-alpha)).collect();
    let total = weights.iter().fold(R::zero(), |a, &w| a + w);
    Ok(weights.iter().map(|&w| p_subband * w / total).collect())
}
