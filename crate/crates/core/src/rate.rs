//! SIC decoding order and per-user achievable rates on one subband.

use crate::num::Real;

/// Users sorted in increasing order of noise-normalized gain h^2/n, the SIC
/// decoding order. Exact gain ties fall back to ascending user id.
///
/// `norm_gains[i]` belongs to `users[i]`.
pub fn sic_order<R: Real>(users: &[usize], norm_gains: &[R]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..users.len()).collect();
    idx.sort_by(|&a, &b| {
        norm_gains[a]
            .partial_cmp(&norm_gains[b])
            .expect("gains are finite")
            .then(users[a].cmp(&users[b]))
    });
    idx.into_iter().map(|i| users[i]).collect()
}

/// Shannon rate of one link in bps.
fn shannon<R: Real>(subband_hz: R, sinr: R) -> R {
    subband_hz * (R::one() + sinr).log2()
}

/// Achievable rate of every co-scheduled user on one subband, assuming
/// perfect SIC.
///
/// User `i` decodes and removes all users earlier in SIC order (lower
/// normalized gain) and treats later ones as noise, all evaluated at its own
/// channel:
///
///   R_i = B/S log2(1 + g_i P_i / (g_i * sum_{j after i} P_j + n_i))
///
/// Rates are returned aligned with `users`.
pub fn user_rates<R: Real>(
    users: &[usize],
    powers: &[R],
    gain2: &[R],
    noise_mw: R,
    subband_hz: R,
) -> Vec<R> {
    let mut out = vec![R::zero(); users.len()];
    user_rates_into(users, powers, gain2, noise_mw, subband_hz, &mut out);
    out
}

/// Allocation-free variant of [`user_rates`] for hot scheduler loops; writes
/// into `out[..users.len()]`.
pub fn user_rates_into<R: Real>(
    users: &[usize],
    powers: &[R],
    gain2: &[R],
    noise_mw: R,
    subband_hz: R,
    out: &mut [R],
) {
    debug_assert_eq!(users.len(), powers.len());
    debug_assert_eq!(users.len(), gain2.len());
    for i in 0..users.len() {
        let mut interference = R::zero();
        for j in 0..users.len() {
            if j == i {
                continue;
            }
            // strictly-later in SIC order: larger normalized gain, ties
            // resolved by user id as in sic_order
            if (gain2[j] / noise_mw, users[j]) > (gain2[i] / noise_mw, users[i]) {
                interference += gain2[i] * powers[j];
            }
        }
        out[i] = shannon(subband_hz, gain2[i] * powers[i] / (interference + noise_mw));
    }
}
