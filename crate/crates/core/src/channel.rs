//! Cell geometry, user placement, pathloss and ETU tapped-delay-line fading.
//!
//! The channel abstraction produces one [`ChannelRealization`] per 1 ms slot:
//! squared channel magnitudes (pathloss included) per subband and user, plus
//! the per-subband thermal noise power. Inter-cell interference is not
//! modeled; the cell is alone and noise is white.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::num::{bessel_j0, dbm_to_mw, Real};
use crate::{Error, Result};

/// Scheduling slot duration in seconds.
pub const SLOT_SECONDS: f64 = 1e-3;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Static cell-level parameters: bandwidth, subband grid, BS power budget and
/// the noise floor.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry<R: Real> {
    pub radius_m: R,
    pub bs_power_dbm: R,
    pub bandwidth_hz: R,
    pub num_subbands: usize,
    pub noise_psd_mw_per_hz: R,
    pub carrier_hz: R,
}

impl<R: Real> Default for CellGeometry<R> {
    fn default() -> Self {
        CellGeometry {
            radius_m: R::of(500.0),
            bs_power_dbm: R::of(46.0),
            bandwidth_hz: R::of(10e6),
            num_subbands: 128,
            noise_psd_mw_per_hz: R::of(4e-18),
            carrier_hz: R::of(2e9),
        }
    }
}

impl<R: Real> CellGeometry<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > R::zero()) {
            return Err(Error::Invalid("cell radius must be positive".into()));
        }
        if self.num_subbands == 0 {
            return Err(Error::Invalid("num_subbands must be >= 1".into()));
        }
        if !(self.bandwidth_hz > R::zero()) {
            return Err(Error::Invalid("bandwidth must be positive".into()));
        }
        if !(self.noise_psd_mw_per_hz > R::zero()) {
            return Err(Error::Invalid("noise PSD must be positive".into()));
        }
        Ok(())
    }

    /// Bandwidth of one subband, B/S.
    pub fn subband_hz(&self) -> R {
        self.bandwidth_hz / R::of(self.num_subbands as f64)
    }

    /// Noise power per subband in mW: PSD x B/S, identical for every user.
    pub fn noise_mw(&self) -> R {
        self.noise_psd_mw_per_hz * self.subband_hz()
    }

    /// Total BS power budget in mW.
    pub fn pmax_mw(&self) -> R {
        dbm_to_mw(self.bs_power_dbm)
    }
}

/// A user dropped in the cell with its (deterministic) distance pathloss.
#[derive(Clone, Debug, PartialEq)]
pub struct UserPlacement<R: Real> {
    pub user_id: usize,
    pub distance_m: R,
    pub pathloss_linear: R,
}

/// Distance-dependent pathloss in dB: 128.1 + 37.6 log10(d_km).
pub fn pathloss_db<R: Real>(distance_m: R) -> Result<R> {
    if !(distance_m > R::zero()) {
        return Err(Error::Invalid(format!(
            "pathloss undefined for nonpositive distance {distance_m}"
        )));
    }
    Ok(R::of(128.1) + R::of(37.6) * (distance_m / R::of(1000.0)).log10())
}

/// Linear power gain 10^(-PL(dB)/10).
pub fn pathloss_linear<R: Real>(distance_m: R) -> Result<R> {
    let db = pathloss_db(distance_m)?;
    Ok(R::of(10.0).powf(-db / R::of(10.0)))
}

/// Drops `k` users uniformly over the cell area, keeping them outside the
/// minimum distance (pathloss singularity guard). Area-uniform means the
/// squared radius is uniform on [min^2, radius^2].
pub fn place_users<R: Real>(
    k: usize,
    geometry: &CellGeometry<R>,
    min_distance_m: R,
    rng: &mut impl Rng,
) -> Result<Vec<UserPlacement<R>>> {
    if k == 0 {
        return Err(Error::Invalid("num_users must be >= 1".into()));
    }
    if !(min_distance_m > R::zero() && min_distance_m < geometry.radius_m) {
        return Err(Error::Invalid(
            "min distance must lie strictly inside the cell".into(),
        ));
    }
    let r2_min = min_distance_m * min_distance_m;
    let r2_max = geometry.radius_m * geometry.radius_m;
    (0..k)
        .map(|user_id| {
            let u = R::of(rng.random::<f64>());
            let distance_m = (r2_min + u * (r2_max - r2_min)).sqrt();
            Ok(UserPlacement {
                user_id,
                distance_m,
                pathloss_linear: pathloss_linear(distance_m)?,
            })
        })
        .collect()
}

/// Doppler frequency for a mobile at `velocity_kmh` and the given carrier.
pub fn doppler_hz(velocity_kmh: f64, carrier_hz: f64) -> f64 {
    velocity_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

/// Tapped-delay-line power-delay profile with unit total power.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerDelayProfile {
    pub delays_s: Vec<f64>,
    /// Linear tap powers, normalized to sum to 1.
    pub powers: Vec<f64>,
}

impl PowerDelayProfile {
    pub fn new(delays_s: Vec<f64>, powers_db: Vec<f64>) -> Self {
        assert_eq!(delays_s.len(), powers_db.len());
        let mut powers: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = powers.iter().sum();
        for p in &mut powers {
            *p /= total;
        }
        PowerDelayProfile { delays_s, powers }
    }

    /// 3GPP Extended Typical Urban, 9 taps.
    pub fn etu() -> Self {
        let delays_ns = [
            0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0,
        ];
        let powers_db = [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0];
        PowerDelayProfile::new(
            delays_ns.iter().map(|d| d * 1e-9).collect(),
            powers_db.to_vec(),
        )
    }

    /// Single-tap flat profile, handy in tests.
    pub fn flat() -> Self {
        PowerDelayProfile {
            delays_s: vec![0.0],
            powers: vec![1.0],
        }
    }
}

/// Temporal evolution model for the per-tap Rayleigh processes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingModel {
    /// First-order autoregression whose lag-1 correlation matches the Jakes
    /// value J0(2 pi f_d dt). Default.
    Ar1,
    /// Clarke/Jakes sum of sinusoids, 16 oscillators per tap.
    SumOfSinusoids,
}

/// One slot of channel state: squared magnitudes (pathloss included) for all
/// subbands and users, and the common per-subband noise power.
#[derive(Clone, Debug)]
pub struct ChannelRealization<R: Real> {
    /// 1-based slot index.
    pub slot: usize,
    /// `gain2[s][k]` = pathloss_k * |fade(s,k)|^2, linear.
    pub gain2: Vec<Vec<R>>,
    noise_mw: R,
}

impl<R: Real> ChannelRealization<R> {
    /// n(s,k); uniform across subbands and users in the single-cell model.
    pub fn noise_mw(&self, _subband: usize, _user: usize) -> R {
        self.noise_mw
    }

    pub fn num_subbands(&self) -> usize {
        self.gain2.len()
    }

    pub fn num_users(&self) -> usize {
        self.gain2.first().map_or(0, Vec::len)
    }
}

struct Oscillator {
    /// f_d cos(alpha), Hz.
    freq: f64,
    phase: f64,
}

/// Sequential per-drop fading generator. One instance per drop; instances
/// are independent, a single instance must not be shared across threads.
pub struct FadingProcess<R: Real> {
    profile: PowerDelayProfile,
    model: FadingModel,
    /// Jakes lag-1 autocorrelation of the complex tap processes.
    rho: f64,
    rng: ChaCha8Rng,
    /// AR(1) state, `[user][tap]`.
    taps: Vec<Vec<Complex<f64>>>,
    oscillators: Vec<Vec<Vec<Oscillator>>>,
    /// `exp(-j 2 pi f_s tau_t)` for subband center frequencies, `[s][tap]`.
    subband_phase: Vec<Vec<Complex<f64>>>,
    noise_mw: R,
    slots_emitted: usize,
}

const NUM_OSCILLATORS: usize = 16;

impl<R: Real> FadingProcess<R> {
    pub fn new(
        seed: u64,
        num_users: usize,
        geometry: &CellGeometry<R>,
        profile: PowerDelayProfile,
        doppler_hz: f64,
        model: FadingModel,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // the J0 approximation can stray a hair outside [-1, 1]
        let rho =
            bessel_j0(2.0 * std::f64::consts::PI * doppler_hz * SLOT_SECONDS).clamp(-1.0, 1.0);
        let num_taps = profile.delays_s.len();
        let subband_hz = geometry.subband_hz().as_f64();
        let subband_phase = (0..geometry.num_subbands)
            .map(|s| {
                let f_center = (s as f64 + 0.5) * subband_hz;
                profile
                    .delays_s
                    .iter()
                    .map(|tau| {
                        Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * f_center * tau)
                    })
                    .collect()
            })
            .collect();

        let mut taps = Vec::new();
        let mut oscillators = Vec::new();
        match model {
            FadingModel::Ar1 => {
                // Stationary complex Gaussian start, variance = tap power.
                taps = (0..num_users)
                    .map(|_| {
                        (0..num_taps)
                            .map(|t| {
                                let sigma = (profile.powers[t] / 2.0).sqrt();
                                let re: f64 = rng.sample(StandardNormal);
                                let im: f64 = rng.sample(StandardNormal);
                                Complex::new(re * sigma, im * sigma)
                            })
                            .collect()
                    })
                    .collect();
            }
            FadingModel::SumOfSinusoids => {
                oscillators = (0..num_users)
                    .map(|_| {
                        (0..num_taps)
                            .map(|_| {
                                (0..NUM_OSCILLATORS)
                                    .map(|_| Oscillator {
                                        freq: doppler_hz
                                            * (rng.random::<f64>() * std::f64::consts::TAU).cos(),
                                        phase: rng.random::<f64>() * std::f64::consts::TAU,
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
            }
        }

        FadingProcess {
            profile,
            model,
            rho,
            rng,
            taps,
            oscillators,
            subband_phase,
            noise_mw: geometry.noise_mw(),
            slots_emitted: 0,
        }
    }

    fn advance_ar1(&mut self) {
        let rho = self.rho;
        let innov = (1.0 - rho * rho).max(0.0).sqrt();
        for user_taps in &mut self.taps {
            for (t, g) in user_taps.iter_mut().enumerate() {
                let sigma = (self.profile.powers[t] / 2.0).sqrt();
                let re: f64 = self.rng.sample(StandardNormal);
                let im: f64 = self.rng.sample(StandardNormal);
                *g = *g * rho + Complex::new(re * sigma, im * sigma) * innov;
            }
        }
    }

    fn tap_value(&self, user: usize, tap: usize, slot0: usize) -> Complex<f64> {
        match self.model {
            FadingModel::Ar1 => self.taps[user][tap],
            FadingModel::SumOfSinusoids => {
                let t = slot0 as f64 * SLOT_SECONDS;
                let scale = (self.profile.powers[tap] / NUM_OSCILLATORS as f64).sqrt();
                self.oscillators[user][tap]
                    .iter()
                    .map(|o| {
                        Complex::from_polar(scale, std::f64::consts::TAU * o.freq * t + o.phase)
                    })
                    .sum()
            }
        }
    }

    /// Advances the fading by one slot and samples the frequency response at
    /// the subband centers. Gains include pathloss.
    pub fn next_realization(&mut self, placements: &[UserPlacement<R>]) -> ChannelRealization<R> {
        if self.slots_emitted > 0 {
            if let FadingModel::Ar1 = self.model {
                self.advance_ar1();
            }
        }
        let slot0 = self.slots_emitted;
        self.slots_emitted += 1;

        let num_taps = self.profile.delays_s.len();
        let tap_values: Vec<Vec<Complex<f64>>> = (0..placements.len())
            .map(|u| (0..num_taps).map(|t| self.tap_value(u, t, slot0)).collect())
            .collect();

        let gain2 = self
            .subband_phase
            .iter()
            .map(|phases| {
                placements
                    .iter()
                    .enumerate()
                    .map(|(u, p)| {
                        let h: Complex<f64> = phases
                            .iter()
                            .zip(&tap_values[u])
                            .map(|(ph, g)| ph * g)
                            .sum();
                        let fade2 = h.norm_sqr().max(f64::MIN_POSITIVE);
                        p.pathloss_linear * R::of(fade2)
                    })
                    .collect()
            })
            .collect();

        ChannelRealization {
            slot: self.slots_emitted,
            gain2,
            noise_mw: self.noise_mw,
        }
    }
}
