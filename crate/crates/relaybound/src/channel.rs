//! SINR-based packet success model and its noise-floor calibration.
//!
//! Every link uses the same narrowband model: received power falls off as
//! `d^-alpha`, concurrent transmitters add their received power to the noise
//! floor, and a packet survives only if all of its bits survive independent
//! BPSK demodulation at the resulting SINR. The noise floor is not a free
//! parameter; it is calibrated so that a reference link lands on a prescribed
//! mid-range success probability, which pins the scale of every distance used
//! by the scenarios.

use thiserror::Error;

/// Transmit power per node in milliwatts.
pub const TX_POWER_MW: f64 = 0.15;
/// Path-loss exponent.
pub const PATH_LOSS_EXP: f64 = 3.0;
/// Payload length over which per-bit successes are compounded.
pub const PACKET_BITS: u32 = 1024;

/// Reference distance (meters) used to anchor the noise floor.
pub const CAL_DISTANCE_M: f64 = 310.0;
/// Packet success probability required at [`CAL_DISTANCE_M`].
pub const CAL_TARGET: f64 = 0.504;
/// Tolerance on the calibrated success probability.
pub const CAL_TOL: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("link distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

/// Radio model shared by the analytic criteria and the frame simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub tx_power_mw: f64,
    pub path_loss_exp: f64,
    pub noise_floor_mw: f64,
    pub packet_bits: u32,
}

impl ChannelModel {
    /// Model with an explicit noise floor; mostly useful in tests.
    pub fn with_noise(noise_floor_mw: f64) -> Self {
        ChannelModel {
            tx_power_mw: TX_POWER_MW,
            path_loss_exp: PATH_LOSS_EXP,
            noise_floor_mw,
            packet_bits: PACKET_BITS,
        }
    }

    /// Calibrates the noise floor so an interference-free link at
    /// [`CAL_DISTANCE_M`] has success probability [`CAL_TARGET`], then checks
    /// that half the distance is near-perfect (>= 0.99) and double the
    /// distance is near-dead (<= 0.01).
    pub fn calibrated() -> Result<Self, ChannelError> {
        // Packet success is monotone decreasing in the noise floor, so a
        // plain bisection on log-spaced brackets converges safely.
        let mut lo = 1e-18_f64;
        let mut hi = 1.0_f64;
        let p_at = |noise: f64| {
            ChannelModel::with_noise(noise)
                .link_success(CAL_DISTANCE_M, &[])
                .expect("positive calibration distance")
        };
        if p_at(lo) < CAL_TARGET || p_at(hi) > CAL_TARGET {
            return Err(ChannelError::Calibration(
                "target not bracketed by noise floor range".into(),
            ));
        }
        for _ in 0..200 {
            let mid = (lo.ln() + hi.ln()) / 2.0;
            let mid = mid.exp();
            if p_at(mid) >= CAL_TARGET {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) / lo < 1e-14 {
                break;
            }
        }
        let noise = (lo.ln() + hi.ln()) / 2.0;
        let model = ChannelModel::with_noise(noise.exp());
        let p_ref = model.link_success(CAL_DISTANCE_M, &[])?;
        if (p_ref - CAL_TARGET).abs() > CAL_TOL {
            return Err(ChannelError::Calibration(format!(
                "reference link converged to {p_ref}, want {CAL_TARGET} +/- {CAL_TOL}"
            )));
        }
        let p_near = model.link_success(CAL_DISTANCE_M / 2.0, &[])?;
        let p_far = model.link_success(CAL_DISTANCE_M * 2.0, &[])?;
        if p_near < 0.99 || p_far > 0.01 {
            return Err(ChannelError::Calibration(format!(
                "sanity points out of range: p({}) = {p_near}, p({}) = {p_far}",
                CAL_DISTANCE_M / 2.0,
                CAL_DISTANCE_M * 2.0
            )));
        }
        Ok(model)
    }

    /// Received power in mW at distance `d` meters.
    fn rx_power(&self, d: f64) -> f64 {
        self.tx_power_mw * d.powf(-self.path_loss_exp)
    }

    /// Success probability of one bit at the given SINR (coherent BPSK,
    /// `Q(sqrt(2 * sinr))`).
    pub fn bit_success(&self, sinr: f64) -> f64 {
        1.0 - 0.5 * libm::erfc(sinr.sqrt())
    }

    /// Packet success probability over a link of `d` meters while the given
    /// interferers (distances from the *receiver*, meters) transmit
    /// concurrently. Errors if any distance is non-positive.
    pub fn link_success(&self, d: f64, interferer_d: &[f64]) -> Result<f64, ChannelError> {
        if d <= 0.0 {
            return Err(ChannelError::NonPositiveDistance(d));
        }
        for &di in interferer_d {
            if di <= 0.0 {
                return Err(ChannelError::NonPositiveDistance(di));
            }
        }
        Ok(self.link(d, interferer_d))
    }

    /// Infallible variant for pre-validated geometry (distances are clamped
    /// positive by the topology layer).
    pub(crate) fn link(&self, d: f64, interferer_d: &[f64]) -> f64 {
        debug_assert!(d > 0.0);
        let interference: f64 = interferer_d.iter().map(|&di| self.rx_power(di)).sum();
        let sinr = self.rx_power(d) / (self.noise_floor_mw + interference);
        let bit = self.bit_success(sinr);
        if bit <= 0.0 {
            return 0.0;
        }
        // (bit)^n via exp(n * ln(bit)) keeps precision when bit is close to 1.
        (f64::from(self.packet_bits) * bit.ln()).exp()
    }
}

/// A potential interferer on some link, described by its distance from the
/// receiver and the probability that it is transmitting in the slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub distance_m: f64,
    pub activity: f64,
}

/// Packet success probability averaged over the on/off states of the given
/// interferers, conditional on the receiver listening. Enumerates all
/// interferer subsets, weighting each by its joint activity probability.
pub fn averaged_success(model: &ChannelModel, d: f64, interferers: &[Interferer]) -> f64 {
    assert!(
        interferers.len() <= 16,
        "subset enumeration over {} interferers",
        interferers.len()
    );
    let n = interferers.len();
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    let mut active = Vec::with_capacity(n);
    for mask in 0..(1_u32 << n) {
        let mut w = 1.0;
        active.clear();
        for (k, it) in interferers.iter().enumerate() {
            if mask & (1 << k) != 0 {
                w *= it.activity;
                active.push(it.distance_m);
            } else {
                w *= 1.0 - it.activity;
            }
        }
        if w > 0.0 {
            total += w * model.link(d, &active);
        }
        weight_sum += w;
    }
    debug_assert!(
        (weight_sum - 1.0).abs() < 1e-12,
        "subset weights sum to {weight_sum}"
    );
    total
}

/// Effective per-slot reception probability on a link: the averaged success
/// over interferer states, additionally discounted by the probability that
/// the receiver is itself busy transmitting in the slot (`rx_busy`).
pub fn effective_success(
    model: &ChannelModel,
    d: f64,
    interferers: &[Interferer],
    rx_busy: f64,
) -> f64 {
    let listen = 1.0 - rx_busy.min(1.0);
    if listen <= 0.0 {
        return 0.0;
    }
    listen * averaged_success(model, d, interferers)
}
