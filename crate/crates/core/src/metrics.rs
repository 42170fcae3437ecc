//! Link quality: SNR/SINR from wideband channel power, capped Shannon rate,
//! serving-cell selection and coverage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antenna::{aperture_config, band_index, ArrayGeometry, Role};
use crate::channel::{wideband_power, ChannelMatrix};
use crate::error::{invalid, Error, Result};

/// Bandwidth efficiency factor of the capped Shannon rate.
pub const DEFAULT_ALPHA: f64 = 0.57;
/// Maximum spectral efficiency (b/s/Hz).
pub const DEFAULT_RHO_MAX: f64 = 4.8;
/// Thermal noise spectral density (W/Hz).
pub const DEFAULT_N0_W_PER_HZ: f64 = 1e-21;
/// Default transmit power per sector (W).
pub const DEFAULT_TX_POWER_W: f64 = 1.0;
pub const DEFAULT_GAMMA_TH_DB: f64 = 10.0;

const BANDWIDTHS_MHZ: [f64; 4] = [60.0, 200.0, 300.0, 400.0];

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub f_hz: f64,
    pub bandwidth_hz: f64,
    pub bs_array: ArrayGeometry,
    pub ue_array: ArrayGeometry,
    pub alpha: f64,
    pub rho_max: f64,
}

impl BandConfig {
    /// Standard row for one of the supported carriers.
    pub fn for_ghz(ghz: f64) -> Result<Self> {
        let i = band_index(ghz * 1e9)?;
        // Snap to the table value so 8.2 GHz is exactly 8.2e9 Hz.
        let f_hz = [4.6e9, 8.2e9, 15e9, 28e9][i];
        Ok(Self {
            f_hz,
            bandwidth_hz: BANDWIDTHS_MHZ[i] * 1e6,
            bs_array: aperture_config(f_hz, Role::Bs)?,
            ue_array: aperture_config(f_hz, Role::Ue)?,
            alpha: DEFAULT_ALPHA,
            rho_max: DEFAULT_RHO_MAX,
        })
    }

    pub fn all() -> Vec<Self> {
        crate::antenna::SUPPORTED_BANDS_GHZ
            .iter()
            .map(|g| Self::for_ghz(*g).unwrap())
            .collect()
    }

    pub fn ghz(&self) -> f64 {
        self.f_hz / 1e9
    }

    /// Largest achievable rate (b/s).
    pub fn rate_cap(&self) -> f64 {
        self.bandwidth_hz * self.rho_max
    }

    pub fn validate(&self) -> Result<()> {
        band_index(self.f_hz)?;
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(invalid("bandwidth_mhz", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1]"));
        }
        if !(self.rho_max > 0.0) {
            return Err(invalid("rho_max", "must be positive"));
        }
        self.bs_array.validate()?;
        self.ue_array.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub p_t_w: f64,
    pub n_t: usize,
    pub sigma_n2_w: f64,
    pub p_i_avg_w: f64,
}

impl LinkBudget {
    pub fn new(p_t_w: f64, n_t: usize, sigma_n2_w: f64, p_i_avg_w: f64) -> Result<Self> {
        if !(p_t_w > 0.0) {
            return Err(invalid("tx_power_w", "must be positive"));
        }
        if n_t == 0 {
            return Err(invalid("n_t", "must be at least 1"));
        }
        if !(sigma_n2_w > 0.0) {
            return Err(invalid("noise power", "must be positive"));
        }
        if !(p_i_avg_w >= 0.0) {
            return Err(invalid("interference power", "must be non-negative"));
        }
        Ok(Self {
            p_t_w,
            n_t,
            sigma_n2_w,
            p_i_avg_w,
        })
    }

    pub fn interference_free(&self) -> Self {
        Self {
            p_i_avg_w: 0.0,
            ..*self
        }
    }
}

/// Noise power `N0 * B` (W).
pub fn noise_power(n0_w_per_hz: f64, bandwidth_hz: f64) -> f64 {
    n0_w_per_hz * bandwidth_hz
}

pub fn sinr(h: &ChannelMatrix, lb: &LinkBudget) -> f64 {
    lb.p_t_w / (lb.n_t as f64 * (lb.sigma_n2_w + lb.p_i_avg_w)) * wideband_power(h)
}

pub fn snr(h: &ChannelMatrix, lb: &LinkBudget) -> f64 {
    sinr(h, &lb.interference_free())
}

/// One interfering sector: channel, transmit power and element count.
#[derive(Debug, Clone, Copy)]
pub struct Interferer<'a> {
    pub channel: &'a ChannelMatrix,
    pub p_t_w: f64,
    pub n_t: usize,
}

/// Average interference power received over `n_r` antennas.
pub fn interference_power(interferers: &[Interferer<'_>], n_r: usize) -> f64 {
    interferers
        .iter()
        .map(|j| j.p_t_w / j.n_t as f64 / n_r as f64 * wideband_power(j.channel))
        .sum()
}

/// Capped Shannon rate (b/s).
pub fn rate(gamma: f64, band: &BandConfig) -> f64 {
    let se = band.alpha * (1.0 + gamma.max(0.0)).log2();
    band.bandwidth_hz * band.rho_max.min(se)
}

#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub bs_id: usize,
    pub channel: &'a ChannelMatrix,
    pub p_t_w: f64,
    pub n_t: usize,
}

/// Candidate with the highest interference-free quality; ties go to the
/// lowest id.
pub fn select_serving(candidates: &[Candidate<'_>], sigma_n2_w: f64) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for c in candidates {
        let q = c.p_t_w / (c.n_t as f64 * sigma_n2_w) * wideband_power(c.channel);
        best = match best {
            Some((id, bq)) if bq > q || (bq == q && id < c.bs_id) => Some((id, bq)),
            _ => Some((c.bs_id, q)),
        };
    }
    best.map(|b| b.0).ok_or(Error::Empty("serving candidates"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeMetrics {
    pub ue_id: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub serving_bs: Option<usize>,
    pub snr: f64,
    pub sinr: f64,
    pub rate_bps: f64,
    pub covered: bool,
}

/// Fraction of UEs whose SINR exceeds `gamma_th`.
pub fn coverage_probability(metrics: &[UeMetrics], gamma_th: f64) -> Result<f64> {
    if metrics.is_empty() {
        return Err(Error::Empty("metrics"));
    }
    let n = metrics.iter().filter(|m| m.sinr > gamma_th).count();
    Ok(n as f64 / metrics.len() as f64)
}

/// Conjugate beamformers for the dominant eigenmode of the channel at the
/// carrier: transmit weights with unit total power and receive combining
/// weights with total power equal to the receive antenna count.
pub fn mrt_mrc_weights(h: &ChannelMatrix) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let m = h.frequency_response(0.0);
    if m.iter().all(|x| x.norm_sqr() == 0.0) {
        return Err(Error::Empty("channel taps"));
    }
    let svd = m.svd(true, true);
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, s)| if *s > acc.1 { (i, *s) } else { acc });
    let u = svd.u.as_ref().expect("requested u").column(k).into_owned();
    let v_t = svd.v_t.as_ref().expect("requested v_t").row(k).into_owned();
    let scale_r = (h.n_r() as f64).sqrt() / u.norm();
    let w_rx: Vec<Complex64> = u.iter().map(|x| x * scale_r).collect();
    let vn = v_t.norm();
    let w_tx: Vec<Complex64> = v_t.iter().map(|x| x.conj() / vn).collect();
    Ok((w_tx, w_rx))
}
