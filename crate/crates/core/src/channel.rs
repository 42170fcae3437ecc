//! Wideband MIMO channel assembled from traced paths.
//!
//! Every `(rx element, tx element)` entry holds one tap per path. Under the
//! plane-wave approximation all entries share the path delays and differ
//! only by the array steering phases.

use std::io::Write;

use num_complex::Complex64;

use crate::antenna::AntennaArray;
use crate::error::{invalid, Error, Result};
use crate::geom::wavelength;
use crate::ray::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub amp: Complex64,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_r: usize,
    n_t: usize,
    delays: Vec<f64>,
    /// Taps indexed by `(m * n_t + n) * n_p + i`.
    taps: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(n_r: usize, n_t: usize) -> Self {
        Self {
            n_r,
            n_t,
            delays: Vec::new(),
            taps: Vec::new(),
        }
    }

    /// Builds a channel from explicit taps; `taps[m][n][i]` pairs with
    /// `delays[i]`.
    pub fn from_taps(delays: Vec<f64>, taps: &[Vec<Vec<Complex64>>]) -> Result<Self> {
        let n_r = taps.len();
        let n_t = taps.first().map_or(0, Vec::len);
        let n_p = delays.len();
        let mut flat = Vec::with_capacity(n_r * n_t * n_p);
        for row in taps {
            if row.len() != n_t {
                return Err(invalid("taps", "ragged channel matrix"));
            }
            for entry in row {
                if entry.len() != n_p {
                    return Err(invalid("taps", "every entry needs one tap per delay"));
                }
                flat.extend_from_slice(entry);
            }
        }
        if delays.iter().any(|d| !(*d >= 0.0)) {
            return Err(invalid("delays", "must be non-negative"));
        }
        Ok(Self {
            n_r,
            n_t,
            delays,
            taps: flat,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn path_count(&self) -> usize {
        self.delays.len()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn tap(&self, m: usize, n: usize, i: usize) -> Tap {
        let n_p = self.delays.len();
        Tap {
            amp: self.taps[(m * self.n_t + n) * n_p + i],
            delay_s: self.delays[i],
        }
    }

    /// Taps of one `(m, n)` entry.
    pub fn entry(&self, m: usize, n: usize) -> &[Complex64] {
        let n_p = self.delays.len();
        let start = (m * self.n_t + n) * n_p;
        &self.taps[start..start + n_p]
    }

    /// Narrowband matrix at baseband frequency offset `df_hz`:
    /// `H[m][n] = sum_i a_i exp(-j 2 pi df tau_i)`.
    pub fn frequency_response(&self, df_hz: f64) -> nalgebra::DMatrix<Complex64> {
        let rot: Vec<Complex64> = self
            .delays
            .iter()
            .map(|t| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * df_hz * t))
            .collect();
        nalgebra::DMatrix::from_fn(self.n_r, self.n_t, |m, n| {
            self.entry(m, n).iter().zip(&rot).map(|(a, r)| a * r).sum()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.taps.iter().all(|t| *t == Complex64::new(0.0, 0.0))
    }
}

/// Assembles the tapped channel between two arrays at carrier `f_hz`.
pub fn assemble_channel(
    paths: &[Path],
    tx: &AntennaArray,
    rx: &AntennaArray,
    f_hz: f64,
) -> ChannelMatrix {
    let lambda = wavelength(f_hz);
    let (n_t, n_r, n_p) = (tx.element_count(), rx.element_count(), paths.len());
    let mut taps = vec![Complex64::new(0.0, 0.0); n_r * n_t * n_p];
    for (i, p) in paths.iter().enumerate() {
        let g = (tx.gain(&p.departure) * rx.gain(&p.arrival)).sqrt();
        let base = Complex64::from_polar(p.amp * g, p.phase_rad);
        let st = tx.geometry.steering(&p.departure, lambda);
        let sr = rx.geometry.steering(&p.arrival, lambda);
        for (m, srm) in sr.iter().enumerate() {
            let bm = base * srm;
            for (n, stn) in st.iter().enumerate() {
                taps[(m * n_t + n) * n_p + i] = bm * stn;
            }
        }
    }
    ChannelMatrix {
        n_r,
        n_t,
        delays: paths.iter().map(|p| p.delay_s).collect(),
        taps,
    }
}

/// Total tap power summed over all entries and delays.
pub fn wideband_power(h: &ChannelMatrix) -> f64 {
    h.taps.iter().map(|t| t.norm_sqr()).sum()
}

/// Power-weighted standard deviation of tap delays pooled over all entries.
pub fn rms_delay_spread(h: &ChannelMatrix) -> Result<f64> {
    let n_p = h.delays.len();
    let mut w = vec![0.0; n_p];
    for (k, t) in h.taps.iter().enumerate() {
        w[k % n_p] += t.norm_sqr();
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Empty("channel taps"));
    }
    let mean = w.iter().zip(&h.delays).map(|(w, d)| w * d).sum::<f64>() / total;
    let var = w
        .iter()
        .zip(&h.delays)
        .map(|(w, d)| w * (d - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt())
}

pub fn coherence_bandwidth(t_rms_s: f64) -> Result<f64> {
    if !(t_rms_s > 0.0) {
        return Err(invalid("t_rms_s", "must be positive"));
    }
    Ok(1.0 / (5.0 * t_rms_s))
}

/// Writes one CSV row per `(m, n, path)` tap.
pub fn write_channel_csv<W: Write>(w: W, h: &ChannelMatrix) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["m", "n", "path", "amp_db", "phase_deg", "delay_ns"])?;
    for m in 0..h.n_r {
        for n in 0..h.n_t {
            for (i, a) in h.entry(m, n).iter().enumerate() {
                wr.write_record([
                    m.to_string(),
                    n.to_string(),
                    i.to_string(),
                    format!("{:.4}", 20.0 * a.norm().log10()),
                    format!("{:.4}", a.arg().to_degrees()),
                    format!("{:.6}", h.delays[i] * 1e9),
                ])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}
