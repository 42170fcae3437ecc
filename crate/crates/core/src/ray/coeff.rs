//! Interaction coefficients: Fresnel reflection, slab transmission and
//! knife-edge diffraction loss.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence.
    Te,
    /// Electric field in the plane of incidence.
    Tm,
}

/// Polarization seen by a vertically polarized wave travelling along `d`
/// onto a surface with normal `n`: TE when the plane of incidence is closer
/// to horizontal, TM otherwise. Normal incidence counts as TE.
pub fn incidence_polarization(n: &Vec3, d: &Vec3) -> Polarization {
    let c = n.cross(d);
    let len = c.norm();
    if len < 1e-9 {
        return Polarization::Te;
    }
    if (c.z / len).abs() >= std::f64::consts::FRAC_1_SQRT_2 {
        Polarization::Te
    } else {
        Polarization::Tm
    }
}

/// Fresnel reflection coefficient for a half-space of relative permittivity
/// `eps`, with the incidence angle given by its cosine.
#[inline]
pub fn fresnel_from_cos(eps: Complex64, cos_i: f64, pol: Polarization) -> Complex64 {
    let cos_i = cos_i.clamp(0.0, 1.0);
    let sin2 = 1.0 - cos_i * cos_i;
    let k = (eps - sin2).sqrt();
    match pol {
        Polarization::Te => (cos_i - k) / (cos_i + k),
        Polarization::Tm => (eps * cos_i - k) / (eps * cos_i + k),
    }
}

/// Fresnel reflection coefficient at incidence angle `theta_i` (radians,
/// measured from the surface normal).
pub fn fresnel_coeff(eps: Complex64, theta_i: f64, pol: Polarization) -> Complex64 {
    fresnel_from_cos(eps, theta_i.cos(), pol)
}

/// Transmission through a lossy slab of thickness `d` (m).
///
/// Magnitude is the interface power transmittance `1 - |G|^2` times the
/// in-slab attenuation along the refracted path; the phase is that of
/// `1 - G^2`. The magnitude never exceeds one.
pub fn transmission_from_cos(
    eps: Complex64,
    cos_i: f64,
    pol: Polarization,
    thickness_m: f64,
    k0: f64,
) -> Complex64 {
    let g = fresnel_from_cos(eps, cos_i, pol);
    let sin2 = 1.0 - cos_i.clamp(0.0, 1.0).powi(2);
    let cos_t = (1.0 - sin2 / eps.re).max(0.0).sqrt();
    let alpha = k0 * eps.sqrt().im.abs();
    let path = if cos_t > 1e-12 {
        thickness_m / cos_t
    } else {
        f64::INFINITY
    };
    let mag = (1.0 - g.norm_sqr()).max(0.0) * (-alpha * path).exp();
    let phase = (Complex64::new(1.0, 0.0) - g * g).arg();
    Complex64::from_polar(mag, phase)
}

pub fn transmission_coeff(
    eps: Complex64,
    theta_i: f64,
    pol: Polarization,
    thickness_m: f64,
    k0: f64,
) -> Complex64 {
    transmission_from_cos(eps, theta_i.cos(), pol, thickness_m, k0)
}

/// Knife-edge diffraction loss `J(v)` in dB; zero for `v <= -0.78`.
pub fn knife_edge_loss(v: f64) -> f64 {
    if v <= -0.78 {
        return 0.0;
    }
    let a = v - 0.1;
    6.9 + 20.0 * ((a * a + 1.0).sqrt() + a).log10()
}

/// Fresnel-Kirchhoff parameter from the excess path length `delta` over the
/// unobstructed line.
pub fn fresnel_kirchhoff_v(delta_m: f64, wavelength_m: f64) -> f64 {
    2.0 * (delta_m.max(0.0) / wavelength_m).sqrt()
}
