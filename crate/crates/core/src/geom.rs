//! Shared geometric primitives: points, directions, rays and bounding boxes.
//!
//! World frame: `x` east, `y` north, `z` up, metres. Azimuth is measured
//! counter-clockwise from `+x` in degrees and normalized to `(-180, 180]`;
//! elevation is measured from the horizontal plane, positive upwards.

use serde::{Deserialize, Serialize};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Self-intersection guard applied to ray origins after an interaction (m).
pub const EPS_GEOM: f64 = 1e-4;

pub fn wavelength(f_hz: f64) -> f64 {
    C0 / f_hz
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let mut w = a % 360.0;
    if w <= -180.0 {
        w += 360.0;
    } else if w > 180.0 {
        w -= 360.0;
    }
    w
}

/// Wraps an angle in radians into `(-pi, pi]`.
pub fn wrap_rad(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a % TAU;
    if w <= -PI {
        w += TAU;
    } else if w > PI {
        w -= TAU;
    }
    w
}

/// A direction expressed as azimuth/elevation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzEl {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl AzEl {
    pub fn new(az_deg: f64, el_deg: f64) -> Self {
        Self {
            az_deg: wrap_deg(az_deg),
            el_deg: el_deg.clamp(-90.0, 90.0),
        }
    }

    /// Direction of a (not necessarily normalized) vector.
    pub fn from_vector(v: &Vec3) -> Self {
        let n = v.norm();
        let el = (v.z / n).clamp(-1.0, 1.0).asin().to_degrees();
        let az = if v.x == 0.0 && v.y == 0.0 {
            0.0
        } else {
            v.y.atan2(v.x).to_degrees()
        };
        Self::new(az, el)
    }

    pub fn to_unit(self) -> Vec3 {
        let (az, el) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point3,
    pub dir: Vec3,
    pub inv_dir: Vec3,
}

impl Ray {
    /// `dir` is expected to be unit length.
    pub fn new(origin: Point3, dir: Vec3) -> Self {
        Self {
            origin,
            dir,
            inv_dir: Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z),
        }
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point3>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn join(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    /// Slab test; returns the parametric overlap of the ray with the box
    /// clipped to `[t_min, t_max]`.
    #[inline]
    pub fn hit(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for i in 0..3 {
            let inv = ray.inv_dir[i];
            let mut a = (self.min[i] - ray.origin[i]) * inv;
            let mut b = (self.max[i] - ray.origin[i]) * inv;
            if inv < 0.0 {
                std::mem::swap(&mut a, &mut b);
            }
            // NaN (0 * inf) compares false and leaves the bound untouched.
            if a > t0 {
                t0 = a;
            }
            if b < t1 {
                t1 = b;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Mirror image of `p` across the plane `n . x = offset` (`n` unit length).
#[inline]
pub fn mirror(p: &Point3, n: &Vec3, offset: f64) -> Point3 {
    p - n * (2.0 * (n.dot(&p.coords) - offset))
}

/// Specular reflection of direction `d` about unit normal `n`.
#[inline]
pub fn reflect_dir(d: &Vec3, n: &Vec3) -> Vec3 {
    d - n * (2.0 * d.dot(n))
}
