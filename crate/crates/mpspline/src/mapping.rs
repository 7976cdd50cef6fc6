//! Analytic maps from the logical (r, θ) rectangle to the physical plane.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

const POLE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mapping {
    /// x = r, y = θ.
    Identity,
    /// x = r cos θ, y = r sin θ.
    Circular,
    /// Czarny's D-shaped map with elongation `e` and inverse aspect ratio `eps`.
    Czarny { eps: f64, e: f64 },
}

impl Mapping {
    pub fn czarny(eps: f64, e: f64) -> Self {
        Mapping::Czarny { eps, e }
    }

    /// True when r = 0 collapses to a single physical point.
    pub fn has_pole(&self) -> bool {
        !matches!(self, Mapping::Identity)
    }

    fn xi(eps: f64) -> f64 {
        1.0 / (1.0 - 0.25 * eps * eps).sqrt()
    }

    pub fn forward(&self, r: f64, th: f64) -> (f64, f64) {
        match *self {
            Mapping::Identity => (r, th),
            Mapping::Circular => (r * th.cos(), r * th.sin()),
            Mapping::Czarny { eps, e } => {
                let s = (1.0 + eps * (eps + 2.0 * r * th.cos())).sqrt();
                ((1.0 - s) / eps, e * Self::xi(eps) * r * th.sin() / (2.0 - s))
            }
        }
    }

    /// Rows are (∂x/∂r, ∂x/∂θ) and (∂y/∂r, ∂y/∂θ).
    pub fn jacobian(&self, r: f64, th: f64) -> [[f64; 2]; 2] {
        let (c, sn) = (th.cos(), th.sin());
        match *self {
            Mapping::Identity => [[1.0, 0.0], [0.0, 1.0]],
            Mapping::Circular => [[c, -r * sn], [sn, r * c]],
            Mapping::Czarny { eps, e } => {
                let s = (1.0 + eps * (eps + 2.0 * r * c)).sqrt();
                let (ds_dr, ds_dth) = (eps * c / s, -eps * r * sn / s);
                let k = e * Self::xi(eps);
                let q = 2.0 - s;
                [
                    [-ds_dr / eps, -ds_dth / eps],
                    [k * (sn / q + r * sn * ds_dr / (q * q)), k * (r * c / q + r * sn * ds_dth / (q * q))],
                ]
            }
        }
    }

    /// Logical coordinates of a physical point, θ in [0, 2π) for polar maps.
    /// The pole (and anything within round-off of it) maps to (0, 0).
    pub fn inverse(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (rc, rs) = match *self {
            Mapping::Identity => return Ok((x, y)),
            Mapping::Circular => (x, y),
            Mapping::Czarny { eps, e } => {
                let s = 1.0 - eps * x;
                let rc = (s * s - 1.0 - eps * eps) / (2.0 * eps);
                if s <= 0.0 || s >= 2.0 {
                    return Err(Error::Geometry(format!("({x}, {y}) is outside the image of the map")));
                }
                (rc, y * (2.0 - s) / (e * Self::xi(eps)))
            }
        };
        let r = rc.hypot(rs);
        if r <= POLE_TOL {
            return Ok((0.0, 0.0));
        }
        let th = rs.atan2(rc).rem_euclid(TAU);
        Ok((r, if th >= TAU { 0.0 } else { th }))
    }

    /// ∂F/∂θ written directly in physical coordinates, so that a rigid
    /// rotation along the mesh lines needs no inverse map.
    pub fn theta_tangent(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        match *self {
            Mapping::Identity => Ok((0.0, 1.0)),
            Mapping::Circular => Ok((-y, x)),
            Mapping::Czarny { eps, e } => {
                let s = 1.0 - eps * x;
                if s <= 0.0 || s >= 2.0 {
                    return Err(Error::Geometry(format!("({x}, {y}) is outside the image of the map")));
                }
                let k = e * Self::xi(eps);
                let q = 2.0 - s;
                let rc = (s * s - 1.0 - eps * eps) / (2.0 * eps);
                let rs = y * q / k;
                Ok((rs / s, k * (rc / q - eps * rs * rs / (s * q * q))))
            }
        }
    }
}
