//! Bilinear resampling and the registration energy
//! `E(u) = sum (M(x + u) - F(x))^2 + lambda * sum |grad u|^2`
//! on intensity-normalized planes, with its analytic gradient.

use crate::imgcore::{ensure_same_dims, Image, VectorField};

use super::RegistrationError;

/// Bilinear sample with border clamping. Returns the value and its partial
/// derivatives with respect to the sample coordinates; the derivative along
/// an axis is zero wherever the coordinate was clamped.
#[inline]
pub(crate) fn sample(plane: &[f64], w: usize, h: usize, px: f64, py: f64) -> (f64, f64, f64) {
    let (x0, fx, live_x) = locate(px, w);
    let (y0, fy, live_y) = locate(py, h);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let a = plane[y0 * w + x0];
    let b = plane[y0 * w + x1];
    let c = plane[y1 * w + x0];
    let d = plane[y1 * w + x1];
    let top = (1.0 - fx) * a + fx * b;
    let bottom = (1.0 - fx) * c + fx * d;
    let value = (1.0 - fy) * top + fy * bottom;
    let dx = if live_x {
        (1.0 - fy) * (b - a) + fy * (d - c)
    } else {
        0.0
    };
    let dy = if live_y { bottom - top } else { 0.0 };
    (value, dx, dy)
}

/// Cell index, fractional offset, and whether the coordinate lies strictly
/// inside the domain (so the interpolant is differentiable along this axis).
#[inline]
fn locate(p: f64, n: usize) -> (usize, f64, bool) {
    if n == 1 {
        return (0, 0.0, false);
    }
    let last = (n - 1) as f64;
    let live = p > 0.0 && p < last;
    let q = p.clamp(0.0, last);
    let i = (q.floor() as usize).min(n - 2);
    (i, q - i as f64, live)
}

/// Pull-back warp of a plane by displacement planes.
pub(crate) fn warp_plane(plane: &[f64], w: usize, h: usize, ux: &[f64], uy: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            out.push(sample(plane, w, h, x as f64 + ux[i], y as f64 + uy[i]).0);
        }
    }
    out
}

/// Registration energy for one fixed/moving pair at one resolution.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    width: usize,
    height: usize,
    fixed: Vec<f64>,
    moving: Vec<f64>,
    smooth_weight: f64,
}

impl EnergyModel {
    /// Intensities are divided by each image's `max_value`.
    pub fn new(
        fixed: &Image,
        moving: &Image,
        smooth_weight: f64,
    ) -> Result<Self, RegistrationError> {
        ensure_same_dims(fixed.dims(), moving.dims())?;
        let nf = f64::from(fixed.max_value());
        let nm = f64::from(moving.max_value());
        Ok(Self::from_planes(
            fixed.width(),
            fixed.height(),
            fixed.data().iter().map(|v| v / nf).collect(),
            moving.data().iter().map(|v| v / nm).collect(),
            smooth_weight,
        ))
    }

    pub(crate) fn from_planes(
        width: usize,
        height: usize,
        fixed: Vec<f64>,
        moving: Vec<f64>,
        smooth_weight: f64,
    ) -> Self {
        Self {
            width,
            height,
            fixed,
            moving,
            smooth_weight,
        }
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub(crate) fn fixed(&self) -> &[f64] {
        &self.fixed
    }

    pub(crate) fn moving(&self) -> &[f64] {
        &self.moving
    }

    pub fn energy(&self, field: &VectorField) -> Result<f64, RegistrationError> {
        self.check_field(field)?;
        let (ux, uy) = (field.component(0), field.component(1));
        Ok(self.energy_planes(&ux, &uy))
    }

    /// Gradient of [`EnergyModel::energy`] with respect to every displacement
    /// component, as a 2-channel field.
    pub fn gradient(&self, field: &VectorField) -> Result<VectorField, RegistrationError> {
        self.check_field(field)?;
        let (ux, uy) = (field.component(0), field.component(1));
        let (gx, gy) = self.gradient_planes(&ux, &uy);
        Ok(VectorField::from_planes(self.width, self.height, &gx, &gy)?)
    }

    fn check_field(&self, field: &VectorField) -> Result<(), RegistrationError> {
        if field.channels() != 2 {
            return Err(RegistrationError::Channels(field.channels()));
        }
        ensure_same_dims((self.width, self.height), field.dims())?;
        Ok(())
    }

    pub(crate) fn energy_planes(&self, ux: &[f64], uy: &[f64]) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut data = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (v, _, _) = sample(&self.moving, w, h, x as f64 + ux[i], y as f64 + uy[i]);
                let r = v - self.fixed[i];
                data += r * r;
            }
        }
        data + self.smooth_weight * (roughness(ux, w, h) + roughness(uy, w, h))
    }

    pub(crate) fn gradient_planes(&self, ux: &[f64], uy: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (w, h) = (self.width, self.height);
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (v, dx, dy) = sample(&self.moving, w, h, x as f64 + ux[i], y as f64 + uy[i]);
                let r2 = 2.0 * (v - self.fixed[i]);
                gx[i] = r2 * dx;
                gy[i] = r2 * dy;
            }
        }
        if self.smooth_weight != 0.0 {
            add_roughness_gradient(&mut gx, ux, w, h, self.smooth_weight);
            add_roughness_gradient(&mut gy, uy, w, h, self.smooth_weight);
        }
        (gx, gy)
    }
}

/// Sum of squared forward differences of one component plane.
fn roughness(u: &[f64], w: usize, h: usize) -> f64 {
    let mut s = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let d = u[i + 1] - u[i];
                s += d * d;
            }
            if y + 1 < h {
                let d = u[i + w] - u[i];
                s += d * d;
            }
        }
    }
    s
}

fn add_roughness_gradient(g: &mut [f64], u: &[f64], w: usize, h: usize, lambda: f64) {
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut acc = 0.0;
            if x + 1 < w {
                acc -= u[i + 1] - u[i];
            }
            if x > 0 {
                acc += u[i] - u[i - 1];
            }
            if y + 1 < h {
                acc -= u[i + w] - u[i];
            }
            if y > 0 {
                acc += u[i] - u[i - w];
            }
            g[i] += 2.0 * lambda * acc;
        }
    }
}
