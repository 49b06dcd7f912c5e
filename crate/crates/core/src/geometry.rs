//! Differential geometry of displacement fields: Jacobian determinant,
//! curl, and their image renderings.
//!
//! Derivatives use central differences in the interior and one-sided
//! differences on the border, so linear fields are differentiated exactly
//! and every pixel gets a value. Along an axis of length 1 the derivative
//! is zero.

use thiserror::Error;

use crate::imgcore::{Image, ImageError, ScalarField, VectorField};
use crate::registration::{warp, RegistrationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected a {expected}-channel field, got {actual}")]
    Channels {
        expected: &'static str,
        actual: usize,
    },
    #[error("grid spacing must be at least 2, got {0}")]
    Spacing(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
}

/// Partial derivatives of one component plane: `(d/dx, d/dy)` at each pixel.
fn partials(field: &VectorField, c: usize) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = field.dims();
    let u = |x: usize, y: usize| field.get(x, y, c);
    let mut dx = Vec::with_capacity(w * h);
    let mut dy = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            dx.push(diff(w, x, |i| u(i, y)));
            dy.push(diff(h, y, |j| u(x, j)));
        }
    }
    (dx, dy)
}

#[inline]
fn diff(n: usize, i: usize, at: impl Fn(usize) -> f64) -> f64 {
    if n == 1 {
        0.0
    } else if i == 0 {
        at(1) - at(0)
    } else if i == n - 1 {
        at(n - 1) - at(n - 2)
    } else {
        (at(i + 1) - at(i - 1)) / 2.0
    }
}

/// `det(I + grad u)` of the map `x -> x + u(x)` at every pixel.
pub fn jacobian_determinant(field: &VectorField) -> Result<ScalarField, GeometryError> {
    if field.channels() != 2 {
        return Err(GeometryError::Channels {
            expected: "2",
            actual: field.channels(),
        });
    }
    let (dxx, dxy) = partials(field, 0);
    let (dyx, dyy) = partials(field, 1);
    let det = (0..dxx.len())
        .map(|i| (1.0 + dxx[i]) * (1.0 + dyy[i]) - dxy[i] * dyx[i])
        .collect();
    Ok(ScalarField::new(field.width(), field.height(), det)?)
}

/// Curl of a displacement field.
#[derive(Debug, Clone, PartialEq)]
pub enum Curl {
    /// Planar field: `du_y/dx - du_x/dy`.
    Scalar(ScalarField),
    /// Three-component field on a plane (`d/dz = 0`):
    /// `(du_z/dy, -du_z/dx, du_y/dx - du_x/dy)`.
    Vector(VectorField),
}

impl Curl {
    /// The curl components as separate scalar maps.
    pub fn components(&self) -> Vec<ScalarField> {
        match self {
            Curl::Scalar(s) => vec![s.clone()],
            Curl::Vector(v) => (0..3)
                .map(|c| {
                    ScalarField::new(v.width(), v.height(), v.component(c)).expect("finite curl")
                })
                .collect(),
        }
    }
}

pub fn curl(field: &VectorField) -> Result<Curl, GeometryError> {
    let (w, h) = field.dims();
    let (_, dxy) = partials(field, 0);
    let (dyx, _) = partials(field, 1);
    let planar: Vec<f64> = (0..w * h).map(|i| dyx[i] - dxy[i]).collect();
    match field.channels() {
        2 => Ok(Curl::Scalar(ScalarField::new(w, h, planar)?)),
        3 => {
            let (dzx, dzy) = partials(field, 2);
            let data = (0..w * h)
                .flat_map(|i| [dzy[i], -dzx[i], planar[i]])
                .collect();
            Ok(Curl::Vector(VectorField::new(w, h, 3, data)?))
        }
        n => Err(GeometryError::Channels {
            expected: "2 or 3",
            actual: n,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRenderParams {
    /// Pixels between grid lines.
    pub spacing: usize,
    pub line_value: f64,
    /// Defaults to the output image's `max_value` when `None`.
    pub background_value: Option<f64>,
}

impl Default for GridRenderParams {
    fn default() -> Self {
        Self {
            spacing: 8,
            line_value: 0.0,
            background_value: None,
        }
    }
}

/// Draws a regular grid over the field's domain and warps it by the field.
/// The output has the field's dimensions.
pub fn render_grid(
    field: &VectorField,
    p: &GridRenderParams,
    max_value: u16,
) -> Result<Image, GeometryError> {
    if p.spacing < 2 {
        return Err(GeometryError::Spacing(p.spacing));
    }
    if field.channels() != 2 {
        return Err(GeometryError::Channels {
            expected: "2",
            actual: field.channels(),
        });
    }
    let (w, h) = field.dims();
    let background = p.background_value.unwrap_or(f64::from(max_value));
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if x % p.spacing == 0 || y % p.spacing == 0 {
                p.line_value
            } else {
                background
            }
        })
        .collect();
    let grid = Image::new(w, h, max_value, data)?;
    Ok(warp(&grid, field)?)
}

/// Min-max normalization onto `[0, max_value]`, rounded half-up. A
/// constant map renders as `floor(max_value / 2)`.
pub fn field_to_image(f: &ScalarField, max_value: u16) -> Result<Image, GeometryError> {
    let (lo, hi) = f
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let max = f64::from(max_value);
    let data = if hi > lo {
        let span = hi - lo;
        f.data()
            .iter()
            .map(|&v| ((v - lo) / span * max + 0.5).floor().clamp(0.0, max))
            .collect()
    } else {
        vec![f64::from(max_value / 2); f.data().len()]
    };
    Ok(Image::new(f.width(), f.height(), max_value, data)?)
}
