//! Variational deformable registration, warping and atlas construction.
//!
//! Displacements use the pull-back convention: `u(x)` maps a fixed-image
//! coordinate to the moving-image coordinate `x + u(x)` that is sampled to
//! produce the warped output. Registering a moving image whose content sits
//! 4 px to the right of the fixed content therefore yields `u ~ (+4, 0)`.

mod atlas;
mod energy;
mod pyramid;

pub use atlas::build_atlas;
pub use energy::EnergyModel;

use thiserror::Error;

use crate::imgcore::{ensure_same_dims, Image, ImageError, VectorField};
use energy::warp_plane;
use pyramid::Plane;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("field must have 2 channels, got {0}")]
    Channels(usize),
    #[error("energy became non-finite at level {level}, iteration {iteration}")]
    Diverged { level: usize, iteration: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error("atlas needs at least one image")]
    NoImages,
}

/// Coarse-to-fine gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegParams {
    /// Pyramid depth, including the full-resolution level.
    pub levels: usize,
    pub iters_per_level: usize,
    /// Initial gradient step in normalized-intensity units.
    pub step: f64,
    /// Weight of the diffusion regularizer.
    pub smooth_weight: f64,
    /// Stop a level once the relative energy decrease falls below this.
    pub tol: f64,
}

impl Default for RegParams {
    fn default() -> Self {
        Self {
            levels: 3,
            iters_per_level: 200,
            step: 0.5,
            smooth_weight: 1.0,
            tol: 1e-5,
        }
    }
}

impl RegParams {
    pub fn validate(&self) -> Result<(), RegistrationError> {
        if self.levels < 1 {
            return Err(RegistrationError::InvalidParams("levels must be >= 1"));
        }
        if self.iters_per_level < 1 {
            return Err(RegistrationError::InvalidParams(
                "iters_per_level must be >= 1",
            ));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(RegistrationError::InvalidParams("step must be positive"));
        }
        if !(self.smooth_weight >= 0.0 && self.smooth_weight.is_finite()) {
            return Err(RegistrationError::InvalidParams(
                "smooth_weight must be non-negative",
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(RegistrationError::InvalidParams("tol must be positive"));
        }
        Ok(())
    }
}

/// Most halvings attempted before a level is declared converged.
const MAX_HALVINGS: usize = 10;

/// Energy history of one pyramid level (coarsest level first in
/// [`Registration::levels`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub level: usize,
    pub width: usize,
    pub height: usize,
    /// Energy at the start of the level followed by one entry per accepted step.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub field: VectorField,
    pub levels: Vec<LevelTrace>,
    /// Full-resolution energy of the zero field.
    pub initial_energy: f64,
    /// Full-resolution energy of `field`.
    pub final_energy: f64,
}

/// Pull-back warp with bilinear interpolation and border clamping.
pub fn warp(img: &Image, field: &VectorField) -> Result<Image, RegistrationError> {
    if field.channels() != 2 {
        return Err(RegistrationError::Channels(field.channels()));
    }
    ensure_same_dims(img.dims(), field.dims())?;
    let (w, h) = img.dims();
    let out = warp_plane(img.data(), w, h, &field.component(0), &field.component(1));
    Ok(Image::from_clamped(w, h, img.max_value(), out)?)
}

/// Displacement field aligning `moving` onto `fixed`.
pub fn register(
    fixed: &Image,
    moving: &Image,
    p: &RegParams,
) -> Result<VectorField, RegistrationError> {
    register_with_trace(fixed, moving, p).map(|r| r.field)
}

pub fn register_with_trace(
    fixed: &Image,
    moving: &Image,
    p: &RegParams,
) -> Result<Registration, RegistrationError> {
    p.validate()?;
    let full = EnergyModel::new(fixed, moving, p.smooth_weight)?;
    let (w, h) = full.dims();

    let fixed_levels = pyramid::build(
        Plane {
            width: w,
            height: h,
            data: full.fixed().to_vec(),
        },
        p.levels,
    );
    let moving_levels = pyramid::build(
        Plane {
            width: w,
            height: h,
            data: full.moving().to_vec(),
        },
        p.levels,
    );

    let mut traces = Vec::with_capacity(fixed_levels.len());
    let mut current: Option<(usize, usize, Vec<f64>, Vec<f64>)> = None;

    for level in (0..fixed_levels.len()).rev() {
        let (lw, lh) = (fixed_levels[level].width, fixed_levels[level].height);
        let (mut ux, mut uy) = match current.take() {
            None => (vec![0.0; lw * lh], vec![0.0; lw * lh]),
            Some((cw, ch, cx, cy)) => (
                pyramid::upsample_component(&cx, cw, ch, lw, lh),
                pyramid::upsample_component(&cy, cw, ch, lw, lh),
            ),
        };
        let model = if level == 0 {
            full.clone()
        } else {
            EnergyModel::from_planes(
                lw,
                lh,
                fixed_levels[level].data.clone(),
                moving_levels[level].data.clone(),
                p.smooth_weight,
            )
        };
        let energies = descend(&model, &mut ux, &mut uy, p, level)?;
        traces.push(LevelTrace {
            level,
            width: lw,
            height: lh,
            energies,
        });
        current = Some((lw, lh, ux, uy));
    }

    let (_, _, ux, uy) = current.expect("at least one level");
    let zeros = vec![0.0; w * h];
    let initial_energy = full.energy_planes(&zeros, &zeros);
    let final_energy = full.energy_planes(&ux, &uy);
    let (field, final_energy) = if final_energy <= initial_energy {
        (VectorField::from_planes(w, h, &ux, &uy)?, final_energy)
    } else {
        (VectorField::zeros(w, h, 2)?, initial_energy)
    };
    Ok(Registration {
        field,
        levels: traces,
        initial_energy,
        final_energy,
    })
}

/// Preconditioned gradient descent: every iteration smooths the gradient,
/// tries the configured step and halves it until the energy decreases. Only
/// energy-decreasing steps are accepted.
fn descend(
    model: &EnergyModel,
    ux: &mut Vec<f64>,
    uy: &mut Vec<f64>,
    p: &RegParams,
    level: usize,
) -> Result<Vec<f64>, RegistrationError> {
    let mut energy = model.energy_planes(ux, uy);
    if !energy.is_finite() {
        return Err(RegistrationError::Diverged {
            level,
            iteration: 0,
        });
    }
    let mut trace = vec![energy];
    let n = ux.len();
    let mut cx = vec![0.0; n];
    let mut cy = vec![0.0; n];

    for iteration in 0..p.iters_per_level {
        let (mut gx, mut gy) = model.gradient_planes(ux, uy);
        if gx.iter().chain(&gy).all(|&g| g == 0.0) {
            break;
        }
        let (w, h) = model.dims();
        precondition(&mut gx, w, h, SMOOTHING_PASSES);
        precondition(&mut gy, w, h, SMOOTHING_PASSES);
        let mut accepted = None;
        let mut step = p.step;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..n {
                cx[i] = ux[i] - step * gx[i];
                cy[i] = uy[i] - step * gy[i];
            }
            let candidate = model.energy_planes(&cx, &cy);
            if !candidate.is_finite() {
                return Err(RegistrationError::Diverged { level, iteration });
            }
            if candidate < energy {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else { break };
        std::mem::swap(ux, &mut cx);
        std::mem::swap(uy, &mut cy);
        let decrease = (energy - next) / energy;
        energy = next;
        trace.push(energy);
        if decrease < p.tol {
            break;
        }
    }
    Ok(trace)
}

/// Heat-smoothing passes applied to the raw gradient before each step.
const SMOOTHING_PASSES: usize = 25;

/// Diffusion rate per pass; below 1/8 so every pass is a contraction with
/// positive eigenvalues.
const SMOOTHING_RATE: f64 = 0.12;

/// Applies `(I - rate * L)^passes` where `L` is the Neumann graph Laplacian.
/// The operator is symmetric positive definite, so the smoothed gradient is
/// still a descent direction; it spreads edge forces into flat regions.
fn precondition(g: &mut Vec<f64>, w: usize, h: usize, passes: usize) {
    let mut next = vec![0.0; g.len()];
    for _ in 0..passes {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let mut lap = 0.0;
                if x > 0 {
                    lap += g[i - 1] - g[i];
                }
                if x + 1 < w {
                    lap += g[i + 1] - g[i];
                }
                if y > 0 {
                    lap += g[i - w] - g[i];
                }
                if y + 1 < h {
                    lap += g[i + w] - g[i];
                }
                next[i] = g[i] + SMOOTHING_RATE * lap;
            }
        }
        std::mem::swap(g, &mut next);
    }
}
