//! 2x area-mean image pyramid and field upsampling.

use super::energy::sample;

/// Plane with its dimensions.
#[derive(Debug, Clone)]
pub(crate) struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// Levels coarser than this (in either dimension) are not built.
const MIN_LEVEL_SIZE: usize = 4;

/// Area-mean 2x reduction; odd trailing rows/columns average the pixels
/// that exist.
pub(crate) fn downsample2(p: &Plane) -> Plane {
    let width = p.width.div_ceil(2);
    let height = p.height.div_ceil(2);
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut sum = 0.0;
            let mut n = 0.0;
            for sy in 2 * y..(2 * y + 2).min(p.height) {
                for sx in 2 * x..(2 * x + 2).min(p.width) {
                    sum += p.data[sy * p.width + sx];
                    n += 1.0;
                }
            }
            data.push(sum / n);
        }
    }
    Plane {
        width,
        height,
        data,
    }
}

/// Builds up to `levels` planes, finest first.
pub(crate) fn build(finest: Plane, levels: usize) -> Vec<Plane> {
    let mut out = vec![finest];
    while out.len() < levels {
        let last = out.last().unwrap();
        if last.width.div_ceil(2) < MIN_LEVEL_SIZE || last.height.div_ceil(2) < MIN_LEVEL_SIZE {
            break;
        }
        let next = downsample2(last);
        out.push(next);
    }
    out
}

/// Bilinearly resamples a coarse displacement plane onto a finer grid and
/// scales it by 2 (one coarse pixel spans two fine pixels).
pub(crate) fn upsample_component(
    coarse: &[f64],
    cw: usize,
    ch: usize,
    w: usize,
    h: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let cy = (y as f64 + 0.5) / 2.0 - 0.5;
        for x in 0..w {
            let cx = (x as f64 + 0.5) / 2.0 - 0.5;
            out.push(2.0 * sample(coarse, cw, ch, cx, cy).0);
        }
    }
    out
}
