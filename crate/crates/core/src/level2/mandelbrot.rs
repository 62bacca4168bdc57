//! Mandelbrot dwell images: per-pixel escape time and the Mariani-Silver
//! border-subdivision algorithm.
//!
//! Mariani-Silver computes dwells on a rectangle's border; a uniform border
//! fills the interior without iterating it, otherwise the interior splits
//! into four quadrants processed as independent spawned tasks. Every pixel is
//! computed (or filled) exactly once, and the recursion tree is a pure
//! function of the view, so outputs and the iterated-pixel count are
//! deterministic for any worker count.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};

use crate::error::{Error, Result};
use crate::parallel::{join_workers, par_chunks_mut, SharedSlice};

/// Dwell marker for pixels that never escape within `max_iter`.
pub const INTERIOR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct View {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl View {
    /// The customary full-set view.
    pub fn standard() -> View {
        View {
            x_min: -2.5,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::InvalidInput("zero-area view".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellImage {
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub dwell: Vec<u32>,
}

impl DwellImage {
    /// Dwell with INTERIOR mapped to `max_iter + 1`, the order used by the
    /// monotonicity property.
    pub fn effective_dwell(&self, idx: usize) -> u64 {
        match self.dwell[idx] {
            INTERIOR => self.max_iter as u64 + 1,
            d => d as u64,
        }
    }
}

/// Escape iteration for one point: iterate `z <- z^2 + c` from zero until
/// `|z|^2 > 4`; INTERIOR when `max_iter` iterations never escape.
#[inline]
pub fn escape_dwell(c_re: f64, c_im: f64, max_iter: u32) -> u32 {
    let mut z_re = 0.0f64;
    let mut z_im = 0.0f64;
    for k in 1..=max_iter {
        let re2 = z_re * z_re;
        let im2 = z_im * z_im;
        let next_re = re2 - im2 + c_re;
        z_im = 2.0 * z_re * z_im + c_im;
        z_re = next_re;
        if z_re * z_re + z_im * z_im > 4.0 {
            return k;
        }
    }
    INTERIOR
}

struct PixelMap {
    view: View,
    width: usize,
    height: usize,
}

impl PixelMap {
    #[inline]
    fn point(&self, px: usize, py: usize) -> (f64, f64) {
        let x = self.view.x_min
            + (self.view.x_max - self.view.x_min) * (px as f64 + 0.5) / self.width as f64;
        let y = self.view.y_min
            + (self.view.y_max - self.view.y_min) * (py as f64 + 0.5) / self.height as f64;
        (x, y)
    }
}

fn validate_dims(width: usize, height: usize, max_iter: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("empty image".to_string()));
    }
    if max_iter < 1 {
        return Err(Error::InvalidInput("max_iter must be >= 1".to_string()));
    }
    Ok(())
}

/// Per-pixel escape time, rows in parallel.
pub fn mandelbrot_escape(
    view: View,
    width: usize,
    height: usize,
    max_iter: u32,
    workers: usize,
) -> Result<DwellImage> {
    view.validate()?;
    validate_dims(width, height, max_iter)?;
    let map = PixelMap {
        view,
        width,
        height,
    };
    let mut dwell = vec![0u32; width * height];
    par_chunks_mut(workers, &mut dwell, |offset, chunk| {
        for (i, out) in chunk.iter_mut().enumerate() {
            let idx = offset + i;
            let (c_re, c_im) = map.point(idx % width, idx / width);
            *out = escape_dwell(c_re, c_im, max_iter);
        }
    });
    Ok(DwellImage {
        width,
        height,
        max_iter,
        dwell,
    })
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

pub struct MsOutcome {
    pub image: DwellImage,
    /// Pixels whose orbits were actually iterated (filled pixels excluded).
    pub pixels_iterated: u64,
}

/// Mariani-Silver recursive border subdivision.
pub fn mandelbrot_mariani_silver(
    view: View,
    width: usize,
    height: usize,
    max_iter: u32,
    min_tile: usize,
    workers: usize,
) -> Result<MsOutcome> {
    view.validate()?;
    validate_dims(width, height, max_iter)?;
    if min_tile < 2 {
        return Err(Error::InvalidInput("min_tile must be >= 2".to_string()));
    }
    let map = PixelMap {
        view,
        width,
        height,
    };
    let mut dwell = vec![0u32; width * height];
    let iterated = AtomicU64::new(0);
    {
        let out = SharedSlice::new(&mut dwell);
        let compute = |px: usize, py: usize| -> u32 {
            let (c_re, c_im) = map.point(px, py);
            escape_dwell(c_re, c_im, max_iter)
        };
        // Processes one rectangle; returns subdivision tasks.
        let process = |rect: Rect| -> Vec<Rect> {
            let mut iterated_here = 0u64;
            let mut children = Vec::new();
            if rect.w == 0 || rect.h == 0 {
                return children;
            }
            if rect.w <= min_tile || rect.h <= min_tile {
                for py in rect.y..rect.y + rect.h {
                    for px in rect.x..rect.x + rect.w {
                        unsafe { out.set(py * width + px, compute(px, py)) };
                    }
                }
                iterated.fetch_add((rect.w * rect.h) as u64, Ordering::Relaxed);
                return children;
            }
            // Border pixels (each exactly once).
            let mut uniform = true;
            let mut border_value = None;
            let mut visit = |px: usize, py: usize, iterated_here: &mut u64| {
                let d = compute(px, py);
                unsafe { out.set(py * width + px, d) };
                *iterated_here += 1;
                match border_value {
                    None => border_value = Some(d),
                    Some(v) if v != d => uniform = false,
                    _ => {}
                }
            };
            let (x1, y1) = (rect.x + rect.w - 1, rect.y + rect.h - 1);
            for px in rect.x..=x1 {
                visit(px, rect.y, &mut iterated_here);
                visit(px, y1, &mut iterated_here);
            }
            for py in rect.y + 1..y1 {
                visit(rect.x, py, &mut iterated_here);
                visit(x1, py, &mut iterated_here);
            }
            iterated.fetch_add(iterated_here, Ordering::Relaxed);
            let (iw, ih) = (rect.w - 2, rect.h - 2);
            if uniform {
                let fill = border_value.expect("border non-empty");
                for py in rect.y + 1..y1 {
                    for px in rect.x + 1..x1 {
                        unsafe { out.set(py * width + px, fill) };
                    }
                }
            } else if iw > 0 && ih > 0 {
                let (hw, hh) = (iw / 2, ih / 2);
                for (cx, cy, cw, ch) in [
                    (rect.x + 1, rect.y + 1, hw, hh),
                    (rect.x + 1 + hw, rect.y + 1, iw - hw, hh),
                    (rect.x + 1, rect.y + 1 + hh, hw, ih - hh),
                    (rect.x + 1 + hw, rect.y + 1 + hh, iw - hw, ih - hh),
                ] {
                    if cw > 0 && ch > 0 {
                        children.push(Rect {
                            x: cx,
                            y: cy,
                            w: cw,
                            h: ch,
                        });
                    }
                }
            }
            children
        };

        // Work queue of independent tasks; `outstanding` counts queued plus
        // in-flight rectangles.
        let state = Mutex::new((
            vec![Rect {
                x: 0,
                y: 0,
                w: width,
                h: height,
            }],
            1usize,
        ));
        let ready = Condvar::new();
        join_workers(workers, |_lane| loop {
            let task = {
                let mut guard = state.lock().expect("queue lock");
                loop {
                    if let Some(task) = guard.0.pop() {
                        break task;
                    }
                    if guard.1 == 0 {
                        return;
                    }
                    guard = ready.wait(guard).expect("queue wait");
                }
            };
            let children = process(task);
            let mut guard = state.lock().expect("queue lock");
            guard.1 += children.len();
            guard.0.extend(children);
            guard.1 -= 1;
            if guard.1 == 0 || !guard.0.is_empty() {
                ready.notify_all();
            }
        });
    }
    Ok(MsOutcome {
        image: DwellImage {
            width,
            height,
            max_iter,
            dwell,
        },
        pixels_iterated: iterated.into_inner(),
    })
}

/// Fraction of pixels whose dwell differs between two images.
pub fn mismatch_fraction(a: &DwellImage, b: &DwellImage) -> f64 {
    let differing = a.dwell.iter().zip(&b.dwell).filter(|(x, y)| x != y).count();
    differing as f64 / a.dwell.len() as f64
}
