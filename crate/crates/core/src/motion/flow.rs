//! Dense least-squares optical flow between two silhouettes.

use super::{MotionError, SummaryMode};
use crate::preprocess::ForegroundMask;

/// Per-pixel displacement from one mask to another.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    valid: Vec<bool>,
}

impl FlowField {
    /// Invalid pixels are forced to (0, 0).
    pub fn new(width: usize, height: usize, mut u: Vec<f32>, mut v: Vec<f32>, valid: Vec<bool>) -> Result<Self, MotionError> {
        let n = width * height;
        if u.len() != n || v.len() != n || valid.len() != n {
            return Err(MotionError::DimensionMismatch(format!(
                "flow field buffers {}/{}/{} for {width}x{height}",
                u.len(),
                v.len(),
                valid.len()
            )));
        }
        for i in 0..n {
            if !valid[i] {
                u[i] = 0.0;
                v[i] = 0.0;
            }
        }
        Ok(FlowField { width, height, u, v, valid })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vector(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// (u, v) of every valid pixel.
    pub fn valid_vectors(&self) -> impl Iterator<Item = (f32, f32)> + '_ {
        (0..self.u.len()).filter(|&i| self.valid[i]).map(|i| (self.u[i], self.v[i]))
    }
}

/// Mean flow and the sampling rate derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSummary {
    pub mean_u: f64,
    pub mean_v: f64,
    /// Length of (mean_u, mean_v).
    pub s: f64,
    pub valid_count: usize,
    pub degenerate: bool,
}

impl FlowSummary {
    pub fn degenerate() -> Self {
        FlowSummary {
            mean_u: 0.0,
            mean_v: 0.0,
            s: 0.0,
            valid_count: 0,
            degenerate: true,
        }
    }

    fn from_components(mean_u: f64, mean_v: f64, valid_count: usize) -> Self {
        FlowSummary {
            mean_u,
            mean_v,
            s: (mean_u * mean_u + mean_v * mean_v).sqrt(),
            valid_count,
            degenerate: false,
        }
    }
}

/// Reduces a field to its mean vector over valid pixels.
pub fn summarize_flow(field: &FlowField) -> FlowSummary {
    summarize_flow_with(field, SummaryMode::Cartesian)
}

pub fn summarize_flow_with(field: &FlowField, mode: SummaryMode) -> FlowSummary {
    let n = field.valid_count();
    if n == 0 {
        return FlowSummary::degenerate();
    }
    match mode {
        SummaryMode::Cartesian => {
            let (su, sv) = field
                .valid_vectors()
                .fold((0.0, 0.0), |(a, b), (u, v)| (a + u as f64, b + v as f64));
            FlowSummary::from_components(su / n as f64, sv / n as f64, n)
        }
        SummaryMode::Polar => {
            let (sm, sa) = field.valid_vectors().fold((0.0, 0.0), |(m, a), (u, v)| {
                let (u, v) = (u as f64, v as f64);
                (m + u.hypot(v), a + v.atan2(u))
            });
            let (mag, angle) = (sm / n as f64, sa / n as f64);
            FlowSummary::from_components(mag * angle.cos(), mag * angle.sin(), n)
        }
    }
}

/// Summed-area table with a zero first row and column.
struct Integral {
    stride: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(width: usize, height: usize, value: impl Fn(usize) -> f64) -> Self {
        let stride = width + 1;
        let mut data = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += value(y * width + x);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Integral { stride, data }
    }

    /// Sum over [x0, x1) x [y0, y1).
    #[inline]
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.stride;
        self.data[y1 * s + x1] - self.data[y0 * s + x1] - self.data[y1 * s + x0] + self.data[y0 * s + x0]
    }
}

#[inline]
fn bilinear(img: &[f32], width: usize, height: usize, x: f32, y: f32) -> f32 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let at = |xi: isize, yi: isize| -> f32 {
        if xi < 0 || yi < 0 || xi >= width as isize || yi >= height as isize {
            0.0
        } else {
            img[yi as usize * width + xi as usize]
        }
    };
    let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
    let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Dense Lucas-Kanade flow from `prev` to `next` over a `window` x `window`
/// neighbourhood, refined by Gauss-Newton iterations at a single scale.
///
/// Gradients are central differences of `prev` on intensities scaled to
/// [0, 1]; outside the frame both masks are background. A pixel is solved
/// only when it is foreground in either mask, its window sees some temporal
/// change, and the smaller eigenvalue of the window's mean structure tensor
/// reaches `eigen_threshold`.
pub fn dense_flow(
    prev: &ForegroundMask,
    next: &ForegroundMask,
    window: usize,
    eigen_threshold: f64,
    iterations: usize,
) -> Result<FlowField, MotionError> {
    let (w, h) = (prev.width(), prev.height());
    if (next.width(), next.height()) != (w, h) {
        return Err(MotionError::DimensionMismatch(format!(
            "flow between {w}x{h} and {}x{}",
            next.width(),
            next.height()
        )));
    }
    if window < 3 || window.is_multiple_of(2) {
        return Err(MotionError::Config(format!("flow window must be odd and >= 3, got {window}")));
    }
    let n = w * h;
    let i0: Vec<f32> = prev.bits().iter().map(|&b| b as f32).collect();
    let i1: Vec<f32> = next.bits().iter().map(|&b| b as f32).collect();
    let mut gx = vec![0f32; n];
    let mut gy = vec![0f32; n];
    for y in 0..h {
        for x in 0..w {
            let at = |xi: isize, yi: isize| -> f32 {
                if xi < 0 || yi < 0 || xi >= w as isize || yi >= h as isize {
                    0.0
                } else {
                    i0[yi as usize * w + xi as usize]
                }
            };
            let (xi, yi) = (x as isize, y as isize);
            gx[y * w + x] = 0.5 * (at(xi + 1, yi) - at(xi - 1, yi));
            gy[y * w + x] = 0.5 * (at(xi, yi + 1) - at(xi, yi - 1));
        }
    }
    let sxx = Integral::new(w, h, |i| (gx[i] * gx[i]) as f64);
    let sxy = Integral::new(w, h, |i| (gx[i] * gy[i]) as f64);
    let syy = Integral::new(w, h, |i| (gy[i] * gy[i]) as f64);
    let change = Integral::new(w, h, |i| (i1[i] - i0[i]).abs() as f64);

    let r = window / 2;
    let mut u = vec![0f32; n];
    let mut v = vec![0f32; n];
    let mut valid = vec![false; n];
    let limit = w.max(h) as f32;
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let idx = y * w + x;
            if prev.bits()[idx] == 0 && next.bits()[idx] == 0 {
                continue;
            }
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            if change.sum(x0, y0, x1, y1) <= 0.0 {
                continue;
            }
            let (a, b, c) = (sxx.sum(x0, y0, x1, y1), sxy.sum(x0, y0, x1, y1), syy.sum(x0, y0, x1, y1));
            let area = ((x1 - x0) * (y1 - y0)) as f64;
            let (ma, mb, mc) = (a / area, b / area, c / area);
            let lambda_min = 0.5 * (ma + mc) - (0.25 * (ma - mc) * (ma - mc) + mb * mb).sqrt();
            if lambda_min < eigen_threshold || lambda_min <= 0.0 {
                continue;
            }
            let det = a * c - b * b;
            let (inv_a, inv_b, inv_c) = (c / det, -b / det, a / det);
            let (mut du, mut dv) = (0f32, 0f32);
            let mut ok = true;
            for _ in 0..iterations {
                let (mut bx, mut by) = (0f64, 0f64);
                for yy in y0..y1 {
                    for xx in x0..x1 {
                        let j = yy * w + xx;
                        let (gxj, gyj) = (gx[j], gy[j]);
                        if gxj == 0.0 && gyj == 0.0 {
                            continue;
                        }
                        let warped = bilinear(&i1, w, h, xx as f32 + du, yy as f32 + dv);
                        let err = warped - i0[j];
                        bx += (gxj * err) as f64;
                        by += (gyj * err) as f64;
                    }
                }
                let step_u = -(inv_a * bx + inv_b * by) as f32;
                let step_v = -(inv_b * bx + inv_c * by) as f32;
                du += step_u;
                dv += step_v;
                if !(du.is_finite() && dv.is_finite()) || du.abs() > limit || dv.abs() > limit {
                    ok = false;
                    break;
                }
                if step_u * step_u + step_v * step_v < 1e-4 {
                    break;
                }
            }
            if ok {
                u[idx] = du;
                v[idx] = dv;
                valid[idx] = true;
            }
        }
    }
    FlowField::new(w, h, u, v, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::videoio::synth::MovingSquare;

    fn mask_of(sq: &MovingSquare, k: usize) -> ForegroundMask {
        ForegroundMask::from_frame(&sq.render(k), 128)
    }

    fn summary_for(velocity: (f64, f64), d: usize, window: usize) -> FlowSummary {
        let sq = MovingSquare::new(96, 96, 20, velocity, d + 1).with_origin(30.0, 30.0);
        let field = dense_flow(&mask_of(&sq, 0), &mask_of(&sq, d), window, 1e-3, 30).unwrap();
        summarize_flow(&field)
    }

    #[test]
    fn identical_masks_have_no_valid_pixels() {
        let sq = MovingSquare::new(48, 48, 12, (0.0, 0.0), 1).with_origin(10.0, 10.0);
        let m = mask_of(&sq, 0);
        let f = dense_flow(&m, &m, 15, 1e-3, 30).unwrap();
        assert_eq!(f.valid_count(), 0);
        assert!((0..48).all(|y| (0..48).all(|x| f.vector(x, y) == (0.0, 0.0))));
        assert!(summarize_flow(&f).degenerate);
    }

    #[test]
    fn horizontal_shift_of_three() {
        let s = summary_for((3.0, 0.0), 1, 15);
        assert!((s.mean_u - 3.0).abs() <= 0.6, "{s:?}");
        assert!(s.mean_v.abs() <= 0.5, "{s:?}");
    }

    #[test]
    fn displacement_scales_with_frame_distance() {
        let s = summary_for((0.0, 2.0), 2, 15);
        assert!((s.mean_v - 4.0).abs() <= 0.8, "{s:?}");
        assert!(s.mean_u.abs() <= 0.5, "{s:?}");
    }

    #[test]
    fn mismatched_masks_rejected() {
        let a = ForegroundMask::empty(4, 4, 0);
        let b = ForegroundMask::empty(5, 4, 0);
        assert!(dense_flow(&a, &b, 3, 1e-3, 5).is_err());
        assert!(dense_flow(&a, &a, 4, 1e-3, 5).is_err());
    }

    fn field_of(vectors: &[(f32, f32)]) -> FlowField {
        let n = vectors.len();
        FlowField::new(
            n,
            1,
            vectors.iter().map(|p| p.0).collect(),
            vectors.iter().map(|p| p.1).collect(),
            vec![true; n],
        )
        .unwrap()
    }

    #[test]
    fn summary_examples() {
        let s = summarize_flow(&field_of(&[(3.0, 4.0); 10]));
        assert_eq!((s.mean_u, s.mean_v, s.s), (3.0, 4.0, 5.0));

        let mut half = vec![(2.0, 0.0); 5];
        half.extend([(4.0, 0.0); 5]);
        let s = summarize_flow(&field_of(&half));
        assert_eq!((s.mean_u, s.mean_v, s.s), (3.0, 0.0, 3.0));

        let empty = FlowField::new(3, 1, vec![1.0; 3], vec![1.0; 3], vec![false; 3]).unwrap();
        let s = summarize_flow(&empty);
        assert!(s.degenerate);
        assert_eq!((s.mean_u, s.mean_v, s.valid_count), (0.0, 0.0, 0));
        assert_eq!(empty.vector(1, 0), (0.0, 0.0));
    }

    #[test]
    fn polar_mode_uses_mean_magnitude() {
        // opposite vectors cancel in Cartesian mode but not in polar mode
        let f = field_of(&[(1.0, 1.0), (1.0, -1.0)]);
        let cart = summarize_flow_with(&f, SummaryMode::Cartesian);
        let polar = summarize_flow_with(&f, SummaryMode::Polar);
        assert!((cart.s - 1.0).abs() < 1e-12);
        assert!((polar.s - 2f64.sqrt()).abs() < 1e-12);
        assert!((polar.s * polar.s - polar.mean_u.powi(2) - polar.mean_v.powi(2)).abs() < 1e-12);
    }
}
