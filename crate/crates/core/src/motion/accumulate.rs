use super::MotionError;
use crate::preprocess::ForegroundMask;
use crate::videoio::Frame;

/// Real-valued motion-weighted image, values in [0, 255].
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationImage {
    width: usize,
    height: usize,
    values: Vec<f32>,
    sample_count: usize,
}

impl RepresentationImage {
    pub fn new(width: usize, height: usize, values: Vec<f32>, sample_count: usize) -> Result<Self, MotionError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(MotionError::DimensionMismatch(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        Ok(RepresentationImage {
            width,
            height,
            values,
            sample_count,
        })
    }

    pub fn from_frame(frame: &Frame) -> Self {
        RepresentationImage {
            width: frame.width(),
            height: frame.height(),
            values: frame.pixels().iter().map(|&p| p as f32).collect(),
            sample_count: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Rounded, clamped 8-bit export.
    pub fn to_frame(&self) -> Frame {
        let pixels = self.values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
        Frame::new(self.width, self.height, pixels, 0).expect("positive dimensions")
    }

    pub fn resized(&self, width: usize, height: usize) -> Self {
        RepresentationImage {
            width,
            height,
            values: resize_bilinear(&self.values, self.width, self.height, width, height),
            sample_count: self.sample_count,
        }
    }
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub fn resize_bilinear(src: &[f32], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f32> {
    if (sw, sh) == (dw, dh) {
        return src.to_vec();
    }
    let axis = |d: usize, s: usize, n: usize| -> (usize, usize, f32) {
        let scale = s as f32 / n as f32;
        let pos = ((d as f32 + 0.5) * scale - 0.5).clamp(0.0, (s - 1) as f32);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(s - 1);
        (lo, hi, pos - lo as f32)
    };
    let cols: Vec<_> = (0..dw).map(|x| axis(x, sw, dw)).collect();
    let mut out = Vec::with_capacity(dw * dh);
    for y in 0..dh {
        let (y0, y1, fy) = axis(y, sh, dh);
        let (r0, r1) = (&src[y0 * sw..(y0 + 1) * sw], &src[y1 * sw..(y1 + 1) * sw]);
        for &(x0, x1, fx) in &cols {
            let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
    out
}

/// Running R <- clamp(beta * R + F, 0, 255) at native resolution.
#[derive(Debug, Clone)]
pub struct Accumulator {
    width: usize,
    height: usize,
    beta: f32,
    values: Vec<f32>,
    count: usize,
}

impl Accumulator {
    pub fn new(width: usize, height: usize, beta: f64) -> Self {
        Accumulator {
            width,
            height,
            beta: beta as f32,
            values: vec![0.0; width * height],
            count: 0,
        }
    }

    pub fn push_values(&mut self, frame: &[f32]) -> Result<(), MotionError> {
        if frame.len() != self.values.len() {
            return Err(MotionError::DimensionMismatch(format!(
                "{} values added to a {}x{} accumulator",
                frame.len(),
                self.width,
                self.height
            )));
        }
        if self.count == 0 {
            for (r, &f) in self.values.iter_mut().zip(frame) {
                *r = f.clamp(0.0, 255.0);
            }
        } else {
            let beta = self.beta;
            for (r, &f) in self.values.iter_mut().zip(frame) {
                *r = (beta * *r + f).clamp(0.0, 255.0);
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Adds a mask rendered as 0/255.
    pub fn push_mask(&mut self, mask: &ForegroundMask) -> Result<(), MotionError> {
        if (mask.width(), mask.height()) != (self.width, self.height) {
            return Err(MotionError::DimensionMismatch(format!(
                "{}x{} mask added to a {}x{} accumulator",
                mask.width(),
                mask.height(),
                self.width,
                self.height
            )));
        }
        if self.count == 0 {
            for (r, &b) in self.values.iter_mut().zip(mask.bits()) {
                *r = b as f32 * 255.0;
            }
        } else {
            let beta = self.beta;
            for (r, &b) in self.values.iter_mut().zip(mask.bits()) {
                *r = (beta * *r + b as f32 * 255.0).min(255.0);
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn finish(self, output_size: (usize, usize)) -> Result<RepresentationImage, MotionError> {
        if self.count == 0 {
            return Err(MotionError::EmptyInput("nothing accumulated".into()));
        }
        let native = RepresentationImage::new(self.width, self.height, self.values, self.count)?;
        Ok(native.resized(output_size.0, output_size.1))
    }
}

/// Folds samples oldest-first into one image and resizes it to `output_size`.
pub fn accumulate(
    samples: &[ForegroundMask],
    beta: f64,
    output_size: (usize, usize),
) -> Result<RepresentationImage, MotionError> {
    let first = samples
        .first()
        .ok_or_else(|| MotionError::EmptyInput("no samples to accumulate".into()))?;
    let mut acc = Accumulator::new(first.width(), first.height(), beta);
    for s in samples {
        acc.push_mask(s)?;
    }
    acc.finish(output_size)
}
