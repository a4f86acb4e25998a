use super::PreprocessError;
use crate::videoio::Frame;

/// Normalized sampled 1-D Gaussian of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Vec<f64>, PreprocessError> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(PreprocessError::Parameter(format!(
            "kernel size must be odd and positive, got {size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PreprocessError::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    let r = (size / 2) as f64;
    let mut k: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Reflect-101 index: `-1 -> 1`, `n -> n - 2`.
#[inline]
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Separable Gaussian smoothing with reflect-101 borders, real-valued output.
pub fn gaussian_blur_values(
    width: usize,
    height: usize,
    input: &[f32],
    kernel_size: usize,
    sigma: f64,
) -> Result<Vec<f32>, PreprocessError> {
    let kernel: Vec<f32> = gaussian_kernel(kernel_size, sigma)?
        .into_iter()
        .map(|v| v as f32)
        .collect();
    let r = (kernel_size / 2) as isize;
    let mut tmp = vec![0f32; width * height];
    for y in 0..height {
        let row = &input[y * width..(y + 1) * width];
        let out = &mut tmp[y * width..(y + 1) * width];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0f32;
            if x as isize >= r && (x as isize + r) < width as isize {
                let start = x - r as usize;
                for (k, &w) in kernel.iter().enumerate() {
                    acc += w * row[start + k];
                }
            } else {
                for (k, &w) in kernel.iter().enumerate() {
                    acc += w * row[reflect101(x as isize + k as isize - r, width)];
                }
            }
            *o = acc;
        }
    }
    let mut out = vec![0f32; width * height];
    for y in 0..height {
        let dst = &mut out[y * width..(y + 1) * width];
        for (k, &w) in kernel.iter().enumerate() {
            let sy = reflect101(y as isize + k as isize - r, height);
            let src = &tmp[sy * width..(sy + 1) * width];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    Ok(out)
}

/// Gaussian blur of an 8-bit frame, rounded back to 8 bits.
pub fn gaussian_blur(frame: &Frame, kernel_size: usize, sigma: f64) -> Result<Frame, PreprocessError> {
    let input: Vec<f32> = frame.pixels().iter().map(|&p| p as f32).collect();
    let values = gaussian_blur_values(frame.width(), frame.height(), &input, kernel_size, sigma)?;
    let pixels = values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Ok(Frame::new(frame.width(), frame.height(), pixels, frame.index()).expect("same dimensions as input"))
}
