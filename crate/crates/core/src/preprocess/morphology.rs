//! Binary erosion and dilation with a square structuring element of side
//! `2 * radius + 1`. Pixels outside the frame count as background for both.

use super::{ForegroundMask, PreprocessError};

#[derive(Clone, Copy)]
enum Op {
    Erode,
    Dilate,
}

/// One 1-D pass over `len` samples spaced `stride` apart, starting at `base`.
#[allow(clippy::too_many_arguments)]
fn pass_1d(src: &[u8], dst: &mut [u8], base: usize, len: usize, stride: usize, radius: usize, op: Op, counts: &mut Vec<u32>) {
    counts.clear();
    counts.push(0);
    let mut acc = 0u32;
    for i in 0..len {
        acc += src[base + i * stride] as u32;
        counts.push(acc);
    }
    let full = (2 * radius + 1) as u32;
    for i in 0..len {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(len);
        let ones = counts[hi] - counts[lo];
        dst[base + i * stride] = match op {
            // out-of-frame neighbours are background, so a clipped window never erodes to 1
            Op::Erode => u8::from(ones == full),
            Op::Dilate => u8::from(ones > 0),
        };
    }
}

fn apply(mask: &ForegroundMask, radius: usize, op: Op) -> Result<ForegroundMask, PreprocessError> {
    if radius == 0 {
        return Err(PreprocessError::Parameter("morphology radius must be >= 1".into()));
    }
    let (w, h) = (mask.width(), mask.height());
    let mut tmp = vec![0u8; w * h];
    let mut out = vec![0u8; w * h];
    let mut counts = Vec::with_capacity(w.max(h) + 1);
    for y in 0..h {
        pass_1d(mask.bits(), &mut tmp, y * w, w, 1, radius, op, &mut counts);
    }
    for x in 0..w {
        pass_1d(&tmp, &mut out, x, h, w, radius, op, &mut counts);
    }
    Ok(ForegroundMask::from_raw(w, h, out, mask.frame_index()))
}

pub fn erode(mask: &ForegroundMask, radius: usize) -> Result<ForegroundMask, PreprocessError> {
    apply(mask, radius, Op::Erode)
}

pub fn dilate(mask: &ForegroundMask, radius: usize) -> Result<ForegroundMask, PreprocessError> {
    apply(mask, radius, Op::Dilate)
}

/// Erosion followed by dilation.
pub fn open(mask: &ForegroundMask, radius: usize) -> Result<ForegroundMask, PreprocessError> {
    dilate(&erode(mask, radius)?, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct definition over the full window.
    fn naive(mask: &ForegroundMask, radius: usize, erode: bool) -> ForegroundMask {
        let (w, h) = (mask.width() as isize, mask.height() as isize);
        let r = radius as isize;
        let mut out = ForegroundMask::empty(mask.width(), mask.height(), 0);
        for y in 0..h {
            for x in 0..w {
                let mut all = true;
                let mut any = false;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (sx, sy) = (x + dx, y + dy);
                        let v = sx >= 0 && sy >= 0 && sx < w && sy < h && mask.get(sx as usize, sy as usize);
                        all &= v;
                        any |= v;
                    }
                }
                out.set(x as usize, y as usize, if erode { all } else { any });
            }
        }
        out
    }

    fn arb_mask() -> impl Strategy<Value = ForegroundMask> {
        (3usize..20, 3usize..20).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| ForegroundMask::from_bits(w, h, bits, 0))
        })
    }

    #[test]
    fn full_mask_erodes_its_border() {
        let m = ForegroundMask::from_bits(6, 5, std::iter::repeat_n(true, 30), 0);
        let e = erode(&m, 1).unwrap();
        for y in 0..5 {
            for x in 0..6 {
                let interior = x > 0 && y > 0 && x < 5 && y < 4;
                assert_eq!(e.get(x, y), interior, "({x},{y})");
            }
        }
    }

    #[test]
    fn single_pixel() {
        let mut m = ForegroundMask::empty(7, 7, 0);
        m.set(3, 3, true);
        assert_eq!(erode(&m, 1).unwrap().count(), 0);
        let d = dilate(&m, 1).unwrap();
        assert_eq!(d.count(), 9);
        for y in 2..=4 {
            for x in 2..=4 {
                assert!(d.get(x, y));
            }
        }
    }

    #[test]
    fn zero_radius_rejected() {
        let m = ForegroundMask::empty(3, 3, 0);
        assert!(erode(&m, 0).is_err());
        assert!(dilate(&m, 0).is_err());
    }

    proptest! {
        #[test]
        fn matches_direct_definition(m in arb_mask(), r in 1usize..3) {
            prop_assert_eq!(erode(&m, r).unwrap(), naive(&m, r, true));
            prop_assert_eq!(dilate(&m, r).unwrap(), naive(&m, r, false));
        }

        // Treating the outside as background for both operations breaks duality
        // within `r` of the edge, so compare only pixels whose window is inside.
        #[test]
        fn duality_away_from_border(m in arb_mask(), r in 1usize..3) {
            let lhs = dilate(&m.complement(), r).unwrap();
            let rhs = erode(&m, r).unwrap().complement();
            for y in r..m.height().saturating_sub(r) {
                for x in r..m.width().saturating_sub(r) {
                    prop_assert_eq!(lhs.get(x, y), rhs.get(x, y));
                }
            }
        }

        #[test]
        fn opening_is_idempotent(m in arb_mask(), r in 1usize..3) {
            let once = open(&m, r).unwrap();
            prop_assert_eq!(open(&once, r).unwrap(), once);
        }
    }
}
