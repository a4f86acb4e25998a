use crate::videoio::Frame;

/// Binary foreground/background raster aligned with a source frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    width: usize,
    height: usize,
    /// 1 = foreground, 0 = background.
    bits: Vec<u8>,
    frame_index: usize,
}

impl ForegroundMask {
    pub fn empty(width: usize, height: usize, frame_index: usize) -> Self {
        ForegroundMask {
            width,
            height,
            bits: vec![0; width * height],
            frame_index,
        }
    }

    /// Builds a mask from any per-pixel truthy values. Panics if the length
    /// does not match the dimensions.
    pub fn from_bits(width: usize, height: usize, bits: impl IntoIterator<Item = bool>, frame_index: usize) -> Self {
        let bits: Vec<u8> = bits.into_iter().map(u8::from).collect();
        assert_eq!(bits.len(), width * height, "mask length");
        ForegroundMask {
            width,
            height,
            bits,
            frame_index,
        }
    }

    /// Thresholds a frame: pixels at or above `threshold` are foreground.
    pub fn from_frame(frame: &Frame, threshold: u8) -> Self {
        Self::from_bits(
            frame.width(),
            frame.height(),
            frame.pixels().iter().map(|&p| p >= threshold),
            frame.index(),
        )
    }

    pub(crate) fn from_raw(width: usize, height: usize, bits: Vec<u8>, frame_index: usize) -> Self {
        debug_assert_eq!(bits.len(), width * height);
        debug_assert!(bits.iter().all(|&b| b <= 1));
        ForegroundMask {
            width,
            height,
            bits,
            frame_index,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn with_frame_index(mut self, index: usize) -> Self {
        self.frame_index = index;
        self
    }

    /// Raw 0/1 values, row-major.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = u8::from(value);
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b != 0)
    }

    pub fn complement(&self) -> Self {
        ForegroundMask {
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
            ..self.clone()
        }
    }

    /// Intersection over union against another mask of the same size; 1 when
    /// both are empty.
    pub fn iou(&self, other: &ForegroundMask) -> f64 {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a & b) as usize;
            union += (a | b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// 0/255 rendering, for export or as flow input.
    pub fn to_frame(&self) -> Frame {
        Frame::new(
            self.width,
            self.height,
            self.bits.iter().map(|&b| b * 255).collect(),
            self.frame_index,
        )
        .expect("mask dimensions are positive")
    }
}
