//! Deterministic synthetic video used as ground truth for the flow and
//! background-subtraction tests, and as a stand-in dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Frame, FrameStream, Rational, StreamSource, VideoError};

/// A bright square translating at constant velocity over a dark background.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingSquare {
    pub width: usize,
    pub height: usize,
    pub size: usize,
    /// Top-left corner at frame 0.
    pub origin: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    pub frame_count: usize,
    pub foreground: u8,
    pub background: u8,
}

impl MovingSquare {
    pub fn new(width: usize, height: usize, size: usize, velocity: (f64, f64), frame_count: usize) -> Self {
        MovingSquare {
            width,
            height,
            size,
            origin: (0.0, 0.0),
            velocity,
            frame_count,
            foreground: 255,
            background: 0,
        }
    }

    pub fn with_origin(mut self, x: f64, y: f64) -> Self {
        self.origin = (x, y);
        self
    }

    /// Top-left corner of the square in frame `k`.
    pub fn position(&self, k: usize) -> (i64, i64) {
        let x = self.origin.0 + self.velocity.0 * k as f64;
        let y = self.origin.1 + self.velocity.1 * k as f64;
        (x.round() as i64, y.round() as i64)
    }

    pub fn validate(&self) -> Result<(), VideoError> {
        if self.width == 0 || self.height == 0 || self.size == 0 {
            return Err(VideoError::Geometry("dimensions must be positive".into()));
        }
        for k in 0..self.frame_count {
            let (x, y) = self.position(k);
            let fits = |p: i64, extent: usize| p >= 0 && p + self.size as i64 <= extent as i64;
            if !fits(x, self.width) || !fits(y, self.height) {
                return Err(VideoError::Geometry(format!(
                    "square at ({x}, {y}) leaves the {}x{} frame at frame {k}",
                    self.width, self.height
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self, k: usize) -> Frame {
        let mut pixels = vec![self.background; self.width * self.height];
        let (x0, y0) = self.position(k);
        for y in y0.max(0)..(y0 + self.size as i64).min(self.height as i64) {
            let row = y as usize * self.width;
            for x in x0.max(0)..(x0 + self.size as i64).min(self.width as i64) {
                pixels[row + x as usize] = self.foreground;
            }
        }
        Frame::new(self.width, self.height, pixels, k).expect("dimensions validated")
    }

    pub fn frames(&self) -> Result<Vec<Frame>, VideoError> {
        self.validate()?;
        Ok((0..self.frame_count).map(|k| self.render(k)).collect())
    }

    pub fn stream(&self) -> Result<FrameStream, VideoError> {
        self.validate()?;
        let me = self.clone();
        let desc = format!(
            "moving-square {}x{} size {} v=({}, {}) n={}",
            self.width, self.height, self.size, self.velocity.0, self.velocity.1, self.frame_count
        );
        Ok(FrameStream::from_iter(
            Rational::default(),
            (self.width, self.height),
            StreamSource::Synthetic(desc),
            Box::new((0..self.frame_count).map(move |k| Ok(me.render(k)))),
        ))
    }
}

/// White square of side `square_size` starting at the top-left corner and
/// advancing by `velocity` each frame.
pub fn synth_moving_square(
    width: usize,
    height: usize,
    square_size: usize,
    velocity: (i32, i32),
    frame_count: usize,
) -> Result<FrameStream, VideoError> {
    MovingSquare::new(
        width,
        height,
        square_size,
        (velocity.0 as f64, velocity.1 as f64),
        frame_count,
    )
    .stream()
}

/// A crude walking figure: torso, head and two swinging legs.
#[derive(Debug, Clone, PartialEq)]
pub struct Walker {
    /// Torso centre at frame 0.
    pub start: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// Torso half-width; other parts scale with it.
    pub size: f64,
    /// Relative size increase per frame (approaching an overhead camera).
    pub growth: f64,
    pub intensity: u8,
    /// Stride phase advance per pixel travelled.
    pub gait: f64,
    /// Darkening factor of a cast shadow beside the figure, if any.
    pub shadow: Option<f64>,
}

impl Walker {
    fn scale(&self, t: f64) -> f64 {
        self.size * (1.0 + self.growth * t)
    }

    fn centre(&self, t: f64) -> (f64, f64) {
        (self.start.0 + self.velocity.0 * t, self.start.1 + self.velocity.1 * t)
    }

    /// Ellipses (cx, cy, rx, ry) making up the figure at time `t`.
    fn parts(&self, t: f64) -> [(f64, f64, f64, f64); 4] {
        let (cx, cy) = self.centre(t);
        let s = self.scale(t);
        let speed = self.velocity.0.hypot(self.velocity.1);
        let swing = (self.gait * speed * t).sin() * 0.8 * s;
        // legs swing along the direction of travel
        let (dx, dy) = if speed > 0.0 {
            (self.velocity.0 / speed, self.velocity.1 / speed)
        } else {
            (1.0, 0.0)
        };
        [
            (cx, cy, s, 1.6 * s),
            (cx, cy - 2.1 * s, 0.7 * s, 0.7 * s),
            (cx + dx * swing - 0.5 * s, cy + 2.0 * s + dy * swing, 0.35 * s, 0.9 * s),
            (cx - dx * swing + 0.5 * s, cy + 2.0 * s - dy * swing, 0.35 * s, 0.9 * s),
        ]
    }

    fn paint(&self, t: f64, canvas: &mut [f32], width: usize, height: usize) {
        if let Some(factor) = self.shadow {
            let (cx, cy) = self.centre(t);
            let s = self.scale(t);
            fill_ellipse(canvas, width, height, (cx + 2.2 * s, cy + 1.5 * s, 1.3 * s, 2.0 * s), |v| {
                v * factor as f32
            });
        }
        let level = self.intensity as f32;
        for part in self.parts(t) {
            fill_ellipse(canvas, width, height, part, |_| level);
        }
    }
}

fn fill_ellipse(
    canvas: &mut [f32],
    width: usize,
    height: usize,
    (cx, cy, rx, ry): (f64, f64, f64, f64),
    shade: impl Fn(f32) -> f32,
) {
    let y_lo = (cy - ry).floor().max(0.0) as usize;
    let y_hi = ((cy + ry).ceil() as i64).min(height as i64 - 1);
    let x_lo = (cx - rx).floor().max(0.0) as usize;
    let x_hi = ((cx + rx).ceil() as i64).min(width as i64 - 1);
    if y_hi < 0 || x_hi < 0 {
        return;
    }
    for y in y_lo..=y_hi as usize {
        let ny = (y as f64 + 0.5 - cy) / ry;
        for x in x_lo..=x_hi as usize {
            let nx = (x as f64 + 0.5 - cx) / rx;
            if nx * nx + ny * ny <= 1.0 {
                let v = &mut canvas[y * width + x];
                *v = shade(*v);
            }
        }
    }
}

/// A static textured background with moving figures and sensor noise.
#[derive(Debug, Clone)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub background: Vec<f32>,
    pub walkers: Vec<Walker>,
    /// Gaussian sensor noise standard deviation, in intensity levels.
    pub noise: f64,
    pub seed: u64,
}

impl Scene {
    /// Background of slowly varying intensity around `level`.
    pub fn textured_background(width: usize, height: usize, level: f64, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (fx, fy) = (rng.random_range(0.02..0.08), rng.random_range(0.02..0.08));
        let (px, py) = (rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
        let mut bg = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let t = (fx * x as f64 + px).sin() * (fy * y as f64 + py).cos();
                bg.push((level + 12.0 * t) as f32);
            }
        }
        bg
    }

    pub fn render(&self, k: usize) -> Frame {
        let mut canvas = self.background.clone();
        for walker in &self.walkers {
            walker.paint(k as f64, &mut canvas, self.width, self.height);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let noise = Normal::new(0.0, self.noise.max(0.0)).expect("finite std");
        let pixels = canvas
            .iter()
            .map(|&v| {
                let n = if self.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (v as f64 + n).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Frame::new(self.width, self.height, pixels, k).expect("scene dimensions")
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.frame_count).map(|k| self.render(k)).collect()
    }

    pub fn stream(&self, description: impl Into<String>) -> FrameStream {
        let me = self.clone();
        FrameStream::from_iter(
            Rational::default(),
            (self.width, self.height),
            StreamSource::Synthetic(description.into()),
            Box::new((0..self.frame_count).map(move |k| Ok(me.render(k)))),
        )
    }
}

/// Two behaviours seen by a camera mounted above a door at the bottom edge
/// of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DoorBehaviour {
    /// Walks from the far side of the scene toward the door and through it.
    Approach,
    /// Crosses the scene sideways without heading for the door.
    PassBy,
}

impl DoorBehaviour {
    pub const ALL: [DoorBehaviour; 2] = [DoorBehaviour::Approach, DoorBehaviour::PassBy];

    pub fn name(self) -> &'static str {
        match self {
            DoorBehaviour::Approach => "approach",
            DoorBehaviour::PassBy => "pass_by",
        }
    }
}

/// Random door-scenario clip at 160x120. Each clip opens with a few empty
/// frames so the background model sees a clean scene first.
pub fn door_scene(behaviour: DoorBehaviour, seed: u64) -> Scene {
    let (width, height) = (160usize, 120usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lead_in = rng.random_range(6..12) as f64;
    let speed: f64 = rng.random_range(1.2..3.6);
    let size: f64 = rng.random_range(4.5..7.0);
    let (start, velocity, growth) = match behaviour {
        DoorBehaviour::Approach => {
            let angle: f64 = rng.random_range(-0.45..0.45);
            let x_end = rng.random_range(55.0..105.0);
            let (vx, vy) = (speed * angle.sin(), speed * angle.cos());
            // aim to cross the bottom edge near x_end
            let travel = (height as f64 + 8.0 * size) / vy;
            let x0 = x_end - vx * travel;
            ((x0 - vx * lead_in, -4.0 * size - vy * lead_in), (vx, vy), 0.004)
        }
        DoorBehaviour::PassBy => {
            let angle: f64 = rng.random_range(-0.3..0.3);
            let leftwards = rng.random_bool(0.5);
            let dir = if leftwards { -1.0 } else { 1.0 };
            let (vx, vy) = (dir * speed * angle.cos(), speed * angle.sin());
            let y0 = rng.random_range(35.0..80.0);
            let x0 = if leftwards {
                width as f64 + 4.0 * size
            } else {
                -4.0 * size
            };
            ((x0 - vx * lead_in, y0 - vy * lead_in), (vx, vy), 0.0)
        }
    };
    let span = match behaviour {
        DoorBehaviour::Approach => height as f64 + 8.0 * size,
        DoorBehaviour::PassBy => width as f64 + 8.0 * size,
    };
    let frame_count = (lead_in + span / speed).ceil() as usize + 4;
    let bg_level = rng.random_range(40.0..90.0);
    let intensity = rng.random_range(170..240) as u8;
    let walker = Walker {
        start,
        velocity,
        size,
        growth,
        intensity,
        gait: rng.random_range(0.15..0.3),
        shadow: rng.random_bool(0.5).then(|| rng.random_range(0.6..0.85)),
    };
    Scene {
        width,
        height,
        frame_count: frame_count.min(160),
        background: Scene::textured_background(width, height, bg_level, rng.random()),
        walkers: vec![walker],
        noise: rng.random_range(1.0..4.0),
        seed: rng.random(),
    }
}

/// A long 160x120 clip with one figure pacing back and forth, for throughput
/// measurement.
pub fn pacing_scene(frame_count: usize, seed: u64) -> Scene {
    let (width, height) = (160usize, 120usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = Scene::textured_background(width, height, 60.0, rng.random());
    let walkers = (0..frame_count.div_ceil(60) + 1)
        .map(|i| {
            let dir = if i % 2 == 0 { 1.0 } else { -1.0 };
            let x0 = if dir > 0.0 { -10.0 } else { 170.0 };
            Walker {
                start: (x0 - dir * 3.0 * 60.0 * i as f64, 60.0),
                velocity: (dir * 3.0, 0.0),
                size: 6.0,
                growth: 0.0,
                intensity: 210,
                gait: 0.2,
                shadow: None,
            }
        })
        .collect();
    Scene {
        width,
        height,
        frame_count,
        background,
        walkers,
        noise: 2.0,
        seed: rng.random(),
    }
}
