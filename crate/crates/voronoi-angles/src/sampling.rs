//! Reproducible homogeneous Poisson sampling in rectangular windows, with
//! Palm augmentation (a deterministic extra point at the origin).
//!
//! Randomness is organized as counter-based streams: a `(master_seed,
//! replication_index)` pair addresses a statistically independent ChaCha
//! stream, so the output of a run depends only on the master seed and the
//! replication count, never on execution order or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Uniform};

use crate::error::{Error, Result};
use crate::geom::Point;

/// Axis-aligned rectangular window with positive volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
}

impl<const D: usize> Window<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self> {
        for d in 0..D {
            if !lo[d].is_finite() || !hi[d].is_finite() || lo[d] >= hi[d] {
                return Err(Error::InvalidWindow(format!(
                    "need lo < hi componentwise, got lo[{d}]={} hi[{d}]={}",
                    lo[d], hi[d]
                )));
            }
        }
        Ok(Window { lo, hi })
    }

    /// The cube [-half, half]^D.
    pub fn centered(half: f64) -> Result<Self> {
        Window::new([-half; D], [half; D])
    }

    pub fn lo(&self) -> &[f64; D] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64; D] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        (0..D).map(|d| self.hi[d] - self.lo[d]).product()
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|d| self.lo[d] <= p.0[d] && p.0[d] <= self.hi[d])
    }

    pub fn contains_strictly(&self, p: &Point<D>) -> bool {
        (0..D).all(|d| self.lo[d] < p.0[d] && p.0[d] < self.hi[d])
    }

    pub fn contains_ball(&self, center: &Point<D>, radius: f64) -> bool {
        (0..D).all(|d| center.0[d] - radius >= self.lo[d] && center.0[d] + radius <= self.hi[d])
    }

    pub fn contains_window(&self, inner: &Window<D>) -> bool {
        (0..D).all(|d| self.lo[d] <= inner.lo[d] && inner.hi[d] <= self.hi[d])
    }

    /// Shrinks the window by `margin` on every side.
    pub fn shrink(&self, margin: f64) -> Result<Self> {
        Window::new(
            std::array::from_fn(|d| self.lo[d] + margin),
            std::array::from_fn(|d| self.hi[d] - margin),
        )
    }
}

/// A realization of the Poisson process in a window. When `palm` is set the
/// first point is a deterministically added origin.
#[derive(Clone, Debug)]
pub struct PointSample<const D: usize> {
    points: Vec<Point<D>>,
    window: Window<D>,
    lambda: f64,
    palm: bool,
}

impl<const D: usize> PointSample<D> {
    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> &Window<D> {
        &self.window
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_palm(&self) -> bool {
        self.palm
    }

    /// Assembles a sample from explicit points; used by tests and synthetic
    /// configurations. All points must lie inside the window.
    pub fn from_points(points: Vec<Point<D>>, window: Window<D>, lambda: f64) -> Result<Self> {
        for p in &points {
            if !window.contains(p) {
                return Err(Error::InvalidWindow(format!(
                    "point {:?} outside the window",
                    p.coords()
                )));
            }
        }
        Ok(PointSample {
            points,
            window,
            lambda,
            palm: false,
        })
    }
}

/// A counter-based random stream addressed by (master_seed, replication).
#[derive(Clone, Debug)]
pub struct RandomStream {
    master_seed: u64,
    replication: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Deterministic, collision-free stream derivation: the master seed keys
    /// the cipher, the replication index selects the stream.
    pub fn derive(master_seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replication);
        RandomStream {
            master_seed,
            replication,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    /// Number of 32-bit words drawn so far.
    pub fn draw_counter(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

/// See [`RandomStream::derive`].
pub fn derive_stream(master_seed: u64, replication_index: u64) -> RandomStream {
    RandomStream::derive(master_seed, replication_index)
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest);
    }
}

/// Draws a homogeneous Poisson sample of intensity `lambda` in `window`:
/// a Poisson(lambda |W|) count of independent uniform locations.
pub fn sample_poisson<const D: usize>(
    lambda: f64,
    window: &Window<D>,
    stream: &mut RandomStream,
) -> Result<PointSample<D>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "intensity must be positive, got {lambda}"
        )));
    }
    let mean = lambda * window.volume();
    if mean > 1e8 {
        return Err(Error::SampleTooLarge(mean));
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("poisson: {e}")))?
        .sample(stream) as usize;
    let uniforms: [Uniform<f64>; D] = std::array::from_fn(|d| {
        Uniform::new(window.lo[d], window.hi[d]).expect("window invariant")
    });
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        points.push(Point(std::array::from_fn(|d| uniforms[d].sample(stream))));
    }
    Ok(PointSample {
        points,
        window: *window,
        lambda,
        palm: false,
    })
}

/// Prepends the origin to a sample (Palm augmentation). The origin must lie
/// strictly inside the window and the sample must not already be augmented.
pub fn palm_augment<const D: usize>(sample: &PointSample<D>) -> Result<PointSample<D>> {
    if sample.palm {
        return Err(Error::AlreadyPalmAugmented);
    }
    if !sample.window.contains_strictly(&Point::origin()) {
        return Err(Error::OriginOutsideWindow);
    }
    let mut points = Vec::with_capacity(sample.points.len() + 1);
    points.push(Point::origin());
    points.extend_from_slice(&sample.points);
    Ok(PointSample {
        points,
        window: sample.window,
        lambda: sample.lambda,
        palm: true,
    })
}
