//! Uniform-grid acceleration for nearest-neighbor, range and empty-ball
//! queries over a point sample.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::sampling::PointSample;

/// Relative tolerance used to report near-exact distance ties.
const TIE_REL_TOL: f64 = 1e-12;

/// Uniform bucket grid over the points of a sample. Buckets are keyed by
/// floor(coord / cell_size) componentwise. Immutable once built.
pub struct GridIndex<'a, const D: usize> {
    cell_size: f64,
    buckets: HashMap<[i64; D], Vec<u32>>,
    source: &'a PointSample<D>,
    min_cell: [i64; D],
    max_cell: [i64; D],
}

/// Result of a nearest query. `ties` lists every co-minimal index (within
/// relative tolerance 1e-12) and always contains `index`.
#[derive(Clone, Debug)]
pub struct NearestHit {
    pub index: u32,
    pub distance: f64,
    pub ties: Vec<u32>,
}

impl NearestHit {
    pub fn is_tie(&self) -> bool {
        self.ties.len() > 1
    }
}

impl<'a, const D: usize> GridIndex<'a, D> {
    /// Builds the index with the given bucket edge length.
    pub fn build(sample: &'a PointSample<D>, cell_size: f64) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let mut buckets: HashMap<[i64; D], Vec<u32>> = HashMap::new();
        let mut min_cell = [i64::MAX; D];
        let mut max_cell = [i64::MIN; D];
        for (i, p) in sample.points().iter().enumerate() {
            let key = Self::cell_key(p, cell_size);
            for d in 0..D {
                min_cell[d] = min_cell[d].min(key[d]);
                max_cell[d] = max_cell[d].max(key[d]);
            }
            buckets.entry(key).or_default().push(i as u32);
        }
        Ok(GridIndex {
            cell_size,
            buckets,
            source: sample,
            min_cell,
            max_cell,
        })
    }

    /// Builds with the default cell size lambda^(-1/D) (about one point per
    /// bucket for a homogeneous sample).
    pub fn build_default(sample: &'a PointSample<D>) -> Result<Self> {
        let cell = sample.lambda().powf(-1.0 / D as f64);
        Self::build(sample, cell)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn source(&self) -> &PointSample<D> {
        self.source
    }

    fn cell_key(p: &Point<D>, cell_size: f64) -> [i64; D] {
        std::array::from_fn(|d| (p.0[d] / cell_size).floor() as i64)
    }

    fn points(&self) -> &[Point<D>] {
        self.source.points()
    }

    /// Visits every bucket at Chebyshev ring `k` around `center`, clipped to
    /// the populated bounding box.
    fn for_ring(&self, center: [i64; D], k: i64, mut visit: impl FnMut(&[u32])) {
        let lo: [i64; D] = std::array::from_fn(|d| (center[d] - k).max(self.min_cell[d]));
        let hi: [i64; D] = std::array::from_fn(|d| (center[d] + k).min(self.max_cell[d]));
        let mut cur = lo;
        'outer: loop {
            let cheb = (0..D)
                .map(|d| (cur[d] - center[d]).abs())
                .max()
                .unwrap_or(0);
            if cheb == k {
                if let Some(bucket) = self.buckets.get(&cur) {
                    visit(bucket);
                }
            }
            for d in 0..D {
                cur[d] += 1;
                if cur[d] <= hi[d] {
                    continue 'outer;
                }
                cur[d] = lo[d];
            }
            break;
        }
    }

    /// Exact nearest non-excluded point by expanding ring search.
    pub fn nearest(&self, q: &Point<D>, exclude: &[u32]) -> Result<NearestHit> {
        if self.buckets.is_empty() {
            return Err(Error::AllPointsExcluded);
        }
        let center = Self::cell_key(q, self.cell_size);
        let max_extent = (0..D)
            .map(|d| {
                (center[d] - self.min_cell[d])
                    .abs()
                    .max((self.max_cell[d] - center[d]).abs())
            })
            .max()
            .unwrap_or(0);

        let mut best: Option<(f64, u32)> = None;
        let mut k = 0i64;
        loop {
            if let Some((d2, _)) = best {
                // Points in ring k are at least (k-1) cells away.
                if k >= 1 && d2.sqrt() <= (k - 1) as f64 * self.cell_size {
                    break;
                }
            }
            if k > max_extent {
                break;
            }
            self.for_ring(center, k, |bucket| {
                for &i in bucket {
                    if exclude.contains(&i) {
                        continue;
                    }
                    let d2 = q.dist_sq(&self.points()[i as usize]);
                    if best.is_none_or(|(b, bi)| d2 < b || (d2 == b && i < bi)) {
                        best = Some((d2, i));
                    }
                }
            });
            k += 1;
        }

        let (best_d2, best_i) = best.ok_or(Error::AllPointsExcluded)?;
        let distance = best_d2.sqrt();
        // Gather co-minimal indices within relative tolerance.
        let tie_radius = distance * (1.0 + TIE_REL_TOL) + f64::MIN_POSITIVE;
        let mut ties: Vec<u32> = Vec::new();
        self.for_ball(q, tie_radius, |i, d2| {
            if exclude.contains(&i) {
                return true;
            }
            if d2.sqrt() <= tie_radius {
                ties.push(i);
            }
            true
        });
        ties.sort_unstable();
        debug_assert!(ties.contains(&best_i));
        Ok(NearestHit {
            index: best_i,
            distance,
            ties,
        })
    }

    /// Visits points in buckets intersecting the ball; the callback returns
    /// `false` to stop early.
    fn for_ball(&self, center: &Point<D>, radius: f64, mut visit: impl FnMut(u32, f64) -> bool) {
        let lo: [i64; D] = std::array::from_fn(|d| {
            (((center.0[d] - radius) / self.cell_size).floor() as i64).max(self.min_cell[d])
        });
        let hi: [i64; D] = std::array::from_fn(|d| {
            (((center.0[d] + radius) / self.cell_size).floor() as i64).min(self.max_cell[d])
        });
        if (0..D).any(|d| lo[d] > hi[d]) {
            return;
        }
        let mut cur = lo;
        'outer: loop {
            if let Some(bucket) = self.buckets.get(&cur) {
                for &i in bucket {
                    let d2 = center.dist_sq(&self.points()[i as usize]);
                    if !visit(i, d2) {
                        return;
                    }
                }
            }
            for d in 0..D {
                cur[d] += 1;
                if cur[d] <= hi[d] {
                    continue 'outer;
                }
                cur[d] = lo[d];
            }
            break;
        }
    }

    /// True iff no non-excluded point lies strictly inside the open ball.
    pub fn ball_empty(&self, center: &Point<D>, radius: f64, exclude: &[u32]) -> bool {
        let r2 = radius * radius;
        let mut empty = true;
        self.for_ball(center, radius, |i, d2| {
            if d2 < r2 && !exclude.contains(&i) {
                empty = false;
                return false;
            }
            true
        });
        empty
    }

    /// All points at distance <= d from q, ascending by (distance, index).
    pub fn within(&self, q: &Point<D>, d: f64) -> Vec<(u32, f64)> {
        let mut hits: Vec<(u32, f64)> = Vec::new();
        let d2max = d * d;
        self.for_ball(q, d, |i, d2| {
            if d2 <= d2max {
                hits.push((i, d2.sqrt()));
            }
            true
        });
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        hits
    }

    /// Upper bound on the radius of any ball empty of sample points and
    /// centered in the sample window: for every center x there is a grid cell
    /// center c with |x - c| <= diag/2, so the empty radius at x is at most
    /// the nearest-point distance at c plus diag/2.
    pub fn largest_empty_ball_bound(&self) -> Result<f64> {
        if self.buckets.is_empty() {
            return Err(Error::EmptySample);
        }
        let window = self.source.window();
        let lo: [i64; D] =
            std::array::from_fn(|d| (window.lo()[d] / self.cell_size).floor() as i64);
        let hi: [i64; D] =
            std::array::from_fn(|d| (window.hi()[d] / self.cell_size).floor() as i64);
        let mut max_dist = 0.0f64;
        let mut cur = lo;
        'outer: loop {
            let center = Point(std::array::from_fn(|d| {
                (cur[d] as f64 + 0.5) * self.cell_size
            }));
            let hit = self.nearest(&center, &[])?;
            max_dist = max_dist.max(hit.distance);
            for d in 0..D {
                cur[d] += 1;
                if cur[d] <= hi[d] {
                    continue 'outer;
                }
                cur[d] = lo[d];
            }
            break;
        }
        Ok(max_dist + 0.5 * self.cell_size * (D as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_poisson, PointSample, RandomStream, Window};

    fn sample2(points: &[[f64; 2]]) -> PointSample<2> {
        let window = Window::new([-100.0, -100.0], [100.0, 100.0]).unwrap();
        PointSample::from_points(points.iter().map(|c| Point(*c)).collect(), window, 1.0).unwrap()
    }

    #[test]
    fn build_bucket_semantics() {
        let sample = sample2(&[[0.5, 0.5], [-0.1, 0.0]]);
        let index = GridIndex::build(&sample, 1.0).unwrap();
        assert_eq!(index.buckets.get(&[0, 0]), Some(&vec![0]));
        assert_eq!(index.buckets.get(&[-1, 0]), Some(&vec![1]));
    }

    #[test]
    fn empty_sample_has_empty_buckets() {
        let sample = sample2(&[]);
        let index = GridIndex::build(&sample, 1.0).unwrap();
        assert!(index.buckets.is_empty());
        assert!(index.nearest(&Point([0.0, 0.0]), &[]).is_err());
    }

    #[test]
    fn nearest_basic_and_excluded() {
        let sample = sample2(&[[0.0, 0.0], [3.0, 0.0]]);
        let index = GridIndex::build(&sample, 1.0).unwrap();
        let hit = index.nearest(&Point([1.0, 0.0]), &[]).unwrap();
        assert_eq!(hit.index, 0);
        assert_eq!(hit.distance, 1.0);
        assert!(!hit.is_tie());

        let hit = index.nearest(&Point([1.0, 0.0]), &[0]).unwrap();
        assert_eq!(hit.index, 1);
        assert_eq!(hit.distance, 2.0);

        assert!(index.nearest(&Point([1.0, 0.0]), &[0, 1]).is_err());
    }

    #[test]
    fn nearest_reports_equidistant_ties() {
        let sample = sample2(&[[0.0, 0.0], [3.0, 0.0]]);
        let index = GridIndex::build(&sample, 1.0).unwrap();
        let hit = index.nearest(&Point([1.5, 0.0]), &[]).unwrap();
        assert!(hit.is_tie());
        assert_eq!(hit.ties, vec![0, 1]);
    }

    #[test]
    fn ball_empty_open_ball_semantics() {
        let sample = sample2(&[[0.0, 0.0]]);
        let index = GridIndex::build(&sample, 1.0).unwrap();
        assert!(index.ball_empty(&Point([5.0, 5.0]), 1.0, &[]));
        assert!(!index.ball_empty(&Point([0.5, 0.0]), 1.0, &[]));
        // point exactly on the boundary: open ball is empty
        assert!(index.ball_empty(&Point([1.0, 0.0]), 1.0, &[]));
    }

    #[test]
    fn within_is_sorted_with_stable_ties() {
        let sample = sample2(&[[2.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [4.0, 0.0]]);
        let index = GridIndex::build(&sample, 1.0).unwrap();
        assert!(index.within(&Point([0.2, 0.0]), 0.5).is_empty());
        let hits = index.within(&Point([0.0, 0.0]), 2.5);
        let order: Vec<u32> = hits.iter().map(|h| h.0).collect();
        // distances: idx1 -> 1, idx2 -> 1 (tie broken by index), idx0 -> 2
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn queries_match_exhaustive_scans_on_random_configurations() {
        for rep in 0..60 {
            let window = Window::new([0.0, 0.0], [10.0, 10.0]).unwrap();
            let mut stream = RandomStream::derive(99, rep);
            let sample = sample_poisson(1.0, &window, &mut stream).unwrap();
            if sample.is_empty() {
                continue;
            }
            let index = GridIndex::build_default(&sample).unwrap();
            use rand::Rng;
            for _ in 0..20 {
                let q = Point([
                    stream.random_range(0.0..10.0),
                    stream.random_range(0.0..10.0),
                ]);
                let hit = index.nearest(&q, &[]).unwrap();
                let brute = sample
                    .points()
                    .iter()
                    .map(|p| q.dist(p))
                    .fold(f64::INFINITY, f64::min);
                assert!((hit.distance - brute).abs() <= 1e-12 * brute.max(1.0));

                let r = stream.random_range(0.1..3.0);
                let brute_in: Vec<u32> = sample
                    .points()
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| q.dist(p) <= r)
                    .map(|(i, _)| i as u32)
                    .collect();
                let mut got: Vec<u32> = index.within(&q, r).iter().map(|h| h.0).collect();
                got.sort_unstable();
                assert_eq!(got, brute_in);

                let brute_empty = sample.points().iter().all(|p| q.dist(p) >= r);
                assert_eq!(index.ball_empty(&q, r, &[]), brute_empty);
            }
        }
    }

    #[test]
    fn ball_empty_is_monotone_in_radius() {
        let window = Window::new([0.0, 0.0], [10.0, 10.0]).unwrap();
        let mut stream = RandomStream::derive(5, 0);
        let sample = sample_poisson(1.0, &window, &mut stream).unwrap();
        let index = GridIndex::build_default(&sample).unwrap();
        let q = Point([5.0, 5.0]);
        let mut prev_empty = true;
        for k in 1..=40 {
            let r = 0.1 * k as f64;
            let empty = index.ball_empty(&q, r, &[]);
            if !prev_empty {
                assert!(!empty, "emptiness must be monotone");
            }
            prev_empty = empty;
        }
    }

    #[test]
    fn empty_ball_bound_single_center_point() {
        let window = Window::new([0.0, 0.0], [10.0, 10.0]).unwrap();
        let sample = PointSample::from_points(vec![Point([5.0, 5.0])], window, 0.01).unwrap();
        let index = GridIndex::build(&sample, 1.0).unwrap();
        let bound = index.largest_empty_ball_bound().unwrap();
        let corner = 50.0_f64.sqrt(); // distance from a corner to the center
        assert!(bound >= corner, "bound {bound} < corner distance {corner}");
        assert!(bound <= corner + 2.0_f64.sqrt(), "bound {bound} too slack");
    }

    #[test]
    fn empty_ball_bound_dense_lattice() {
        let h = 0.5;
        let mut points = Vec::new();
        for i in 0..=20 {
            for j in 0..=20 {
                points.push(Point([i as f64 * h, j as f64 * h]));
            }
        }
        let window = Window::new([0.0, 0.0], [10.0, 10.0]).unwrap();
        let sample = PointSample::from_points(points, window, 4.0).unwrap();
        let index = GridIndex::build(&sample, h).unwrap();
        let bound = index.largest_empty_ball_bound().unwrap();
        assert!(bound <= h * 2.0_f64.sqrt() + 1e-12, "bound {bound}");
    }

    #[test]
    fn empty_ball_bound_dominates_brute_force_maximum() {
        for rep in 0..100 {
            let window = Window::new([0.0, 0.0], [8.0, 8.0]).unwrap();
            let mut stream = RandomStream::derive(1234, rep);
            let sample = sample_poisson(0.8, &window, &mut stream).unwrap();
            if sample.is_empty() {
                continue;
            }
            let index = GridIndex::build_default(&sample).unwrap();
            let bound = index.largest_empty_ball_bound().unwrap();
            let mut true_max = 0.0f64;
            let steps = 80;
            for i in 0..=steps {
                for j in 0..=steps {
                    let q = Point([8.0 * i as f64 / steps as f64, 8.0 * j as f64 / steps as f64]);
                    let d = sample
                        .points()
                        .iter()
                        .map(|p| q.dist(p))
                        .fold(f64::INFINITY, f64::min);
                    true_max = true_max.max(d);
                }
            }
            assert!(
                bound >= true_max,
                "rep {rep}: bound {bound} < brute-force empty radius {true_max}"
            );
        }
    }
}
