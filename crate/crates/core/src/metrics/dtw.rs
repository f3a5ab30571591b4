//! Dynamic time warping between actor position sequences.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::trace::ActorTrack;

/// Classic unconstrained DTW over (x, y) positions with Euclidean point cost.
/// Returns the total cost of the cheapest monotone alignment from the first
/// to the last point of both tracks, in meters.
pub fn dtw(track_a: &ActorTrack, track_b: &ActorTrack) -> Result<f64> {
    let a: Vec<Vec2> = track_a.positions().collect();
    let b: Vec<Vec2> = track_b.positions().collect();
    dtw_points(&a, &b)
}

/// [`dtw`] on raw point sequences.
pub fn dtw_points(a: &[Vec2], b: &[Vec2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("dtw needs two non-empty tracks".into()));
    }
    // keep the shorter sequence along the row so memory is O(min(n, m))
    let (rows, cols) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![f64::INFINITY; cols.len()];
    let mut cur = vec![f64::INFINITY; cols.len()];
    for (i, p) in rows.iter().enumerate() {
        for (j, q) in cols.iter().enumerate() {
            let d = p.distance(*q);
            cur[j] = if i == 0 && j == 0 {
                d
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                diag.min(up).min(left) + d
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[cols.len() - 1])
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Minimum over every monotone warp path, summed in path order.
    fn brute_force(a: &[Vec2], b: &[Vec2]) -> f64 {
        fn walk(a: &[Vec2], b: &[Vec2], i: usize, j: usize, acc: f64, best: &mut f64) {
            let acc = acc + a[i].distance(b[j]);
            if i + 1 == a.len() && j + 1 == b.len() {
                *best = best.min(acc);
                return;
            }
            if i + 1 < a.len() {
                walk(a, b, i + 1, j, acc, best);
            }
            if j + 1 < b.len() {
                walk(a, b, i, j + 1, acc, best);
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                walk(a, b, i + 1, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(a, b, 0, 0, 0.0, &mut best);
        best
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
        (0..n)
            .map(|_| Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect()
    }

    #[test]
    fn matches_enumeration_on_short_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
            let (a, b) = (random_points(&mut rng, n), random_points(&mut rng, m));
            assert_eq!(dtw_points(&a, &b).unwrap(), brute_force(&a, &b));
        }
    }

    #[test]
    fn identity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_points(&mut rng, 50);
        let b = random_points(&mut rng, 37);
        assert_eq!(dtw_points(&a, &a).unwrap(), 0.0);
        assert_eq!(dtw_points(&a, &b).unwrap(), dtw_points(&b, &a).unwrap());
    }

    #[test]
    fn constant_offset_costs_offset_per_point() {
        let a: Vec<Vec2> = (0..2000).map(|i| Vec2::new(i as f64 * 0.1, 0.0)).collect();
        let b: Vec<Vec2> = a.iter().map(|p| Vec2::new(p.x, 0.005)).collect();
        assert!((dtw_points(&a, &b).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(dtw_points(&[], &[Vec2::default()]).is_err());
    }
}
