//! Line-of-sight channel gains, achievable rates, and closed-form worst cases
//! over a disk of location uncertainty.
//!
//! All functions here are pure; the validation oracles are built only on top
//! of this module.

use crate::geom::{self, Point};
use crate::scenario::{Scenario, UncertainNode};

/// Power gain `beta0 / (|q - node|^2 + H^2)` from a UAV at horizontal
/// position `q` and altitude `h` to a ground node.
#[inline]
pub fn gain(q: Point, node: Point, h: f64, beta0: f64) -> f64 {
    beta0 / (geom::dist2(q, node) + h * h)
}

/// `log2(1 + P g / sigma^2)` in bits/s/Hz.
#[inline]
pub fn rate(power_w: f64, gain: f64, noise_w: f64) -> f64 {
    (power_w * gain / noise_w).ln_1p() / std::f64::consts::LN_2
}

/// Rate at the legitimate receiver.
#[inline]
pub fn rate_su(power_w: f64, gain: f64, noise_w: f64) -> f64 {
    rate(power_w, gain, noise_w)
}

/// Rate at an eavesdropper.
#[inline]
pub fn rate_eve(power_w: f64, gain: f64, noise_w: f64) -> f64 {
    rate(power_w, gain, noise_w)
}

/// Point of the disk `{center + d : |d| <= radius}` closest to `q`.
pub fn nearest_disk_point(q: Point, center: Point, radius: f64) -> Point {
    let d = geom::dist(q, center);
    if d <= radius {
        q
    } else {
        geom::step_toward(center, q, radius)
    }
}

/// Horizontal distance from `q` to the closest point of the disk.
#[inline]
pub fn disk_clearance(q: Point, center: Point, radius: f64) -> f64 {
    (geom::dist(q, center) - radius).max(0.0)
}

/// Largest gain toward any location inside the node's uncertainty disk.
///
/// Gain decreases with distance, so the maximizer is the disk point nearest
/// to `q`. A missing radius is treated as zero.
pub fn worst_case_eve_gain(q: Point, node: &UncertainNode, h: f64, beta0: f64) -> f64 {
    let d = disk_clearance(q, node.center_xy, node.bounded_radius_m.unwrap_or(0.0));
    beta0 / (d * d + h * h)
}

/// Largest interference power `s_l P` over the PU's uncertainty disk.
pub fn worst_case_interference(
    q: Point,
    power_w: f64,
    node: &UncertainNode,
    h: f64,
    beta0: f64,
) -> f64 {
    power_w * worst_case_eve_gain(q, node, h, beta0)
}

/// Average secrecy rate `(1/N) sum_n min_k [R_U - R_E,k]^+` with each Eve
/// placed at `eve_xy[n][k]` in slot `n`.
pub fn avg_secrecy_rate_per_slot(
    waypoints: &[Point],
    powers: &[f64],
    scenario: &Scenario,
    eve_xy: impl Fn(usize, usize) -> Point,
) -> f64 {
    let n = waypoints.len();
    if n == 0 {
        return 0.0;
    }
    let h = scenario.altitude_m;
    let b = scenario.beta0;
    let total: f64 = (0..n)
        .map(|i| {
            let q = waypoints[i];
            let p = powers[i];
            let ru = rate_su(p, gain(q, scenario.su_xy, h, b), scenario.noise_su_w);
            (0..scenario.eves.len())
                .map(|k| {
                    let re = rate_eve(p, gain(q, eve_xy(i, k), h, b), scenario.noise_eve_w[k]);
                    (ru - re).max(0.0)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / n as f64
}

/// Average secrecy rate with fixed Eve positions.
pub fn avg_secrecy_rate(
    waypoints: &[Point],
    powers: &[f64],
    scenario: &Scenario,
    eve_xy: &[Point],
) -> f64 {
    avg_secrecy_rate_per_slot(waypoints, powers, scenario, |_, k| eve_xy[k])
}

/// Average secrecy rate with every Eve at the worst point of its disk, slot by slot.
pub fn worst_case_secrecy_rate(waypoints: &[Point], powers: &[f64], scenario: &Scenario) -> f64 {
    avg_secrecy_rate_per_slot(waypoints, powers, scenario, |n, k| {
        let e = &scenario.eves[k];
        nearest_disk_point(waypoints[n], e.center_xy, e.bounded_radius_m.unwrap_or(0.0))
    })
}

/// Average interference `(1/N) sum_n s_l[n] P[n]` at the worst PU location per slot.
pub fn worst_case_avg_interference(
    waypoints: &[Point],
    powers: &[f64],
    pu: &UncertainNode,
    scenario: &Scenario,
) -> f64 {
    let n = waypoints.len().max(1) as f64;
    waypoints
        .iter()
        .zip(powers)
        .map(|(q, p)| worst_case_interference(*q, *p, pu, scenario.altitude_m, scenario.beta0))
        .sum::<f64>()
        / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_fixture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node(c: Point, r: f64) -> UncertainNode {
        UncertainNode {
            center_xy: c,
            bounded_radius_m: Some(r),
            gaussian_std_m: None,
        }
    }

    /// Fine polar grid over the disk, boundary included.
    fn grid_max_gain(q: Point, c: Point, r: f64, h: f64, b: f64) -> f64 {
        let mut best = gain(q, c, h, b);
        for i in 1..=100 {
            let rr = r * i as f64 / 100.0;
            for j in 0..100 {
                let a = j as f64 * std::f64::consts::TAU / 100.0;
                best = best.max(gain(q, [c[0] + rr * a.cos(), c[1] + rr * a.sin()], h, b));
            }
        }
        best
    }

    #[test]
    fn gain_directly_above_node() {
        assert_eq!(gain([3.0, 4.0], [3.0, 4.0], 100.0, 1e-6), 1e-6 / 1e4);
    }

    #[test]
    fn gain_with_unit_denominator_terms() {
        // horizontal offset 0 and H = 100 gives denominator 1e4
        let g = gain([0.0, 0.0], [0.0, 0.0], 100.0, 1e-6);
        assert!((g - 1e-10).abs() < 1e-24);
        // offset (60, 80): 1e4 + 1e4
        let g = gain([0.0, 0.0], [60.0, 80.0], 100.0, 1e-6);
        assert!((g - 5e-11).abs() < 1e-24);
    }

    #[test]
    fn gain_is_monotone_in_distance() {
        let mut d = 1.0;
        while d < 1e5 {
            assert!(gain([0.0, 0.0], [2.0 * d, 0.0], 50.0, 1.0) <= gain([0.0, 0.0], [d, 0.0], 50.0, 1.0));
            d *= 1.7;
        }
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate_su(0.0, 1.0, 1.0), 0.0);
        assert!((rate_su(1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((rate_eve(3.0, 1.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rate_is_concave_in_power() {
        let h = 1e-3;
        for p in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let f = |x: f64| rate(x, 0.3, 0.01);
            let second = (f(p + h) - 2.0 * f(p) + f(p - h)) / (h * h);
            assert!(second <= 1e-9, "p = {p}: {second}");
        }
    }

    #[test]
    fn worst_case_gain_examples() {
        let b = 1e-6;
        let n = node([100.0, 0.0], 30.0);
        let g = worst_case_eve_gain([0.0, 0.0], &n, 100.0, b);
        assert!((g - b / 14900.0).abs() < 1e-22);
        assert!((g / grid_max_gain([0.0, 0.0], [100.0, 0.0], 30.0, 100.0, b) - 1.0).abs() < 1e-9);

        let zero = node([100.0, 0.0], 0.0);
        assert_eq!(worst_case_eve_gain([0.0, 0.0], &zero, 100.0, b), gain([0.0, 0.0], [100.0, 0.0], 100.0, b));

        let inside = node([10.0, 0.0], 30.0);
        assert_eq!(worst_case_eve_gain([0.0, 0.0], &inside, 100.0, b), b / 1e4);
    }

    #[test]
    fn worst_case_interference_examples() {
        let pu = node([-40.0, -80.0], 9.0);
        assert_eq!(worst_case_interference([0.0, 0.0], 0.0, &pu, 100.0, 0.1), 0.0);
        let exact = node([-40.0, -80.0], 0.0);
        assert_eq!(
            worst_case_interference([5.0, 5.0], 0.3, &exact, 100.0, 0.1),
            0.3 * gain([5.0, 5.0], [-40.0, -80.0], 100.0, 0.1)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let q = [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)];
            let c = [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)];
            let r = rng.gen_range(0.0..60.0);
            let p = rng.gen_range(0.0..1.0);
            let closed = worst_case_interference(q, p, &node(c, r), 100.0, 0.1);
            let grid = p * grid_max_gain(q, c, r, 100.0, 0.1);
            assert!(closed >= grid * (1.0 - 1e-12));
            assert!((closed - grid).abs() <= 1e-3 * closed, "{closed} vs {grid}");
        }
    }

    #[test]
    fn worst_case_dominates_random_disk_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q = [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)];
            let c = [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)];
            let r = rng.gen_range(0.0..80.0);
            let wc = worst_case_eve_gain(q, &node(c, r), 100.0, 1.0);
            for _ in 0..1000 {
                let rr = r * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let p = [c[0] + rr * a.cos(), c[1] + rr * a.sin()];
                assert!(gain(q, p, 100.0, 1.0) <= wc * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn secrecy_rate_trivial_cases() {
        let s = default_fixture();
        let wp = vec![[0.0, 0.0]; 4];
        assert_eq!(avg_secrecy_rate(&wp, &[0.0; 4], &s, &[[240.0, -120.0], [-240.0, 120.0]]), 0.0);
        // an Eve sitting on the SU with identical noise sees the same rate
        let mut one = s.clone();
        one.eves.truncate(1);
        one.noise_eve_w.truncate(1);
        assert_eq!(avg_secrecy_rate(&wp, &[0.1; 4], &one, &[one.su_xy]), 0.0);
    }

    #[test]
    fn secrecy_rate_matches_slot_by_slot_sum_and_is_eve_symmetric() {
        let s = default_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 17;
        let wp: Vec<Point> = (0..n)
            .map(|_| [rng.gen_range(-250.0..250.0), rng.gen_range(-250.0..250.0)])
            .collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.4)).collect();
        let eves = [[240.0, -120.0], [-240.0, 120.0]];
        let got = avg_secrecy_rate(&wp, &p, &s, &eves);

        let mut brute = 0.0;
        for i in 0..n {
            let d2 = |a: Point| (wp[i][0] - a[0]).powi(2) + (wp[i][1] - a[1]).powi(2) + 1e4;
            let ru = (1.0 + p[i] * s.beta0 / d2(s.su_xy) / s.noise_su_w).log2();
            let mut best = f64::MAX;
            for (k, e) in eves.iter().enumerate() {
                let re = (1.0 + p[i] * s.beta0 / d2(*e) / s.noise_eve_w[k]).log2();
                best = best.min(if ru > re { ru - re } else { 0.0 });
            }
            brute += best;
        }
        assert!((got - brute / n as f64).abs() < 1e-12);

        let swapped = avg_secrecy_rate(&wp, &p, &s, &[eves[1], eves[0]]);
        assert!((got - swapped).abs() < 1e-12);
    }
}
