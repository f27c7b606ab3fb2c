//! Volumes and radial densities in R^n, all in log scale.
//!
//! The decoding regions this crate cares about are Euclidean balls (white
//! Gaussian noise), L1 balls (symmetric exponential noise), ellipsoids
//! (colored Gaussian noise), and — for hard-core codebooks — the "lune" that
//! a ball centered at a displaced codeword keeps outside the exclusion ball
//! of the codeword itself.  Radial noise profiles enter through the chi and
//! gamma densities of the L2/L1 norm of a white noise vector.

use std::fmt;

use crate::numerics::{ln_gamma, log_diff_exp, LN_PI};

/// Which norm a "ball" refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// Ellipsoid semi-axis scale factors must be strictly positive.
    NonPositiveEigenvalue { index: usize, value: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NonPositiveEigenvalue { index, value } => write!(
                f,
                "ellipsoid eigenvalue {} is {} but must be > 0",
                index, value
            ),
        }
    }
}

impl std::error::Error for GeometryError {}

/// Log volume of the radius-`r` ball in `R^n` under the given norm;
/// `r = 0` gives `-inf`.
///
/// L2: `ln( r^n pi^{n/2} / Gamma(n/2 + 1) )`;  L1: `ln( (2r)^n / n! )`.
pub fn log_ball_volume(n: usize, r: f64, norm: Norm) -> f64 {
    assert!(n >= 1 && r >= 0.0, "log_ball_volume domain: n >= 1, r >= 0");
    if r == 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    match norm {
        Norm::L2 => nf * r.ln() + 0.5 * nf * LN_PI - ln_gamma(0.5 * nf + 1.0),
        Norm::L1 => nf * (2.0 * r).ln() - ln_gamma(nf + 1.0),
    }
}

/// Log volume of the ellipsoid `{x : sum_i x_i^2 / s_i^2 <= r^2}` given the
/// semi-axis scales `s_i` (`eigenvalues`): the L2 ball volume plus
/// `sum ln s_i`.
pub fn log_ellipsoid_volume(n: usize, r: f64, eigenvalues: &[f64]) -> Result<f64, GeometryError> {
    assert_eq!(eigenvalues.len(), n, "need one eigenvalue per dimension");
    let mut log_scales = 0.0;
    for (i, &s) in eigenvalues.iter().enumerate() {
        if s <= 0.0 || !s.is_finite() {
            return Err(GeometryError::NonPositiveEigenvalue { index: i, value: s });
        }
        log_scales += s.ln();
    }
    Ok(log_ball_volume(n, r, Norm::L2) + log_scales)
}

/// Log density of the L2 norm of an n-vector of independent N(0, sigma^2)
/// coordinates (the chi distribution scaled by sigma), evaluated at `r > 0`:
///
/// `ln g = -r^2/(2 sigma^2) + (n-1) ln r - n ln sigma - (n/2) ln 2 + ln 2 - ln Gamma(n/2)`.
pub fn chi_density_log(n: usize, sigma: f64, r: f64) -> f64 {
    assert!(n >= 1 && sigma > 0.0, "chi_density_log domain");
    if r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    -r * r / (2.0 * sigma * sigma) + (nf - 1.0) * r.ln() - nf * sigma.ln()
        - 0.5 * nf * std::f64::consts::LN_2
        + std::f64::consts::LN_2
        - ln_gamma(0.5 * nf)
}

/// Log density of the L1 norm of an n-vector of independent symmetric
/// exponential coordinates with per-coordinate standard deviation `sigma`
/// (density `(sqrt2 / 2 sigma) exp(-|x| sqrt2 / sigma)`): a Gamma
/// distribution with shape `n` and rate `sqrt2 / sigma`.
pub fn gamma_l1_density_log(n: usize, sigma: f64, r: f64) -> f64 {
    assert!(n >= 1 && sigma > 0.0, "gamma_l1_density_log domain");
    if r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    let rate = std::f64::consts::SQRT_2 / sigma;
    nf * rate.ln() + (nf - 1.0) * r.ln() - rate * r - ln_gamma(nf)
}

/// Radius of the largest ball centered at distance `v` from a hard-core
/// point that stays outside that point's exclusion ball of radius
/// `alpha_tilde`, in normalized units (both arguments in units of
/// `sigma sqrt(n)`).  Piecewise:
///
/// * `v <= alpha_tilde / 2`       — the ball is swallowed entirely: 0;
/// * `alpha_tilde/2 < v <= alpha_tilde / sqrt2` — the chord radius
///   `sqrt(v^2 - d^2)` with `d = alpha_tilde^2/(2v) - v` the signed distance
///   from the displaced center to the bisecting hyperplane;
/// * `v > alpha_tilde / sqrt2`    — the full ball of radius `v` fits.
///
/// Values at the breakpoints are the right-hand limits, which coincide with
/// the left-hand ones: the function is continuous.
pub fn matern_lune_radius(v: f64, alpha_tilde: f64) -> f64 {
    assert!(v > 0.0 && alpha_tilde > 0.0, "matern_lune_radius domain");
    if v <= 0.5 * alpha_tilde {
        0.0
    } else if v < alpha_tilde / std::f64::consts::SQRT_2 {
        let d = alpha_tilde * alpha_tilde / (2.0 * v) - v;
        (v * v - d * d).max(0.0).sqrt()
    } else {
        v
    }
}

/// Lower and upper log-volume bounds for the L1 analogue of the lune: the
/// part of the L1 ball of radius `v n sigma / sqrt2` around a point at L1
/// distance `v n sigma / sqrt2` from a hard-core center that escapes the
/// center's L1 exclusion ball of radius `alpha_tilde n sigma / sqrt2`.
///
/// For `v <= alpha_tilde / 2` the lune is empty and both bounds are `-inf`.
/// Otherwise the upper bound is the full L1 ball around the displaced point
/// and the lower bound is the `2^{n-1}`-fold orthant slab
/// `2^{-n} ((sqrt2 v sigma)^n - (sqrt2 (alpha_tilde - v) sigma)^n) n^n / n!`
/// (second term dropped when `v >= alpha_tilde`).  The gap between the two
/// is `O(1)` in logs, so the bounds pin the same exponential rate.
pub fn l1_lune_log_volume_bounds(
    n: usize,
    v: f64,
    alpha_tilde: f64,
    sigma: f64,
) -> (f64, f64) {
    assert!(n >= 1 && v > 0.0 && alpha_tilde > 0.0 && sigma > 0.0);
    if v <= 0.5 * alpha_tilde {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    let nf = n as f64;
    let sqrt2 = std::f64::consts::SQRT_2;
    let upper = nf * (sqrt2 * v * nf * sigma).ln() - ln_gamma(nf + 1.0);
    let term_v = nf * (sqrt2 * v * sigma).ln();
    let term_rest = if alpha_tilde > v {
        nf * (sqrt2 * (alpha_tilde - v) * sigma).ln()
    } else {
        f64::NEG_INFINITY
    };
    let diff = log_diff_exp(term_v, term_rest);
    let lower = if diff == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        -std::f64::consts::LN_2 + diff + nf * nf.ln() - ln_gamma(nf + 1.0)
    };
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_volumes_match_closed_forms() {
        // Unit disk, unit 3-ball, L1 balls with hand-computed volumes.
        assert!((log_ball_volume(2, 1.0, Norm::L2) - LN_PI).abs() < 1e-14);
        assert!(
            (log_ball_volume(3, 2.0, Norm::L2) - (32.0 * std::f64::consts::PI / 3.0).ln()).abs()
                < 1e-13
        );
        assert!((log_ball_volume(1, 3.0, Norm::L1) - 6.0f64.ln()).abs() < 1e-14);
        // (2*2)^3/3! = 64/6
        assert!((log_ball_volume(3, 2.0, Norm::L1) - 2.367_123_614_131_616).abs() < 1e-13);
        assert_eq!(log_ball_volume(5, 0.0, Norm::L2), f64::NEG_INFINITY);
        assert_eq!(log_ball_volume(5, 0.0, Norm::L1), f64::NEG_INFINITY);
    }

    #[test]
    fn ball_volumes_match_hit_or_miss_monte_carlo() {
        // Volume fraction of the ball inside its bounding cube, estimated by
        // sampling; 1e6 points gives ~0.1% noise at n <= 6, assert 1%.
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b9);
        for n in 1..=6usize {
            for &r in &[0.5, 1.0, 2.0] {
                for norm in [Norm::L1, Norm::L2] {
                    let samples = 1_000_000u64;
                    let mut hits = 0u64;
                    for _ in 0..samples {
                        let mut s = 0.0;
                        for _ in 0..n {
                            let x: f64 = rng.gen_range(-r..r);
                            s += match norm {
                                Norm::L1 => x.abs(),
                                Norm::L2 => x * x,
                            };
                        }
                        let inside = match norm {
                            Norm::L1 => s <= r,
                            Norm::L2 => s <= r * r,
                        };
                        if inside {
                            hits += 1;
                        }
                    }
                    let cube = (n as f64) * (2.0 * r).ln();
                    let est = (hits as f64 / samples as f64).ln() + cube;
                    let want = log_ball_volume(n, r, norm);
                    // The hit fraction of the L1 ball is 1/n!, below 1% from
                    // n = 5 on, so the achievable accuracy is set by the
                    // binomial noise of ln(hits): widen 1% to 3.5 sigma when
                    // the latter is larger.
                    let p = (want - cube).exp();
                    let sigma_ln = ((1.0 - p) / (p * samples as f64)).sqrt();
                    let tol = 0.01f64.max(3.5 * sigma_ln);
                    assert!(
                        (est - want).abs() < tol,
                        "n={n} r={r} {norm:?}: mc {est} vs {want} (tol {tol})"
                    );
                }
            }
        }
    }

    #[test]
    fn ellipsoid_volume_is_ball_times_scales() {
        let ev = [2.0, 0.5, 1.0];
        let got = log_ellipsoid_volume(3, 1.3, &ev).unwrap();
        let want = log_ball_volume(3, 1.3, Norm::L2) + 2.0f64.ln() + 0.5f64.ln();
        assert!((got - want).abs() < 1e-14);
        // Degenerate axis is a domain error.
        match log_ellipsoid_volume(2, 1.0, &[1.0, 0.0]) {
            Err(GeometryError::NonPositiveEigenvalue { index: 1, .. }) => {}
            other => panic!("expected eigenvalue error, got {other:?}"),
        }
    }

    #[test]
    fn chi_density_known_values_and_scaling() {
        // n=2, sigma=1, r=1: ln(r e^{-r^2/2}) = -1/2.
        assert!((chi_density_log(2, 1.0, 1.0) + 0.5).abs() < 1e-14);
        // n=1: half-normal at 1.
        assert!((chi_density_log(1, 1.0, 1.0) - (-0.725_791_352_644_727_4)).abs() < 1e-14);
        // Scale family: g_sigma(r) = g_1(r/sigma)/sigma.
        for &(n, sigma, r) in &[(3usize, 0.7, 1.9), (10, 2.5, 4.0), (1, 0.1, 0.05)] {
            let lhs = chi_density_log(n, sigma, r);
            let rhs = chi_density_log(n, 1.0, r / sigma) - sigma.ln();
            assert!((lhs - rhs).abs() < 1e-12, "scaling at n={n}");
        }
        assert_eq!(chi_density_log(4, 1.0, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn chi_density_normalizes() {
        for &n in &[1usize, 2, 5, 40] {
            let ln_norm = crate::numerics::log_integrate(
                |r| chi_density_log(n, 1.0, r),
                0.0,
                (n as f64).sqrt() + 20.0,
                1e-12,
                4000,
            )
            .unwrap();
            assert!(ln_norm.abs() < 1e-11, "n={n}: {ln_norm}");
        }
    }

    #[test]
    fn gamma_l1_density_known_values_and_mode() {
        // n=1, sigma=1, r=1: ln(sqrt2 e^{-sqrt2}).
        assert!((gamma_l1_density_log(1, 1.0, 1.0) - (-1.067_639_972_093_122_4)).abs() < 1e-14);
        // n=2, sigma=1: mode of r e^{-sqrt2 r} at 1/sqrt2.
        let mode = 1.0 / std::f64::consts::SQRT_2;
        let at_mode = gamma_l1_density_log(2, 1.0, mode);
        for &dr in &[-1e-3, 1e-3] {
            assert!(gamma_l1_density_log(2, 1.0, mode + dr) < at_mode);
        }
        // Normalization.
        for &n in &[1usize, 3, 25] {
            let ln_norm = crate::numerics::log_integrate(
                |r| gamma_l1_density_log(n, 1.0, r),
                0.0,
                n as f64 + 20.0 * (n as f64).sqrt(),
                1e-12,
                4000,
            )
            .unwrap();
            assert!(ln_norm.abs() < 1e-11, "n={n}: {ln_norm}");
        }
    }

    #[test]
    fn lune_radius_branches_and_continuity() {
        // Inside the swallowed zone.
        assert_eq!(matern_lune_radius(0.9, 2.0), 0.0);
        // Chord branch value.
        assert!((matern_lune_radius(1.2, 2.0) - 1.105_541_596_785_133_2).abs() < 1e-14);
        // Full-ball branch.
        assert!((matern_lune_radius(1.5, 2.0) - 1.5).abs() < 1e-14);
        // Continuity at both breakpoints for several alpha_tilde.  At
        // alpha_tilde/2 the radius grows like sqrt(v - alpha_tilde/2), so
        // f64 can only pin the SQUARED radius to 1e-12 there (the square
        // root amplifies one ulp of the chord formula to ~1e-8); at
        // alpha_tilde/sqrt2 the function is smooth and the radius itself
        // agrees at 1e-12.
        for &at in &[0.5f64, 1.0, 2.0, 3.7] {
            let bp1 = 0.5 * at;
            let chord_at_bp1 = {
                let d = at * at / (2.0 * bp1) - bp1;
                (bp1 * bp1 - d * d).max(0.0)
            };
            assert!(
                chord_at_bp1.abs() < 1e-12 * at * at,
                "chord^2 at alpha_tilde/2 not zero for alpha_tilde {at}"
            );
            assert_eq!(matern_lune_radius(bp1, at), 0.0);
            // Square-root approach from the right: c(bp + delta) <= K sqrt(delta),
            // shrinking with delta.
            let mut prev = f64::INFINITY;
            for &delta in &[1e-4, 1e-6, 1e-8, 1e-10] {
                let c = matern_lune_radius(bp1 + delta, at);
                assert!(c < 3.0 * (at * delta).sqrt() && c < prev);
                prev = c;
            }
            let bp2 = at / std::f64::consts::SQRT_2;
            let d = at * at / (2.0 * bp2) - bp2;
            let chord = (bp2 * bp2 - d * d).max(0.0).sqrt();
            assert!(
                (chord - bp2).abs() < 1e-12 * at,
                "branch mismatch at alpha_tilde/sqrt2 for alpha_tilde {at}"
            );
            assert!((matern_lune_radius(bp2, at) - bp2).abs() < 1e-12 * at);
        }
        // The chord radius is monotone increasing on its branch.
        let mut prev = 0.0;
        for i in 0..100 {
            let v = 1.0 + 0.414 * (i as f64) / 100.0;
            let c = matern_lune_radius(v, 2.0);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn l1_lune_bounds_sandwich() {
        // Empty lune.
        assert_eq!(
            l1_lune_log_volume_bounds(5, 0.9, 2.0, 1.0),
            (f64::NEG_INFINITY, f64::NEG_INFINITY)
        );
        // Gap shrinks relative to n and the upper bound has the right rate:
        // at v = 2, alpha_tilde = 2, sigma = 1, upper/n -> ln(2 sqrt2 e).
        let target = (2.0 * std::f64::consts::SQRT_2 * std::f64::consts::E).ln();
        let mut prev_gap_rate = f64::INFINITY;
        for &n in &[5usize, 20, 80, 320] {
            let (lo, hi) = l1_lune_log_volume_bounds(n, 2.0, 2.0, 1.0);
            assert!(lo <= hi);
            let gap_rate = (hi - lo) / n as f64;
            assert!(gap_rate < prev_gap_rate);
            prev_gap_rate = gap_rate;
            if n == 320 {
                assert!(gap_rate < 0.01);
                assert!((hi / n as f64 - target).abs() < 0.03, "rate {}", hi / n as f64);
            }
        }
        // Lower bound stays below upper in the chord zone too.
        let (lo, hi) = l1_lune_log_volume_bounds(12, 1.3, 2.0, 0.8);
        assert!(lo.is_finite() && hi.is_finite() && lo < hi);
    }

    #[test]
    fn stirling_volume_and_gamma_sandwiches() {
        // Gamma sandwich: sqrt(2pi/x) (x/e)^x <= Gamma(x) <= 1.1 * same,
        // checked on integers 1..=200.
        for x in 1..=200u32 {
            let xf = x as f64;
            let stirling = 0.5 * (2.0 * std::f64::consts::PI / xf).ln() + xf * (xf.ln() - 1.0);
            let lg = ln_gamma(xf);
            assert!(lg >= stirling - 1e-12, "lower fails at {x}");
            assert!(lg <= stirling + 1.1f64.ln() + 1e-12, "upper fails at {x}");
        }
        // Volume sandwich: the deficit of the L2 ball log-volume at radius
        // sqrt(n v) against (n/2) ln(2 e pi v) is exactly
        // (1/2) ln(pi n) + 1/(6n) + o(1/n); with the (1/2) ln(n+2) term
        // removed it stays inside a fixed band.  Constant frozen at 0.65.
        for &n in &[10usize, 17, 50, 123, 400] {
            for &v in &[0.3, 1.0, 4.2] {
                let nf = n as f64;
                let deficit = 0.5 * nf * (2.0 * std::f64::consts::E * std::f64::consts::PI * v).ln()
                    - log_ball_volume(n, (nf * v).sqrt(), Norm::L2);
                let centered = deficit - 0.5 * ((nf + 2.0).ln());
                assert!(
                    (0.0..=0.65).contains(&centered),
                    "n={n} v={v}: centered deficit {centered}"
                );
            }
        }
    }
}
