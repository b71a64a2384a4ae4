//! Families of choreographies parametrized by the radius `R`, and their
//! approach to the planar problem as `R → ∞`.
//!
//! Distances on the disk tend to twice the Euclidean ones, so `2 q_R` tends to
//! a planar choreography at rate `1/R²`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::action::{Configuration, Curvature};
use crate::geometry::CurvatureRadius;
use crate::optimizer::{self, Choreography, Phase1Options, Phase2Options};
use crate::trigpath::{node, TrigPath};
use crate::verify::{verify_all, Thresholds};
use crate::{ChoreoError, Result, TWO_PI};

type C64 = Complex64;

/// One solved member of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub radius: CurvatureRadius,
    pub choreo: Choreography,
    /// Aligned `∞`-norm of `2 q_R - q_∞`.
    pub diff_to_planar: f64,
}

/// A continuation run: the members that converged, in sweep order, and the
/// radius at which it stopped, if it did not finish.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub members: Vec<FamilyMember>,
    pub failed_at: Option<f64>,
}

/// Two-phase solve in the plane.
pub fn solve_planar(
    config: &Configuration,
    seed: &TrigPath,
    opts1: &Phase1Options,
    opts2: &Phase2Options,
) -> Result<Choreography> {
    if config.curvature != Curvature::Planar {
        return Err(ChoreoError::InvalidConfig("expected the planar configuration"));
    }
    optimizer::solve(config, seed, opts1, opts2)
}

/// Settings for [`continue_in_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub newton: Phase2Options,
    /// Used only when Newton from the warm start fails.
    pub bfgs: Phase1Options,
    /// Every member must pass these.
    pub thresholds: Thresholds,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            newton: Phase2Options {
                max_iterations: 20,
                ..Phase2Options::default()
            },
            bfgs: Phase1Options::default(),
            thresholds: Thresholds {
                decay: 1e-12,
                gradient: 1e-10,
                residual: 1e-9,
            },
        }
    }
}

/// Follows a planar choreography into the disk along descending radii.
///
/// The first member starts from `q_∞ / 2`; each later one starts from its
/// predecessor, which keeps rotation and phase aligned along the family.
pub fn continue_in_radius(
    planar: &Choreography,
    radii: &[f64],
    opts: &ContinuationOptions,
) -> Result<Sweep> {
    if planar.config.curvature != Curvature::Planar {
        return Err(ChoreoError::InvalidConfig("continuation starts from a planar solution"));
    }
    if radii.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(ChoreoError::InvalidConfig("radii must be strictly descending"));
    }
    let mut members = Vec::with_capacity(radii.len());
    let mut start = planar.path.scaled(0.5);
    for &r in radii {
        let radius = CurvatureRadius::new(r)?;
        let config = planar.config.with_curvature(Curvature::Hyperbolic(radius));
        let Some(choreo) = solve_member(&config, &start, opts) else {
            return Ok(Sweep {
                members,
                failed_at: Some(r),
            });
        };
        let diff = planar_limit_diff(&choreo, planar)?;
        start = choreo.path.clone();
        members.push(FamilyMember {
            radius,
            choreo,
            diff_to_planar: diff,
        });
    }
    Ok(Sweep {
        members,
        failed_at: None,
    })
}

/// Radius beyond which [`planar_limit_of`] switches to the plane.
pub const PLANAR_HANDOFF_RADIUS: f64 = 1e4;

/// The planar member of the family through a hyperbolic choreography.
///
/// Follows the family up in `R` with adaptive warm-started steps until
/// [`PLANAR_HANDOFF_RADIUS`], then solves in the plane from `2 q_R`. Jumping
/// straight from a small `R` to the plane can land on another family.
pub fn planar_limit_of(start: &Choreography, opts: &ContinuationOptions) -> Result<Choreography> {
    let Curvature::Hyperbolic(r0) = start.config.curvature else {
        return Ok(start.clone());
    };
    let mut radius = r0.get();
    let mut path = start.path.clone();
    let mut factor: f64 = 1.25;
    while radius < PLANAR_HANDOFF_RADIUS {
        let next = (radius * factor).min(PLANAR_HANDOFF_RADIUS);
        let config = start
            .config
            .with_curvature(Curvature::Hyperbolic(CurvatureRadius::new(next)?));
        match solve_member(&config, &path, opts) {
            Some(c) => {
                radius = next;
                path = c.path;
                factor = (factor * factor).min(2.0);
            }
            None if factor > 1.005 => factor = factor.sqrt(),
            None => return Err(ChoreoError::ContinuationFailed(next)),
        }
    }
    let config = start.config.with_curvature(Curvature::Planar);
    solve_member(&config, &path.scaled(2.0), opts).ok_or(ChoreoError::ContinuationFailed(f64::INFINITY))
}

fn solve_member(config: &Configuration, start: &TrigPath, opts: &ContinuationOptions) -> Option<Choreography> {
    let passes = |c: &Choreography| verify_all(c, &opts.thresholds).passed;
    if let Ok(c) = optimizer::refine(config, start, &opts.newton) {
        if passes(&c) {
            return Some(c);
        }
    }
    let newton = Phase2Options {
        bandwidth: Some(config.bandwidth),
        ..opts.newton
    };
    optimizer::solve(config, start, &opts.bfgs, &newton)
        .ok()
        .filter(passes)
}

/// `∞`-norm of `2 q_R(t) - e^{iθ} q_∞(t + s)` after alignment.
///
/// `(s, θ)` minimize the `L²` distance between the curves; its maximizer is
/// found by a scan of the cross-correlation followed by Newton iterations, so
/// the alignment is reproducible to round-off. The maximum over `t` is taken
/// on a grid ten times finer than the larger coefficient count and then
/// refined at each candidate peak.
pub fn planar_limit_diff(hyperbolic: &Choreography, planar: &Choreography) -> Result<f64> {
    if hyperbolic.config.bodies != planar.config.bodies {
        return Err(ChoreoError::MismatchedBodies(
            hyperbolic.config.bodies,
            planar.config.bodies,
        ));
    }
    let scale = if hyperbolic.config.curvature == Curvature::Planar {
        1.0
    } else {
        2.0
    };
    Ok(aligned_sup_distance(&hyperbolic.path.scaled(scale), &planar.path))
}

/// `min_{s,θ}` of the `L²` distance selects the gauge; returns the sup-norm there.
pub fn aligned_sup_distance(a: &TrigPath, b: &TrigPath) -> f64 {
    let (s, theta) = align(a, b);
    let b = b.shift(s).rotate(theta);
    sup_distance(a, &b)
}

/// `C(s) = Σ_k a_k conj(b_k) e^{-iks}` and its first two derivatives.
fn correlation(a: &TrigPath, b: &TrigPath, s: f64) -> [C64; 3] {
    let kk = a.bandwidth().min(b.bandwidth()) as i64;
    let mut out = [C64::new(0.0, 0.0); 3];
    for k in -kk..=kk {
        let term = a.coeff(k) * b.coeff(k).conj() * C64::from_polar(1.0, -(k as f64) * s);
        let ik = C64::new(0.0, -(k as f64));
        out[0] += term;
        out[1] += term * ik;
        out[2] += term * ik * ik;
    }
    out
}

/// Time shift and rotation maximizing `|C(s)|`, i.e. the `L²` alignment of
/// `b` onto `a`.
pub fn align(a: &TrigPath, b: &TrigPath) -> (f64, f64) {
    let kk = a.bandwidth().max(b.bandwidth());
    let grid = 20 * (2 * kk + 1);
    let power = |s: f64| correlation(a, b, s)[0].norm_sqr();
    let mut s = (0..grid)
        .map(|i| node(i, grid))
        .fold((0.0, -1.0), |best, s| {
            let p = power(s);
            if p > best.1 {
                (s, p)
            } else {
                best
            }
        })
        .0;
    let h = TWO_PI / grid as f64;
    for _ in 0..50 {
        let [c, c1, c2] = correlation(a, b, s);
        let d1 = 2.0 * (c.conj() * c1).re;
        let d2 = 2.0 * (c1.norm_sqr() + (c.conj() * c2).re);
        if !(d2 < 0.0) {
            break;
        }
        let step = (-d1 / d2).clamp(-h, h);
        s += step;
        if step.abs() <= 1e-15 * (1.0 + s.abs()) {
            break;
        }
    }
    let s = s - TWO_PI * (s / TWO_PI).floor();
    (s, correlation(a, b, s)[0].arg())
}

/// `max_t |a(t) - b(t)|`, refined around the peaks of a fine grid.
pub fn sup_distance(a: &TrigPath, b: &TrigPath) -> f64 {
    let kk = a.bandwidth().max(b.bandwidth());
    let diff = match (a.pad(kk), b.pad(kk)) {
        (Ok(a), Ok(b)) => {
            let coeffs = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
            TrigPath::new(coeffs).expect("odd length")
        }
        _ => unreachable!(),
    };
    diff.sup_norm()
}

/// Least-squares slope of `log(diff)` against `log(R)`.
pub fn convergence_rate(members: &[FamilyMember]) -> Result<f64> {
    let points: Vec<(f64, f64)> = members
        .iter()
        .map(|m| (m.radius.get(), m.diff_to_planar))
        .collect();
    fitted_slope(&points)
}

/// Least-squares slope of `log y` against `log x` over `(x, y)` pairs.
pub fn fitted_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(ChoreoError::TooFewPoints(
            points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).count(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_path() -> TrigPath {
        TrigPath::from_modes(
            4,
            &[
                (1, C64::new(1.0, 0.0)),
                (2, C64::new(0.0, 0.3)),
                (-1, C64::new(0.2, -0.1)),
                (4, C64::new(0.01, 0.02)),
            ],
        )
    }

    #[test]
    fn synthetic_power_law_slope() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&r| (r, 3.0 / (r * r))).collect();
        assert!((fitted_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert!(matches!(fitted_slope(&pts[..2]), Err(ChoreoError::TooFewPoints(2))));
    }

    #[test]
    fn published_convergence_slopes() {
        let left = [(10.0, 7.87e-3), (100.0, 7.98e-5), (1000.0, 7.99e-7)];
        assert!((fitted_slope(&left).unwrap() + 2.0).abs() < 0.01);
        let right = [(10.0, 4.87e-2), (100.0, 5.03e-4), (1000.0, 5.04e-6)];
        assert!((fitted_slope(&right).unwrap() + 2.0).abs() < 0.1);
    }

    #[test]
    fn distance_to_self_vanishes_under_any_gauge() {
        let p = sample_path();
        assert_eq!(aligned_sup_distance(&p, &p), 0.0);
        let q = p.rotate(2.1).shift(0.4);
        assert!(aligned_sup_distance(&p, &q) < 1e-13);
    }

    #[test]
    fn sup_distance_finds_off_grid_peaks() {
        let a = TrigPath::from_modes(1, &[(1, C64::new(0.5, 0.0))]);
        let b = TrigPath::zeros(1);
        assert!((sup_distance(&a, &b) - 0.5).abs() < 1e-15);
        // |1 + 0.5 e^{i(t + φ)}| peaks at 1.5 wherever φ puts it.
        let c = TrigPath::from_modes(1, &[(0, C64::new(1.0, 0.0)), (1, C64::from_polar(0.5, 0.123))]);
        assert!((sup_distance(&c, &b) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn alignment_is_gauge_invariant() {
        let a = sample_path();
        let mut coeffs = a.coeffs().to_vec();
        coeffs[7] += C64::new(0.01, 0.005);
        let b = TrigPath::new(coeffs).unwrap();
        let d = aligned_sup_distance(&a, &b);
        assert!(d > 1e-3);
        for (theta, s) in [(0.3, 1.1), (-2.0, 4.0), (5.5, 0.01)] {
            let d1 = aligned_sup_distance(&a.rotate(theta).shift(s), &b);
            let d2 = aligned_sup_distance(&a, &b.rotate(theta).shift(s));
            assert!((d1 - d).abs() <= 1e-12 * d, "{d1} vs {d}");
            assert!((d2 - d).abs() <= 1e-12 * d, "{d2} vs {d}");
        }
    }
}
