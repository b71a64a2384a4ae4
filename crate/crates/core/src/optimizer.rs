//! Two-phase minimization of the action: BFGS on a coarse coefficient
//! vector, then Newton with the exact Hessian after zero-padding.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::action::{ActionFunctional, Configuration, Curvature};
use crate::geometry;
use crate::linalg::{dot, norm2, Lu, Matrix};
use crate::trigpath::TrigPath;
use crate::verify::{self, PhaseReport, SolveReport};
use crate::{ChoreoError, Result, TWO_PI};

/// Settings for the quasi-Newton phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase1Options {
    pub max_iterations: usize,
    /// Stop once `‖∇A‖ / ‖x‖` falls below this.
    pub gradient_tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
}

impl Default for Phase1Options {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-7,
            armijo: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 60,
        }
    }
}

/// Settings for the Newton phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase2Options {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Padded bandwidth `K₂`; `None` means `2K₁`.
    pub bandwidth: Option<usize>,
    /// Diagonal shift `ε‖H‖` added before every solve.
    pub regularization: f64,
    /// Shift used when the first solve is singular or badly conditioned.
    pub fallback_regularization: f64,
    /// Below this gradient norm a step that gains less than a factor of ten
    /// means round-off has been reached; Newton then stops successfully.
    pub noise_floor: f64,
}

impl Default for Phase2Options {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            gradient_tolerance: 1e-13,
            bandwidth: None,
            regularization: 1e-10,
            fallback_regularization: 1e-8,
            noise_floor: 1e-11,
        }
    }
}

impl Phase1Options {
    fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0)
            || !(self.armijo > 0.0 && self.armijo < 1.0)
            || !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0)
        {
            return Err(ChoreoError::InvalidConfig("phase 1 tolerances out of range"));
        }
        Ok(())
    }
}

impl Phase2Options {
    fn validate(&self, k1: usize) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) || !(self.regularization >= 0.0) {
            return Err(ChoreoError::InvalidConfig("phase 2 tolerances out of range"));
        }
        if self.bandwidth.is_some_and(|k2| k2 < k1) {
            return Err(ChoreoError::PadShrink {
                from: k1,
                to: self.bandwidth.unwrap_or(k1),
            });
        }
        Ok(())
    }

    pub fn padded_bandwidth(&self, k1: usize) -> usize {
        self.bandwidth.unwrap_or(2 * k1)
    }
}

/// How a phase ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStatus {
    Converged,
    MaxIterations,
    /// No feasible decrease along the search direction.
    LineSearchFailure,
    /// The gradient grew on consecutive Newton steps.
    Diverged,
    /// Newton stopped gaining below its noise floor.
    Stalled,
}

impl PhaseStatus {
    pub fn is_success(self) -> bool {
        matches!(self, PhaseStatus::Converged | PhaseStatus::Stalled)
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub action: f64,
    pub gradient_norm: f64,
    pub step_norm: f64,
}

/// Result of one optimization phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOutcome {
    pub vars: Vec<f64>,
    pub action: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub status: PhaseStatus,
    /// Starting point followed by every accepted iterate.
    pub log: Vec<IterationRecord>,
}

/// Source of wall-clock time in seconds. The core crate has no clock of its
/// own; [`NoClock`] reports zero.
pub trait Clock {
    fn seconds(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// A converged (or best-effort) solution with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Choreography {
    pub config: Configuration,
    pub path: TrigPath,
    pub report: SolveReport,
}

impl Choreography {
    /// True if every phase that ran reached its tolerance.
    pub fn converged(&self) -> bool {
        self.report.phases().all(|p| p.status.is_success())
    }
}

/// `‖g‖ / ‖x‖`.
pub fn relative_gradient_norm(gradient: &[f64], vars: &[f64]) -> f64 {
    norm2(gradient) / norm2(vars).max(f64::MIN_POSITIVE)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Number of redraws before [`random_seed`] gives up.
pub const SEED_REDRAWS: usize = 100;

/// A random low-mode path inside the disk.
///
/// Modes `1 <= |k| <= modes` get uniform random phases and magnitudes
/// `u 2^{-|k|}`; the path is then scaled so that `max |q| = 0.6R` (`0.6` in the
/// plane). Draws whose bodies come closer than `0.05R` are redrawn.
pub fn random_seed(config: &Configuration, modes: usize, rng_seed: u64) -> Result<TrigPath> {
    if modes == 0 || modes > config.bandwidth {
        return Err(ChoreoError::InvalidConfig("seed modes must lie in 1..=K"));
    }
    let length = config.curvature.radius().unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let functional = ActionFunctional::new(*config);
    for _ in 0..SEED_REDRAWS {
        let mut pairs = Vec::with_capacity(2 * modes);
        for k in 1..=modes as i64 {
            for sign in [-1, 1] {
                let mag = uniform(&mut rng) * 0.5.powi(k as i32);
                let phase = TWO_PI * uniform(&mut rng);
                pairs.push((sign * k, Complex64::from_polar(mag, phase)));
            }
        }
        let path = TrigPath::from_modes(config.bandwidth, &pairs);
        let peak = path.sup_norm();
        if !(peak > 0.0) {
            continue;
        }
        let path = path.scaled(0.6 * length / peak);
        let seps = match functional.pairwise_separations(&path) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let closest = seps.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
        if closest >= 0.05 * length && functional.try_value(&path.to_vars()).is_ok() {
            return Ok(path);
        }
    }
    Err(ChoreoError::InfeasibleSeed(SEED_REDRAWS))
}

/// Dense BFGS with Armijo backtracking on the exact gradient.
///
/// Infeasible trial points evaluate to `+∞` and are simply backtracked from.
pub fn phase1_bfgs(
    vars0: &[f64],
    config: &Configuration,
    opts: &Phase1Options,
) -> Result<PhaseOutcome> {
    let f = ActionFunctional::new(*config);
    let first = f.evaluate(vars0, false)?;
    bfgs(
        vars0,
        (first.value, first.gradient),
        |x| f.value(x),
        |x| f.gradient(x),
        opts,
    )
}

/// Relative size of a change in the objective treated as rounding noise.
const ROUNDING_SLACK: f64 = 1e-12;

/// Increase of the objective within evaluation noise, tolerated by the
/// derivative-based acceptance test.
const VALUE_NOISE: f64 = 1e-14;

/// BFGS on any smooth objective; `value` returns `+∞` outside its domain.
pub fn bfgs(
    x0: &[f64],
    start: (f64, Vec<f64>),
    value: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64]) -> Result<Vec<f64>>,
    opts: &Phase1Options,
) -> Result<PhaseOutcome> {
    opts.validate()?;
    let dim = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = start;
    let mut gnorm = relative_gradient_norm(&g, &x);
    let mut log = vec![IterationRecord {
        action: fx,
        gradient_norm: gnorm,
        step_norm: 0.0,
    }];
    let mut h = Matrix::identity(dim);
    let mut fresh = true;
    let mut iterations = 0;
    let mut status = PhaseStatus::MaxIterations;

    while iterations < opts.max_iterations {
        if gnorm <= opts.gradient_tolerance {
            status = PhaseStatus::Converged;
            break;
        }
        let mut p: Vec<f64> = h.mul_vec(&g).iter().map(|v| -v).collect();
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            h = Matrix::identity(dim);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        // The unscaled first step can be far too long; start at a modest
        // fraction of the current point.
        let mut alpha = if fresh {
            (0.1 * norm2(&x).max(1e-3) / norm2(&p)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
            let ft = value(&trial);
            if ft.is_finite() && ft - fx <= opts.armijo * alpha * slope {
                accepted = Some((trial, ft, None));
                break;
            }
            // Once the predicted decrease is lost in the rounding of `A`, fall
            // back on the directional derivative (approximate Wolfe test).
            if ft.is_finite()
                && ft - fx <= VALUE_NOISE * fx.abs()
                && -alpha * slope <= ROUNDING_SLACK * fx.abs()
            {
                let gt = gradient(&trial)?;
                let dt = dot(&gt, &p);
                if 0.9 * slope <= dt && dt <= -0.8 * slope {
                    accepted = Some((trial, ft, Some(gt)));
                    break;
                }
            }
            alpha *= opts.backtrack_factor;
        }
        let Some((x_new, f_new, g_known)) = accepted else {
            if fresh {
                status = PhaseStatus::LineSearchFailure;
                break;
            }
            h = Matrix::identity(dim);
            fresh = true;
            continue;
        };
        let g_new = match g_known {
            Some(g) => g,
            None => gradient(&x_new)?,
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * norm2(&s) * norm2(&y) {
            if fresh {
                // Shanno–Phua scaling of the initial inverse Hessian.
                let scale = sy / dot(&y, &y);
                h = Matrix::identity(dim);
                for i in 0..dim {
                    h[(i, i)] = scale;
                }
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        gnorm = relative_gradient_norm(&g, &x);
        iterations += 1;
        log.push(IterationRecord {
            action: fx,
            gradient_norm: gnorm,
            step_norm: norm2(&s),
        });
    }
    if status == PhaseStatus::MaxIterations && gnorm <= opts.gradient_tolerance {
        status = PhaseStatus::Converged;
    }
    Ok(PhaseOutcome {
        vars: x,
        action: fx,
        iterations,
        gradient_norm: gnorm,
        status,
        log,
    })
}

/// `H ← (I - ρsyᵀ) H (I - ρysᵀ) + ρssᵀ` with `ρ = 1/(yᵀs)`.
fn bfgs_update(h: &mut Matrix, s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = h.mul_vec(y);
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Newton's method with the exact Hessian.
///
/// Each step solves `(H + ε‖H‖ I) s = -g`; the shift removes the null
/// directions of rotation and time shift. Stops at the tolerance, after
/// `max_iterations`, once progress stalls below the noise floor, or once the
/// gradient has grown twice in a row, and always returns the iterate with the
/// smallest gradient.
pub fn phase2_newton(
    vars0: &[f64],
    config: &Configuration,
    opts: &Phase2Options,
) -> Result<PhaseOutcome> {
    opts.validate(config.bandwidth)?;
    let f = ActionFunctional::new(*config);
    let mut x = vars0.to_vec();
    let mut eval = f.evaluate(&x, true)?;
    let mut gnorm = relative_gradient_norm(&eval.gradient, &x);
    let mut log = vec![IterationRecord {
        action: eval.value,
        gradient_norm: gnorm,
        step_norm: 0.0,
    }];
    let mut best = (x.clone(), eval.value, gnorm, 0usize);
    let mut growth = 0;
    let mut iterations = 0;
    let mut status = PhaseStatus::MaxIterations;
    loop {
        if gnorm <= opts.gradient_tolerance {
            status = PhaseStatus::Converged;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let hess = eval.hessian.take().expect("hessian requested");
        let step = newton_step(hess, &eval.gradient, opts)?;
        // Newton steps are taken in full unless they leave the feasible set.
        let mut alpha = 1.0;
        let mut next = None;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
            if let Ok(e) = f.evaluate(&trial, true) {
                if e.value.is_finite() {
                    next = Some((trial, e));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((x_new, e_new)) = next else {
            status = PhaseStatus::LineSearchFailure;
            break;
        };
        iterations += 1;
        let g_new = relative_gradient_norm(&e_new.gradient, &x_new);
        log.push(IterationRecord {
            action: e_new.value,
            gradient_norm: g_new,
            step_norm: alpha * norm2(&step),
        });
        growth = if g_new > gnorm { growth + 1 } else { 0 };
        let stalled = g_new <= opts.noise_floor && g_new > 0.1 * gnorm;
        x = x_new;
        eval = e_new;
        gnorm = g_new;
        if gnorm < best.2 {
            best = (x.clone(), eval.value, gnorm, iterations);
        }
        if stalled {
            status = PhaseStatus::Stalled;
            break;
        }
        if growth >= 2 {
            status = PhaseStatus::Diverged;
            break;
        }
    }
    let (vars, action, gradient_norm, _) = best;
    if gradient_norm <= opts.gradient_tolerance {
        status = PhaseStatus::Converged;
    }
    Ok(PhaseOutcome {
        vars,
        action,
        iterations,
        gradient_norm,
        status,
        log,
    })
}

fn newton_step(hess: Matrix, gradient: &[f64], opts: &Phase2Options) -> Result<Vec<f64>> {
    let scale = hess.frobenius_norm();
    let rhs: Vec<f64> = gradient.iter().map(|v| -v).collect();
    let mut shifted = hess.clone();
    shifted.add_diagonal(opts.regularization * scale);
    match Lu::factor(shifted) {
        Ok(lu) if lu.pivot_ratio > 1e-15 => return Ok(lu.solve(&rhs)),
        _ => {}
    }
    let mut shifted = hess;
    shifted.add_diagonal(opts.fallback_regularization * scale);
    Ok(Lu::factor(shifted)?.solve(&rhs))
}

/// Phase 1 at the configured bandwidth, padding to `K₂`, then Phase 2.
///
/// Phase failures do not abort: the returned choreography carries the best
/// iterate and the per-phase status. Only an infeasible seed or invalid
/// options are errors.
pub fn solve(
    config: &Configuration,
    seed: &TrigPath,
    opts1: &Phase1Options,
    opts2: &Phase2Options,
) -> Result<Choreography> {
    solve_timed(config, seed, opts1, opts2, &NoClock)
}

/// [`solve`] with wall-clock timings taken from `clock`.
pub fn solve_timed(
    config: &Configuration,
    seed: &TrigPath,
    opts1: &Phase1Options,
    opts2: &Phase2Options,
    clock: &dyn Clock,
) -> Result<Choreography> {
    let seed = fit_bandwidth(seed, config.bandwidth)?;
    let vars0 = seed.to_vars_checked(config)?;
    ActionFunctional::new(*config).try_value(&vars0)?;

    let start = clock.seconds();
    let p1 = phase1_bfgs(&vars0, config, opts1)?;
    let t1 = clock.seconds() - start;
    let path1 = TrigPath::from_vars(&p1.vars)?;
    let report1 = PhaseReport::measure(&path1, config, &p1, t1);
    let path1 = match config.curvature {
        Curvature::Hyperbolic(r) if config.omega == 0.0 => geometry::recenter(&path1, r)?,
        _ => path1,
    };

    let k2 = opts2.padded_bandwidth(config.bandwidth);
    let config2 = config.with_bandwidth(k2);
    let padded = path1.pad(k2)?;
    let start = clock.seconds();
    let p2 = phase2_newton(&padded.to_vars(), &config2, opts2)?;
    let t2 = clock.seconds() - start;
    let path2 = TrigPath::from_vars(&p2.vars)?;
    let report2 = PhaseReport::measure(&path2, &config2, &p2, t2);

    Ok(Choreography {
        config: config2,
        path: path2,
        report: SolveReport {
            phase1: Some(report1),
            phase2: Some(report2),
        },
    })
}

/// Newton only, from a point assumed close to a solution.
pub fn refine(
    config: &Configuration,
    start: &TrigPath,
    opts2: &Phase2Options,
) -> Result<Choreography> {
    let start = fit_bandwidth(start, config.bandwidth)?;
    let outcome = phase2_newton(&start.to_vars_checked(config)?, config, opts2)?;
    let path = TrigPath::from_vars(&outcome.vars)?;
    let report = PhaseReport::measure(&path, config, &outcome, 0.0);
    Ok(Choreography {
        config: *config,
        path,
        report: SolveReport {
            phase1: None,
            phase2: Some(report),
        },
    })
}

/// Pads or truncates to the given bandwidth.
pub fn fit_bandwidth(path: &TrigPath, bandwidth: usize) -> Result<TrigPath> {
    if path.bandwidth() <= bandwidth {
        path.pad(bandwidth)
    } else {
        path.truncate(bandwidth)
    }
}

impl PhaseReport {
    fn measure(path: &TrigPath, config: &Configuration, outcome: &PhaseOutcome, secs: f64) -> Self {
        PhaseReport {
            action: outcome.action,
            coefficient_count: path.len(),
            wall_time_seconds: secs,
            iterations: outcome.iterations,
            gradient_rel_norm: outcome.gradient_norm,
            smallest_coefficient: verify::coefficient_decay(path),
            residual_rel_norm: verify::motion_residual(path, config).unwrap_or(f64::INFINITY),
            status: outcome.status,
        }
    }
}
