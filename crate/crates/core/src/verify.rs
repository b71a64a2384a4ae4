//! Checks that a candidate is a choreography: decay of the Fourier
//! coefficients, size of the action gradient, and the residual of the
//! equations of motion on the disk.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::action::{ActionFunctional, Configuration, Curvature, COLLISION_THRESHOLD};
use crate::geometry::{disk_gap, lift_to_hyperboloid, lorentz_inner, DiskPoint, HyperboloidPoint};
use crate::optimizer::{relative_gradient_norm, Choreography, PhaseStatus};
use crate::trigpath::{node, TrigPath};
use crate::{ChoreoError, Result};

type C64 = Complex64;

/// Diagnostics of one optimization phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub action: f64,
    pub coefficient_count: usize,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    pub gradient_rel_norm: f64,
    pub smallest_coefficient: f64,
    pub residual_rel_norm: f64,
    pub status: PhaseStatus,
}

/// Diagnostics of a two-phase solve; a phase that did not run is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub phase1: Option<PhaseReport>,
    pub phase2: Option<PhaseReport>,
}

impl SolveReport {
    pub fn phases(&self) -> impl Iterator<Item = &PhaseReport> {
        self.phase1.iter().chain(self.phase2.iter())
    }

    /// The report of the last phase that ran.
    pub fn last(&self) -> Option<&PhaseReport> {
        self.phase2.as_ref().or(self.phase1.as_ref())
    }
}

/// Terms of the projected equations of motion for body 0 at the nodes:
/// `λ(t)`, and `P_{0,i}(t)`, `Θ_{0,i}(t)` for `i = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTerms {
    pub lambda: Vec<f64>,
    pub p: Vec<Vec<C64>>,
    pub theta: Vec<Vec<f64>>,
}

/// Thresholds for [`verify_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub decay: f64,
    pub gradient: f64,
    pub residual: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            decay: 1e-8,
            gradient: 1e-8,
            residual: 1e-8,
        }
    }
}

/// Outcome of [`verify_all`]; any unavailable measurement counts as a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub decay: f64,
    pub gradient: Option<f64>,
    pub residual: Option<f64>,
    pub error: Option<ChoreoError>,
    pub passed: bool,
}

/// `max(|c_{-K}|, |c_K|)`.
pub fn coefficient_decay(path: &TrigPath) -> f64 {
    let k = path.bandwidth() as i64;
    path.coeff(-k).norm().max(path.coeff(k).norm())
}

/// Relative gradient norm `‖∇A‖ / ‖x‖` of the discrete action.
pub fn gradient_norm(path: &TrigPath, config: &Configuration) -> Result<f64> {
    let vars = path.to_vars_checked(config)?;
    let g = ActionFunctional::new(*config).gradient(&vars)?;
    Ok(relative_gradient_norm(&g, &vars))
}

/// Positions and derivatives of body 0 and its partners in the rotating
/// frame, `z = e^{iωt} q` with the common phase dropped.
struct Kinematics {
    q: Vec<C64>,
    /// `q' + iωq`
    v: Vec<C64>,
    /// `q'' + 2iωq' - ω²q`
    a: Vec<C64>,
    others: Vec<Vec<C64>>,
}

fn kinematics(path: &TrigPath, config: &Configuration, nodes: usize) -> Result<Kinematics> {
    let w = C64::new(0.0, config.omega);
    let d1 = path.derivative();
    let d2 = d1.derivative();
    let q = path.eval_at_nodes(nodes)?.values().to_vec();
    let dq = d1.eval_at_nodes(nodes)?.values().to_vec();
    let ddq = d2.eval_at_nodes(nodes)?.values().to_vec();
    let v = q.iter().zip(&dq).map(|(&q, &dq)| dq + w * q).collect();
    let a = (0..nodes)
        .map(|m| ddq[m] + w * dq[m] * 2.0 + w * w * q[m])
        .collect();
    let others = (1..config.bodies)
        .map(|j| {
            Ok(path
                .shift(config.phase_offset(j))
                .eval_at_nodes(nodes)?
                .values()
                .to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(Kinematics { q, v, a, others })
}

/// `Θ = 4R²|z - ζ|²|R² - z ζ̄|²`, the factored form of the difference of
/// squares, free of cancellation for close bodies.
pub fn theta(z: C64, zeta: C64, radius: f64) -> f64 {
    let r2 = radius * radius;
    4.0 * r2 * (z - zeta).norm_sqr() * (C64::new(r2, 0.0) - z * zeta.conj()).norm_sqr()
}

/// `Θ` as a difference of squares, term by term.
pub fn theta_expanded(z: C64, zeta: C64, radius: f64) -> f64 {
    let r2 = radius * radius;
    let cross = 2.0 * r2 * (z * zeta.conj() + zeta * z.conj()).re
        - (z.norm_sqr() + r2) * (zeta.norm_sqr() + r2);
    let gaps = (r2 - z.norm_sqr()) * (r2 - zeta.norm_sqr());
    cross * cross - gaps * gaps
}

/// `P_{j,i}` for `z = z_j`, `ζ = z_i`.
pub fn p_term(z: C64, zeta: C64, radius: f64) -> C64 {
    let r2 = radius * radius;
    let hz = r2 - z.norm_sqr();
    let hw = r2 - zeta.norm_sqr();
    (C64::new(r2, 0.0) - zeta.conj() * z) * (zeta - z) * (hz * hw * hw)
}

/// `λ`, `P` and `Θ` for body 0 at `nodes` equispaced times.
pub fn residual_terms(path: &TrigPath, config: &Configuration, nodes: usize) -> Result<ResidualTerms> {
    let r = match config.curvature {
        Curvature::Hyperbolic(r) => r.get(),
        Curvature::Planar => {
            return Err(ChoreoError::InvalidConfig("residual terms need a finite radius"))
        }
    };
    let kin = kinematics(path, config, nodes)?;
    let mut lambda = Vec::with_capacity(nodes);
    for &q in &kin.q {
        let h = disk_gap(q, r)?;
        lambda.push(4.0 * r.powi(4) / (h * h));
    }
    let mut p = Vec::new();
    let mut th = Vec::new();
    for other in &kin.others {
        let mut prow = Vec::with_capacity(nodes);
        let mut trow = Vec::with_capacity(nodes);
        for (&z, &zeta) in kin.q.iter().zip(other) {
            disk_gap(zeta, r)?;
            let t = theta(z, zeta, r);
            if !(t > 0.0) || (z - zeta).norm() <= COLLISION_THRESHOLD {
                return Err(ChoreoError::Collision((z - zeta).norm()));
            }
            prow.push(p_term(z, zeta, r));
            trow.push(t);
        }
        p.push(prow);
        th.push(trow);
    }
    Ok(ResidualTerms {
        lambda,
        p,
        theta: th,
    })
}

/// Relative residual of the equations of motion on the solution's own grid.
pub fn motion_residual(path: &TrigPath, config: &Configuration) -> Result<f64> {
    motion_residual_on_grid(path, config, path.len())
}

/// `‖z'' - F(z, z')‖ / ‖z''‖` for body 0 over `nodes` equispaced times.
///
/// On the disk `F` is the projected hyperbolic force; in the plane it is the
/// Newtonian one. All bodies are time-shifted copies of body 0, so its
/// residual stands for all of them.
pub fn motion_residual_on_grid(path: &TrigPath, config: &Configuration, nodes: usize) -> Result<f64> {
    let kin = kinematics(path, config, nodes)?;
    let mut err = 0.0;
    let mut scale = 0.0;
    match config.curvature {
        Curvature::Hyperbolic(radius) => {
            let r = radius.get();
            let terms = residual_terms(path, config, nodes)?;
            for m in 0..nodes {
                let (q, v, a) = (kin.q[m], kin.v[m], kin.a[m]);
                let h = disk_gap(q, r)?;
                let mut force = ZERO;
                for (p, th) in terms.p.iter().zip(&terms.theta) {
                    force += p[m] / (th[m] * th[m].sqrt());
                }
                let rhs = -q.conj() * v * v * (2.0 / h) + force * (4.0 * r / terms.lambda[m]);
                err += (a - rhs).norm_sqr();
                scale += a.norm_sqr();
            }
        }
        Curvature::Planar => {
            for m in 0..nodes {
                let q = kin.q[m];
                let mut force = ZERO;
                for other in &kin.others {
                    let d = other[m] - q;
                    let r = d.norm();
                    if !(r > COLLISION_THRESHOLD) {
                        return Err(ChoreoError::Collision(r));
                    }
                    force += d / (r * r * r);
                }
                err += (kin.a[m] - force).norm_sqr();
                scale += kin.a[m].norm_sqr();
            }
        }
    }
    Ok((err / scale.max(f64::MIN_POSITIVE)).sqrt())
}

const ZERO: C64 = C64::new(0.0, 0.0);

/// Residual of the extrinsic equations of motion on the hyperboloid,
///
/// ```text
/// X_j'' - Σ_i (R³X_i + R(X_i⊙X_j)X_j) / ((X_i⊙X_j)² - R⁴)^{3/2} - R⁻²(X_j'⊙X_j') X_j,
/// ```
///
/// for body 0 of the lifted motion, relative to `‖X_0''‖`.
pub fn extrinsic_residual(path: &TrigPath, config: &Configuration, nodes: usize) -> Result<f64> {
    let radius = match config.curvature {
        Curvature::Hyperbolic(r) => r,
        Curvature::Planar => {
            return Err(ChoreoError::InvalidConfig("extrinsic residual needs a finite radius"))
        }
    };
    let r = radius.get();
    let d1 = path.derivative();
    let d2 = d1.derivative();
    let mut err = 0.0;
    let mut scale = 0.0;
    for m in 0..nodes {
        let t = node(m, nodes);
        let rot = C64::from_polar(1.0, config.omega * t);
        let w = C64::new(0.0, config.omega);
        let inertial = |s: f64| {
            let (q, dq, ddq) = (path.eval(t + s), d1.eval(t + s), d2.eval(t + s));
            (
                rot * q,
                rot * (dq + w * q),
                rot * (ddq + w * dq * 2.0 + w * w * q),
            )
        };
        let (z, dz, ddz) = inertial(0.0);
        let (x, dx, ddx) = lift_jet(z, dz, ddz, r)?;
        let mut rhs = [0.0; 3];
        for j in 1..config.bodies {
            let (zi, _, _) = inertial(config.phase_offset(j));
            let xi = lift_to_hyperboloid(DiskPoint(zi), radius)?;
            let xx = lorentz_inner(xi, x);
            let denom = xx * xx - r.powi(4);
            if !(denom > 0.0) {
                return Err(ChoreoError::Collision((zi - z).norm()));
            }
            let denom = denom * denom.sqrt();
            let xi = [xi.x1, xi.x2, xi.x3];
            let xv = [x.x1, x.x2, x.x3];
            for c in 0..3 {
                rhs[c] += (r.powi(3) * xi[c] + r * xx * xv[c]) / denom;
            }
        }
        let speed = lorentz_inner(dx, dx) / (r * r);
        let xv = [x.x1, x.x2, x.x3];
        let acc = [ddx.x1, ddx.x2, ddx.x3];
        for c in 0..3 {
            let res = acc[c] - rhs[c] - speed * xv[c];
            err += res * res;
            scale += acc[c] * acc[c];
        }
    }
    Ok((err / scale.max(f64::MIN_POSITIVE)).sqrt())
}

/// Lift of a disk trajectory with its first two derivatives.
fn lift_jet(
    z: C64,
    dz: C64,
    ddz: C64,
    r: f64,
) -> Result<(HyperboloidPoint, HyperboloidPoint, HyperboloidPoint)> {
    // X = N/h with N = (2R² z, R³ + R|z|²), h = R² - |z|².
    let h = disk_gap(z, r)?;
    let zz1 = (z.conj() * dz).re;
    let zz2 = dz.norm_sqr() + (z.conj() * ddz).re;
    let dh = -2.0 * zz1;
    let ddh = -2.0 * zz2;
    let n0 = (z * (2.0 * r * r), r.powi(3) + r * z.norm_sqr());
    let n1 = (dz * (2.0 * r * r), 2.0 * r * zz1);
    let n2 = (ddz * (2.0 * r * r), 2.0 * r * zz2);
    let x = (n0.0 / h, n0.1 / h);
    let dx = ((n1.0 - x.0 * dh) / h, (n1.1 - x.1 * dh) / h);
    let ddx = (
        (n2.0 - dx.0 * (2.0 * dh) - x.0 * ddh) / h,
        (n2.1 - dx.1 * (2.0 * dh) - x.1 * ddh) / h,
    );
    let point = |p: (C64, f64)| HyperboloidPoint::new(p.0.re, p.0.im, p.1);
    Ok((point(x), point(dx), point(ddx)))
}

/// The verification triple against thresholds.
pub fn verify_all(choreo: &Choreography, thresholds: &Thresholds) -> Verification {
    let decay = coefficient_decay(&choreo.path);
    let gradient = gradient_norm(&choreo.path, &choreo.config);
    let residual = motion_residual(&choreo.path, &choreo.config);
    let error = gradient.as_ref().err().or(residual.as_ref().err()).cloned();
    let gradient = gradient.ok();
    let residual = residual.ok();
    let passed = error.is_none()
        && decay <= thresholds.decay
        && gradient.is_some_and(|g| g <= thresholds.gradient)
        && residual.is_some_and(|r| r <= thresholds.residual);
    Verification {
        decay,
        gradient,
        residual,
        error,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{random_seed, solve, Phase1Options, Phase2Options};

    #[test]
    fn factored_theta_matches_difference_of_squares() {
        let r = 1.3;
        for (z, w) in [
            (C64::new(0.3, -0.2), C64::new(-0.5, 0.4)),
            (C64::new(1.1, 0.2), C64::new(-0.1, 0.9)),
            (C64::new(0.0, 0.0), C64::new(0.7, 0.0)),
        ] {
            let a = theta(z, w, r);
            let b = theta_expanded(z, w, r);
            assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn decay_reads_the_outer_modes() {
        let path = TrigPath::from_modes(
            3,
            &[(-3, C64::new(1e-9, 0.0)), (1, C64::new(1.0, 0.0)), (3, C64::new(0.0, 2e-9))],
        );
        assert_eq!(coefficient_decay(&path), 2e-9);
        assert_eq!(coefficient_decay(&path.pad(5).unwrap()), 0.0);
    }

    #[test]
    fn random_path_is_far_from_a_solution() {
        let config = Configuration::hyperbolic(3, 1.5, 0.0, 6).unwrap();
        let path = random_seed(&config, 3, 11).unwrap();
        let r = motion_residual(&path, &config).unwrap();
        assert!(r > 1e-2, "{r}");
    }

    #[test]
    fn collinear_circle_pair_is_exact_in_the_plane() {
        // Two bodies on a circle of radius a with unit angular frequency
        // balance when 1/(4a²) = a, i.e. a³ = 1/4.
        let a = 0.25f64.cbrt();
        let config = Configuration::planar(2, 0.0, 2).unwrap();
        let path = TrigPath::from_modes(2, &[(1, C64::new(a, 0.0))]);
        assert!(motion_residual(&path, &config).unwrap() < 1e-14);
    }

    #[test]
    fn zero_path_reports_collision() {
        let config = Configuration::hyperbolic(3, 1.5, 0.0, 2).unwrap();
        let choreo = Choreography {
            config,
            path: TrigPath::zeros(2),
            report: SolveReport::default(),
        };
        let v = verify_all(&choreo, &Thresholds::default());
        assert!(!v.passed);
        assert!(matches!(v.error, Some(ChoreoError::Collision(_))));
    }

    #[test]
    fn small_solve_verifies_on_both_models() {
        // A three-body circular choreography from a nearby perturbed start.
        let config = Configuration::hyperbolic(3, 2.0, 0.0, 4).unwrap();
        let seed = random_seed(&config, 2, 3).unwrap();
        let opts2 = Phase2Options {
            bandwidth: Some(8),
            ..Phase2Options::default()
        };
        let choreo = solve(&config, &seed, &Phase1Options::default(), &opts2).unwrap();
        let disk = motion_residual(&choreo.path, &choreo.config).unwrap();
        let lifted = extrinsic_residual(&choreo.path, &choreo.config, choreo.path.len()).unwrap();
        assert!(disk < 1e-8, "{disk}");
        assert!(lifted < 10.0 * disk.max(1e-13), "{lifted} vs {disk}");
        let rotated = motion_residual(&choreo.path.rotate(0.7).shift(1.3), &choreo.config).unwrap();
        assert!((rotated - disk).abs() <= 1e-12 + 1e-6 * disk);
    }
}
