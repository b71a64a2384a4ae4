//! Lorentz hyperboloid and Poincaré disk models of the hyperbolic plane of
//! curvature `-1/R²`, and the stereographic maps between them.
//!
//! Units are those of the n-body problem with unit masses and unit
//! gravitational constant; lengths carry the same unit as `R`.

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::trigpath::TrigPath;
use crate::{ChoreoError, Result, TWO_PI};

/// Largest admissible `|z| / R` on the disk.
pub const DISK_MARGIN: f64 = 1.0 - 1e-12;

/// Slack allowed below 1 in `-X⊙Y / R²` before points count as off-sheet.
const SHEET_TOLERANCE: f64 = 1e-9;

/// Radius `R > 0` of the hyperbolic plane; the curvature is `-1/R²`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CurvatureRadius(f64);

impl CurvatureRadius {
    pub fn new(radius: f64) -> Result<Self> {
        if radius.is_finite() && radius > 0.0 {
            Ok(Self(radius))
        } else {
            Err(ChoreoError::InvalidRadius(radius))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn curvature(self) -> f64 {
        -1.0 / (self.0 * self.0)
    }
}

/// Extrinsic coordinates of a point of the forward sheet `X⊙X = -R²`, `x3 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperboloidPoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl HyperboloidPoint {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    fn sub(self, other: Self) -> Self {
        Self::new(self.x1 - other.x1, self.x2 - other.x2, self.x3 - other.x3)
    }
}

/// Complex coordinate of a point of the Poincaré disk `|z| < R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(pub Complex64);

impl DiskPoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    #[inline]
    pub fn z(self) -> Complex64 {
        self.0
    }
}

impl From<Complex64> for DiskPoint {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

/// `R² - |z|²`, or an out-of-disk error once `|z|` exceeds `R (1 - 1e-12)`.
#[inline]
pub fn disk_gap(z: Complex64, radius: f64) -> Result<f64> {
    let modulus = z.norm();
    if !(modulus <= radius * DISK_MARGIN) {
        return Err(ChoreoError::OutOfDisk { modulus, radius });
    }
    Ok((radius - modulus) * (radius + modulus))
}

/// `acosh(1 + y)` for `y >= 0`, accurate when `y` is tiny.
#[inline]
pub(crate) fn acosh1p(y: f64) -> f64 {
    (y + (y * (2.0 + y)).sqrt()).ln_1p()
}

/// `asinh(x)` in the log form that keeps full relative accuracy near 0.
#[inline]
pub(crate) fn asinh_stable(x: f64) -> f64 {
    let a = x.abs();
    let r = (a + a * a / (1.0 + (1.0 + a * a).sqrt())).ln_1p();
    r.copysign(x)
}

/// Lorentz inner product `x1 y1 + x2 y2 - x3 y3`.
#[inline]
pub fn lorentz_inner(x: HyperboloidPoint, y: HyperboloidPoint) -> f64 {
    x.x1 * y.x1 + x.x2 * y.x2 - x.x3 * y.x3
}

/// Geodesic distance `R acosh(-X⊙Y / R²)` on the forward sheet.
pub fn geodesic_hyperboloid(
    x: HyperboloidPoint,
    y: HyperboloidPoint,
    radius: CurvatureRadius,
) -> Result<f64> {
    let r = radius.get();
    let r2 = r * r;
    let cosh_arg = -lorentz_inner(x, y) / r2;
    if !(cosh_arg >= 1.0 - SHEET_TOLERANCE) {
        return Err(ChoreoError::InvalidGeometry(cosh_arg));
    }
    // On the sheet -X⊙Y - R² = (X-Y)⊙(X-Y) / 2, which avoids cancellation
    // for nearby points.
    let d = x.sub(y);
    let excess = (lorentz_inner(d, d) / (2.0 * r2)).max(0.0);
    Ok(r * acosh1p(excess))
}

/// Stereographic projection from `(0, 0, -R)`: `z = R (x1 + i x2) / (R + x3)`.
pub fn project_to_disk(x: HyperboloidPoint, radius: CurvatureRadius) -> DiskPoint {
    let r = radius.get();
    DiskPoint(Complex64::new(r * x.x1, r * x.x2) / (r + x.x3))
}

/// Inverse stereographic projection `(2R² Re z, 2R² Im z, R³ + R|z|²) / (R² - |z|²)`.
pub fn lift_to_hyperboloid(z: DiskPoint, radius: CurvatureRadius) -> Result<HyperboloidPoint> {
    let r = radius.get();
    let gap = disk_gap(z.0, r)?;
    let r2 = r * r;
    Ok(HyperboloidPoint::new(
        2.0 * r2 * z.0.re / gap,
        2.0 * r2 * z.0.im / gap,
        r * (r2 + z.0.norm_sqr()) / gap,
    ))
}

/// Image of the Lorentz distance on the disk:
/// `2R²|z - ξ| / sqrt((R² - |z|²)(R² - |ξ|²))`.
pub fn disk_distance(z: DiskPoint, xi: DiskPoint, radius: CurvatureRadius) -> Result<f64> {
    let r = radius.get();
    let gz = disk_gap(z.0, r)?;
    let gx = disk_gap(xi.0, r)?;
    Ok(2.0 * r * r * (z.0 - xi.0).norm() / (gz * gx).sqrt())
}

/// Geodesic distance on the disk, `2R asinh(d / 2R)`.
pub fn disk_geodesic(z: DiskPoint, xi: DiskPoint, radius: CurvatureRadius) -> Result<f64> {
    let r = radius.get();
    let d = disk_distance(z, xi, radius)?;
    Ok(2.0 * r * asinh_stable(d / (2.0 * r)))
}

/// Conformal factor `4R⁴ / (R² - |z|²)²` of the disk metric.
pub fn conformal_factor(z: DiskPoint, radius: CurvatureRadius) -> Result<f64> {
    let r = radius.get();
    let gap = disk_gap(z.0, r)?;
    Ok(4.0 * r * r * r * r / (gap * gap))
}

/// The isometry `z ↦ R²(z - a) / (R² - ā z)` of the disk, which sends `a`
/// to the origin.
pub fn translate_to_origin(z: DiskPoint, a: DiskPoint, radius: CurvatureRadius) -> DiskPoint {
    let r2 = radius.get() * radius.get();
    DiskPoint((z.0 - a.0) * r2 / (r2 - a.0.conj() * z.0))
}

/// Disk image of the normalized Lorentz mean of the lifted points.
pub fn lorentz_barycenter(
    points: impl IntoIterator<Item = DiskPoint>,
    radius: CurvatureRadius,
) -> Result<DiskPoint> {
    let (mut sum, mut count) = (HyperboloidPoint::new(0.0, 0.0, 0.0), 0usize);
    for z in points {
        let x = lift_to_hyperboloid(z, radius)?;
        sum = HyperboloidPoint::new(sum.x1 + x.x1, sum.x2 + x.x2, sum.x3 + x.x3);
        count += 1;
    }
    if count == 0 {
        return Err(ChoreoError::InvalidConfig("barycenter of no points"));
    }
    // A sum of future timelike vectors is future timelike; rescale onto the sheet.
    let scale = radius.get() / (-lorentz_inner(sum, sum)).sqrt();
    Ok(project_to_disk(
        HyperboloidPoint::new(sum.x1 * scale, sum.x2 * scale, sum.x3 * scale),
        radius,
    ))
}

/// Moves the orbit by a disk isometry so that the Lorentz mean of its
/// `2K + 1` node values lies at the origin, then re-interpolates.
///
/// Translations leave the action invariant when `ω = 0`, so optimizers can
/// drift along them towards the boundary, where the problem is badly scaled.
pub fn recenter(path: &TrigPath, radius: CurvatureRadius) -> Result<TrigPath> {
    let nodes = path.eval_at_nodes(path.len())?;
    let centre = lorentz_barycenter(nodes.values().iter().map(|&z| DiskPoint(z)), radius)?;
    let moved = nodes.map(|z| translate_to_origin(DiskPoint(z), centre, radius).0);
    TrigPath::from_samples(&moved)
}

/// Rescales a `T`-periodic orbit to period 2π.
///
/// `path` holds the orbit as a function of the phase `s = 2πt/T`, i.e. the
/// coefficients of `Q(λs)` with `λ = T/2π`. The result is `λ^{-2/3} Q(λs)`,
/// which solves the problem on the sheet of radius `λ^{-2/3} R`.
pub fn rescale_period(
    path: &TrigPath,
    period: f64,
    radius: CurvatureRadius,
) -> Result<(TrigPath, CurvatureRadius)> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(ChoreoError::NonpositivePeriod(period));
    }
    let lambda = period / TWO_PI;
    let factor = lambda.powf(-2.0 / 3.0);
    let new_radius = CurvatureRadius::new(factor * radius.get())?;
    Ok((path.scaled(factor), new_radius))
}
