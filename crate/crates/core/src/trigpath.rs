//! Trigonometric polynomials `q(t) = Σ_{k=-K}^{K} c_k e^{ikt}` and
//! trapezoidal quadrature on equispaced grids.
//!
//! Coefficients are stored centered: index `i` holds `c_{i-K}`. The real
//! optimization variables are packed as
//! `[Re c_{-K}, ..., Re c_K, Im c_{-K}, ..., Im c_K]`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::{ChoreoError, Result, TWO_PI};

/// The `m`-th node `2πm/n` of an equispaced grid on `[0, 2π)`.
#[inline]
pub fn node(m: usize, n: usize) -> f64 {
    TWO_PI * m as f64 / n as f64
}

/// Table of the `n` roots of unity `e^{2πij/n}`.
pub fn roots_of_unity(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, node(j, n)))
        .collect()
}

/// Maximum of a unimodal function on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-10 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.max(f2)
}

/// `k mod n` for a signed frequency.
#[inline]
pub(crate) fn wrap(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Samples of a periodic function at the nodes `2πm/N`, `m = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValues {
    values: Vec<Complex64>,
}

impl NodeValues {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ChoreoError::Undersampled {
                nodes: 0,
                coefficients: 1,
            });
        }
        Ok(Self { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.values.len();
        (0..n).map(move |m| node(m, n))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Trapezoidal rule `(2π/N) Σ_m v_m` over one period.
pub fn trapezoid_integral(values: &NodeValues) -> Complex64 {
    let n = values.len();
    let sum: Complex64 = values.values.iter().sum();
    sum * (TWO_PI / n as f64)
}

/// A 2π-periodic complex trajectory in the `e^{ikt}` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPath {
    coeffs: Vec<Complex64>,
}

impl TrigPath {
    /// Wraps centered coefficients `c_{-K}..=c_K`; the length must be odd.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(ChoreoError::BadCoefficientCount(coeffs.len()));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(bandwidth: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * bandwidth + 1],
        }
    }

    /// Builds a path from `(k, c_k)` pairs; unspecified modes are zero.
    pub fn from_modes(bandwidth: usize, modes: &[(i64, Complex64)]) -> Self {
        let mut path = Self::zeros(bandwidth);
        for &(k, c) in modes {
            *path.coeff_mut(k) = c;
        }
        path
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.coeffs.len() / 2
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Mode numbers `-K..=K` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let k = self.bandwidth() as i64;
        -k..=k
    }

    /// `c_k`, zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let kk = self.bandwidth() as i64;
        if k.abs() > kk {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + kk) as usize]
        }
    }

    fn coeff_mut(&mut self, k: i64) -> &mut Complex64 {
        let kk = self.bandwidth() as i64;
        assert!(k.abs() <= kk, "mode {k} outside bandwidth {kk}");
        &mut self.coeffs[(k + kk) as usize]
    }

    /// Pointwise evaluation by direct summation.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.modes()
            .zip(&self.coeffs)
            .map(|(k, &c)| c * Complex64::from_polar(1.0, k as f64 * t))
            .sum()
    }

    /// `max_t |q(t)|`: a grid ten times finer than `2K + 1`, then golden
    /// refinement around each large local peak.
    pub fn sup_norm(&self) -> f64 {
        let grid = 10 * self.len();
        let values: Vec<f64> = eval_with_roots(&self.coeffs, &roots_of_unity(grid))
            .iter()
            .map(|z| z.norm())
            .collect();
        let top = values.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0) {
            return top;
        }
        let h = TWO_PI / grid as f64;
        let mut best = top;
        for m in 0..grid {
            let prev = values[(m + grid - 1) % grid];
            let next = values[(m + 1) % grid];
            if values[m] >= prev && values[m] >= next && values[m] >= 0.5 * top {
                let t = node(m, grid);
                best = best.max(golden_max(|t| self.eval(t).norm(), t - h, t + h));
            }
        }
        best
    }

    /// Values at the `n` equispaced nodes; needs `n >= 2K + 1`.
    pub fn eval_at_nodes(&self, n: usize) -> Result<NodeValues> {
        if n < self.len() {
            return Err(ChoreoError::Undersampled {
                nodes: n,
                coefficients: self.len(),
            });
        }
        let roots = roots_of_unity(n);
        Ok(NodeValues {
            values: eval_with_roots(&self.coeffs, &roots),
        })
    }

    /// Interpolant through samples on an odd grid of `N = 2K + 1` nodes.
    pub fn from_samples(values: &NodeValues) -> Result<Self> {
        let n = values.len();
        if n % 2 == 0 {
            return Err(ChoreoError::EvenGrid(n));
        }
        let k = (n / 2) as i64;
        let roots = roots_of_unity(n);
        let scale = 1.0 / n as f64;
        let coeffs = (-k..=k)
            .map(|mode| {
                let acc: Complex64 = values
                    .values
                    .iter()
                    .enumerate()
                    .map(|(m, &v)| v * roots[wrap(-mode * m as i64, n)])
                    .sum();
                acc * scale
            })
            .collect();
        Ok(Self { coeffs })
    }

    /// Exact derivative: `c_k ↦ ik c_k`.
    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .modes()
                .zip(&self.coeffs)
                .map(|(k, &c)| c * Complex64::new(0.0, k as f64))
                .collect(),
        }
    }

    /// `q(t + tau)`: `c_k ↦ e^{ik tau} c_k`.
    pub fn shift(&self, tau: f64) -> Self {
        Self {
            coeffs: self
                .modes()
                .zip(&self.coeffs)
                .map(|(k, &c)| c * Complex64::from_polar(1.0, k as f64 * tau))
                .collect(),
        }
    }

    /// `e^{iθ} q(t)`.
    pub fn rotate(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * phase).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    /// Zero-pads to bandwidth `k2 >= K`; the function is unchanged.
    pub fn pad(&self, k2: usize) -> Result<Self> {
        let k = self.bandwidth();
        if k2 < k {
            return Err(ChoreoError::PadShrink { from: k, to: k2 });
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k2 + 1];
        coeffs[k2 - k..=k2 + k].copy_from_slice(&self.coeffs);
        Ok(Self { coeffs })
    }

    /// Drops the modes with `|k| > k2`.
    pub fn truncate(&self, k2: usize) -> Result<Self> {
        let k = self.bandwidth();
        if k2 > k {
            return Err(ChoreoError::TruncateGrow { from: k, to: k2 });
        }
        Ok(Self {
            coeffs: self.coeffs[k - k2..=k + k2].to_vec(),
        })
    }

    /// Packs into `[Re c_{-K}.., Im c_{-K}..]`.
    pub fn to_vars(&self) -> Vec<f64> {
        let mut vars = Vec::with_capacity(2 * self.len());
        vars.extend(self.coeffs.iter().map(|c| c.re));
        vars.extend(self.coeffs.iter().map(|c| c.im));
        vars
    }

    pub fn from_vars(vars: &[f64]) -> Result<Self> {
        if vars.len() % 2 != 0 || (vars.len() / 2) % 2 == 0 {
            return Err(ChoreoError::BadCoefficientCount(vars.len() / 2));
        }
        let n = vars.len() / 2;
        Ok(Self {
            coeffs: (0..n)
                .map(|i| Complex64::new(vars[i], vars[n + i]))
                .collect(),
        })
    }

    /// Largest `|c_k|`.
    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `Σ_k c_k e^{ikt_m}` at all nodes of the grid whose roots of unity are given.
pub(crate) fn eval_with_roots(coeffs: &[Complex64], roots: &[Complex64]) -> Vec<Complex64> {
    let n = roots.len();
    let kk = (coeffs.len() / 2) as i64;
    (0..n)
        .map(|m| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * roots[wrap((i as i64 - kk) * m as i64, n)])
                .sum()
        })
        .collect()
}
