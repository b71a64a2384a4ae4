//! The action of a choreography on the Poincaré disk, with its exact gradient
//! and Hessian in the packed real coefficient variables.
//!
//! For a path `q` with coefficients `c_k` the discretized action is
//!
//! ```text
//! A = n/2 · (2π/M) Σ_m [ 4R⁴|q' + iωq|² / (R² - |q|²)²
//!                        + (1/R) Σ_{j=1}^{n-1} (2R² + D_j²) / (D_j sqrt(4R² + D_j²)) ]
//! ```
//!
//! evaluated at the `M = 2(2K+1) + 1` nodes `t_m = 2πm/M`, where
//! `D_j(t) = d(q(t), q(t + 2πj/n))` is the disk image of the Lorentz distance.
//! The planar variant replaces the kinetic density by `|q' + iωq|²` and the
//! pair density by `1 / |q(t) - q(t + 2πj/n)|`.
//!
//! Gradient and Hessian are the exact derivatives of this discrete sum. The
//! Hessian is assembled in frequency space: each local 2×2 block of second
//! derivatives at the nodes is written as a complex bilinear form, whose
//! node sums are Fourier transforms of the local coefficients.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::geometry::{
    disk_gap, geodesic_hyperboloid, lift_to_hyperboloid, lorentz_inner, CurvatureRadius,
    DiskPoint, HyperboloidPoint,
};
use crate::linalg::Matrix;
use crate::trigpath::{node, roots_of_unity, wrap, TrigPath};
use crate::{ChoreoError, Result, TWO_PI};

/// Pair separations at or below this count as collisions.
pub const COLLISION_THRESHOLD: f64 = 1e-13;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Geometry of the configuration space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    Hyperbolic(CurvatureRadius),
    /// The flat Newtonian limit `R = ∞`.
    Planar,
}

impl Curvature {
    pub fn radius(self) -> Option<f64> {
        match self {
            Curvature::Hyperbolic(r) => Some(r.get()),
            Curvature::Planar => None,
        }
    }
}

/// Problem parameters: `n` bodies, curvature, angular velocity `ω` of the
/// rotating frame, and bandwidth `K` (`2K + 1` complex coefficients).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub bodies: usize,
    pub curvature: Curvature,
    pub omega: f64,
    pub bandwidth: usize,
}

impl Configuration {
    pub fn new(bodies: usize, curvature: Curvature, omega: f64, bandwidth: usize) -> Result<Self> {
        if bodies < 2 {
            return Err(ChoreoError::InvalidConfig("need at least two bodies"));
        }
        if bandwidth < 1 {
            return Err(ChoreoError::InvalidConfig("bandwidth must be at least 1"));
        }
        if !omega.is_finite() {
            return Err(ChoreoError::InvalidConfig("angular velocity must be finite"));
        }
        Ok(Self {
            bodies,
            curvature,
            omega,
            bandwidth,
        })
    }

    pub fn hyperbolic(bodies: usize, radius: f64, omega: f64, bandwidth: usize) -> Result<Self> {
        Self::new(
            bodies,
            Curvature::Hyperbolic(CurvatureRadius::new(radius)?),
            omega,
            bandwidth,
        )
    }

    pub fn planar(bodies: usize, omega: f64, bandwidth: usize) -> Result<Self> {
        Self::new(bodies, Curvature::Planar, omega, bandwidth)
    }

    /// Number of complex coefficients, `2K + 1`.
    pub fn coefficient_count(&self) -> usize {
        2 * self.bandwidth + 1
    }

    /// Number of real optimization variables, `2(2K + 1)`.
    pub fn variable_count(&self) -> usize {
        2 * self.coefficient_count()
    }

    /// Quadrature nodes: twice the coefficient count plus one.
    pub fn quadrature_nodes(&self) -> usize {
        2 * self.coefficient_count() + 1
    }

    pub fn with_bandwidth(self, bandwidth: usize) -> Self {
        Self { bandwidth, ..self }
    }

    pub fn with_curvature(self, curvature: Curvature) -> Self {
        Self { curvature, ..self }
    }

    /// Time offset `2πj/n` of body `j`.
    pub fn phase_offset(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.bodies as f64
    }
}

/// Action value with its gradient and, optionally, its Hessian.
#[derive(Debug, Clone)]
pub struct ActionEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<Matrix>,
}

/// The discretized action for one configuration, with precomputed tables.
#[derive(Debug, Clone)]
pub struct ActionFunctional {
    config: Configuration,
    nodes: usize,
    roots: Vec<C64>,
    /// `i(k + ω)` for each mode: the map `c ↦ q' + iωq`.
    velocity_factor: Vec<C64>,
    /// `e^{ik 2πj/n}` for `j = 1..n`, the map `c ↦ q(· + 2πj/n)`.
    shift_factor: Vec<Vec<C64>>,
}

/// Values of `q`, `q' + iωq` and the shifted copies at the quadrature nodes.
struct Samples {
    q: Vec<C64>,
    u: Vec<C64>,
    shifted: Vec<Vec<C64>>,
}

/// Real 2×2 block of second derivatives, `[[∂x∂x, ∂x∂y], [∂y∂x, ∂y∂y]]`.
type Block = [[f64; 2]; 2];

fn outer(a: C64, b: C64) -> Block {
    [[a.re * b.re, a.re * b.im], [a.im * b.re, a.im * b.im]]
}

fn add_scaled(acc: &mut Block, s: f64, b: &Block) {
    for r in 0..2 {
        for c in 0..2 {
            acc[r][c] += s * b[r][c];
        }
    }
}

fn scaled_identity(s: f64) -> Block {
    [[s, 0.0], [0.0, s]]
}

/// Writes `xᵀ W y` for real 2-vectors as `Re(α x̄ y + β x y)`.
fn complex_form(w: &Block) -> (C64, C64) {
    let alpha = C64::new(0.5 * (w[0][0] + w[1][1]), 0.5 * (w[1][0] - w[0][1]));
    let beta = C64::new(0.5 * (w[0][0] - w[1][1]), -0.5 * (w[0][1] + w[1][0]));
    (alpha, beta)
}

/// Neumaier summation.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Node-wise coefficients of one slot pair of the Hessian.
struct PairForm {
    alpha: Vec<C64>,
    beta: Vec<C64>,
}

impl PairForm {
    fn new(nodes: usize) -> Self {
        Self {
            alpha: vec![ZERO; nodes],
            beta: vec![ZERO; nodes],
        }
    }

    fn add(&mut self, m: usize, w: &Block) {
        let (a, b) = complex_form(w);
        self.alpha[m] += a;
        self.beta[m] += b;
    }
}

/// Local derivatives of one pair density in the slots `(q, p)`.
struct PairLocal {
    value: f64,
    grad_q: C64,
    grad_p: C64,
    qq: Block,
    qp: Block,
    pp: Block,
}

/// Local derivatives of the kinetic density in the slots `(q, u)`.
struct KineticLocal {
    value: f64,
    grad_q: C64,
    grad_u: C64,
    qq: Block,
    qu: Block,
    uu: Block,
}

impl ActionFunctional {
    pub fn new(config: Configuration) -> Self {
        let nodes = config.quadrature_nodes();
        let kk = config.bandwidth as i64;
        let velocity_factor = (-kk..=kk)
            .map(|k| C64::new(0.0, k as f64 + config.omega))
            .collect();
        let shift_factor = (1..config.bodies)
            .map(|j| {
                let s = config.phase_offset(j);
                (-kk..=kk)
                    .map(|k| C64::from_polar(1.0, k as f64 * s))
                    .collect()
            })
            .collect();
        Self {
            config,
            nodes,
            roots: roots_of_unity(nodes),
            velocity_factor,
            shift_factor,
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.nodes
    }

    fn prefactor(&self) -> f64 {
        0.5 * self.config.bodies as f64 * TWO_PI / self.nodes as f64
    }

    fn check_len(&self, vars: &[f64]) -> Result<()> {
        if vars.len() != self.config.variable_count() {
            return Err(ChoreoError::VariableLength {
                got: vars.len(),
                bandwidth: self.config.bandwidth,
            });
        }
        Ok(())
    }

    fn coefficients(&self, vars: &[f64]) -> Vec<C64> {
        let n = self.config.coefficient_count();
        (0..n).map(|i| C64::new(vars[i], vars[n + i])).collect()
    }

    fn eval_nodes(&self, coeffs: &[C64]) -> Vec<C64> {
        let kk = self.config.bandwidth as i64;
        let m_count = self.nodes;
        let mut out = vec![ZERO; m_count];
        for (i, &c) in coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let step = wrap(i as i64 - kk, m_count);
            let mut idx = 0;
            for v in out.iter_mut() {
                *v += c * self.roots[idx];
                idx += step;
                if idx >= m_count {
                    idx -= m_count;
                }
            }
        }
        out
    }

    fn sample(&self, coeffs: &[C64]) -> Samples {
        let scaled = |f: &[C64]| -> Vec<C64> { coeffs.iter().zip(f).map(|(c, g)| c * g).collect() };
        Samples {
            q: self.eval_nodes(coeffs),
            u: self.eval_nodes(&scaled(&self.velocity_factor)),
            shifted: self
                .shift_factor
                .iter()
                .map(|f| self.eval_nodes(&scaled(f)))
                .collect(),
        }
    }

    /// `Σ_m v_m e^{i f t_m}` over the quadrature nodes.
    fn fourier_sum(&self, values: impl Iterator<Item = C64>, f: i64) -> C64 {
        let step = wrap(f, self.nodes);
        let mut idx = 0;
        let mut re = Compensated::default();
        let mut im = Compensated::default();
        for v in values {
            let r = self.roots[idx];
            re.add(v.re * r.re);
            re.add(-v.im * r.im);
            im.add(v.re * r.im);
            im.add(v.im * r.re);
            idx += step;
            if idx >= self.nodes {
                idx -= self.nodes;
            }
        }
        C64::new(re.total(), im.total())
    }

    /// `Σ_m conj(g_m) e^{ik t_m}` for `k = -K..=K`.
    fn correlate(&self, g: &[C64]) -> Vec<C64> {
        let kk = self.config.bandwidth as i64;
        (-kk..=kk)
            .map(|k| self.fourier_sum(g.iter().map(|x| x.conj()), k))
            .collect()
    }

    /// `Σ_m v_m e^{i f t_m}` for `f = -2K..=2K`.
    fn spectrum(&self, v: &[C64]) -> Vec<C64> {
        let fmax = 2 * self.config.bandwidth as i64;
        (-fmax..=fmax)
            .map(|f| self.fourier_sum(v.iter().copied(), f))
            .collect()
    }

    fn kinetic(&self, q: C64, u: C64, want_hessian: bool) -> Result<KineticLocal> {
        match self.config.curvature {
            Curvature::Planar => Ok(KineticLocal {
                value: u.norm_sqr(),
                grad_q: ZERO,
                grad_u: u * 2.0,
                qq: [[0.0; 2]; 2],
                qu: [[0.0; 2]; 2],
                uu: scaled_identity(2.0),
            }),
            Curvature::Hyperbolic(radius) => {
                let r = radius.get();
                let h = disk_gap(q, r)?;
                let c = 4.0 * r * r * r * r;
                let uu_sq = u.norm_sqr();
                let h2 = h * h;
                let h3 = h2 * h;
                let mut local = KineticLocal {
                    value: c * uu_sq / h2,
                    grad_q: q * (4.0 * c * uu_sq / h3),
                    grad_u: u * (2.0 * c / h2),
                    qq: [[0.0; 2]; 2],
                    qu: [[0.0; 2]; 2],
                    uu: [[0.0; 2]; 2],
                };
                if want_hessian {
                    local.qq = scaled_identity(4.0 * c * uu_sq / h3);
                    add_scaled(&mut local.qq, 24.0 * c * uu_sq / (h2 * h2), &outer(q, q));
                    local.qu = outer(q, u);
                    for row in local.qu.iter_mut() {
                        for x in row.iter_mut() {
                            *x *= 8.0 * c / h3;
                        }
                    }
                    local.uu = scaled_identity(2.0 * c / h2);
                }
                Ok(local)
            }
        }
    }

    fn pair(&self, q: C64, p: C64, want_hessian: bool) -> Result<PairLocal> {
        let d = q - p;
        let rho = d.norm_sqr();
        // v = ∇ ln D in the slots (q, p); `gq`/`gp` are the extra terms from
        // the conformal factors on the disk.
        let (dist, value, g1, g2, scale, hq, hp) = match self.config.curvature {
            Curvature::Planar => {
                let dist = rho.sqrt();
                (dist, 1.0 / dist, -1.0 / rho, 2.0 / (rho * dist), 1.0, None, None)
            }
            Curvature::Hyperbolic(radius) => {
                let r = radius.get();
                let hq = disk_gap(q, r)?;
                let hp = disk_gap(p, r)?;
                let dist = 2.0 * r * r * rho.sqrt() / (hq * hp).sqrt();
                let s2 = 4.0 * r * r + dist * dist;
                let s = s2.sqrt();
                let r4 = r * r * r * r;
                let value = (2.0 * r * r + dist * dist) / (dist * s);
                let g1 = -8.0 * r4 / (dist * dist * s2 * s);
                let g2 = 8.0 * r4 * (2.0 / (dist * dist * dist * s2 * s) + 3.0 / (dist * s2 * s2 * s));
                (dist, value, g1, g2, 1.0 / r, Some(hq), Some(hp))
            }
        };
        if !(dist > COLLISION_THRESHOLD) {
            return Err(ChoreoError::Collision(dist));
        }
        let vq = d / rho + hq.map_or(ZERO, |h| q / h);
        let vp = -d / rho + hp.map_or(ZERO, |h| p / h);
        let first = scale * g1 * dist;
        let mut local = PairLocal {
            value: scale * value,
            grad_q: vq * first,
            grad_p: vp * first,
            qq: [[0.0; 2]; 2],
            qp: [[0.0; 2]; 2],
            pp: [[0.0; 2]; 2],
        };
        if want_hessian {
            // ∇²φ = s [g'' D² v vᵀ + g' D (v vᵀ + ∇² ln D)]
            let vv = scale * (g2 * dist * dist + g1 * dist);
            let mut m_rho = scaled_identity(1.0 / rho);
            add_scaled(&mut m_rho, -2.0 / (rho * rho), &outer(d, d));
            let conformal = |z: C64, h: Option<f64>| -> Block {
                match h {
                    None => [[0.0; 2]; 2],
                    Some(h) => {
                        let mut b = scaled_identity(1.0 / h);
                        add_scaled(&mut b, 2.0 / (h * h), &outer(z, z));
                        b
                    }
                }
            };
            let cq = conformal(q, hq);
            let cp = conformal(p, hp);

            let mut qq = outer(vq, vq);
            for r in 0..2 {
                for c in 0..2 {
                    qq[r][c] *= vv;
                }
            }
            add_scaled(&mut qq, first, &m_rho);
            add_scaled(&mut qq, first, &cq);

            let mut qp = outer(vq, vp);
            for r in 0..2 {
                for c in 0..2 {
                    qp[r][c] *= vv;
                }
            }
            add_scaled(&mut qp, -first, &m_rho);

            let mut pp = outer(vp, vp);
            for r in 0..2 {
                for c in 0..2 {
                    pp[r][c] *= vv;
                }
            }
            add_scaled(&mut pp, first, &m_rho);
            add_scaled(&mut pp, first, &cp);

            local.qq = qq;
            local.qp = qp;
            local.pp = pp;
        }
        Ok(local)
    }

    /// Value, gradient and (if requested) Hessian; infeasible paths are errors.
    pub fn evaluate(&self, vars: &[f64], with_hessian: bool) -> Result<ActionEvaluation> {
        let mut e = self.evaluate_raw(vars, with_hessian)?;
        if let Some(h) = e.hessian.as_mut() {
            h.symmetrize();
        }
        Ok(e)
    }

    /// The Hessian exactly as assembled, before the round-off asymmetry
    /// between its triangles is averaged away.
    pub fn unsymmetrized_hessian(&self, vars: &[f64]) -> Result<Matrix> {
        Ok(self.evaluate_raw(vars, true)?.hessian.expect("hessian requested"))
    }

    fn evaluate_raw(&self, vars: &[f64], with_hessian: bool) -> Result<ActionEvaluation> {
        self.check_len(vars)?;
        let coeffs = self.coefficients(vars);
        let s = self.sample(&coeffs);
        let m_count = self.nodes;
        let shifts = self.config.bodies - 1;

        let mut value = 0.0;
        let mut gq = vec![ZERO; m_count];
        let mut gu = vec![ZERO; m_count];
        let mut gp = vec![vec![ZERO; m_count]; shifts];

        let mut qq = PairForm::new(if with_hessian { m_count } else { 0 });
        let mut qu = PairForm::new(if with_hessian { m_count } else { 0 });
        let mut uu = PairForm::new(if with_hessian { m_count } else { 0 });
        let mut qp: Vec<PairForm> = Vec::new();
        let mut pp: Vec<PairForm> = Vec::new();
        if with_hessian {
            qp = (0..shifts).map(|_| PairForm::new(m_count)).collect();
            pp = (0..shifts).map(|_| PairForm::new(m_count)).collect();
        }

        for m in 0..m_count {
            let q = s.q[m];
            let kin = self.kinetic(q, s.u[m], with_hessian)?;
            let mut node_value = kin.value;
            gq[m] += kin.grad_q;
            gu[m] += kin.grad_u;
            if with_hessian {
                qq.add(m, &kin.qq);
                qu.add(m, &kin.qu);
                uu.add(m, &kin.uu);
            }
            for j in 0..shifts {
                let pl = self.pair(q, s.shifted[j][m], with_hessian)?;
                node_value += pl.value;
                gq[m] += pl.grad_q;
                gp[j][m] += pl.grad_p;
                if with_hessian {
                    qq.add(m, &pl.qq);
                    qp[j].add(m, &pl.qp);
                    pp[j].add(m, &pl.pp);
                }
            }
            value += node_value;
        }
        let pref = self.prefactor();
        value *= pref;
        if !value.is_finite() {
            return Err(ChoreoError::Collision(0.0));
        }

        let n = self.config.coefficient_count();
        let fq = self.correlate(&gq);
        let fu = self.correlate(&gu);
        let fp: Vec<Vec<C64>> = gp.iter().map(|g| self.correlate(g)).collect();
        let mut gradient = vec![0.0; 2 * n];
        for i in 0..n {
            let mut acc = fq[i] + self.velocity_factor[i] * fu[i];
            for j in 0..shifts {
                acc += self.shift_factor[j][i] * fp[j][i];
            }
            gradient[i] = pref * acc.re;
            gradient[n + i] = -pref * acc.im;
        }

        let hessian = if with_hessian {
            let quv = uq_transposed(&qu);
            let pqv: Vec<PairForm> = qp.iter().map(uq_transposed).collect();
            Some(self.assemble_hessian(&qq, &qu, &quv, &uu, &qp, &pqv, &pp))
        } else {
            None
        };
        Ok(ActionEvaluation {
            value,
            gradient,
            hessian,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble_hessian(
        &self,
        qq: &PairForm,
        qu: &PairForm,
        uq: &PairForm,
        uu: &PairForm,
        qp: &[PairForm],
        pq: &[PairForm],
        pp: &[PairForm],
    ) -> Matrix {
        let n = self.config.coefficient_count();
        let kk = self.config.bandwidth;
        let ones = vec![C64::new(1.0, 0.0); n];
        let gu = &self.velocity_factor;

        // (row slot factors, column slot factors, form)
        let mut terms: Vec<(&[C64], &[C64], &PairForm)> = vec![
            (&ones, &ones, qq),
            (&ones, gu, qu),
            (gu, &ones, uq),
            (gu, gu, uu),
        ];
        for j in 0..qp.len() {
            let gp = &self.shift_factor[j];
            terms.push((&ones, gp, &qp[j]));
            terms.push((gp, &ones, &pq[j]));
            terms.push((gp, gp, &pp[j]));
        }

        let mut t = vec![ZERO; n * n];
        let mut s = vec![ZERO; n * n];
        for (gr, gc, form) in terms {
            let a_hat = self.spectrum(&form.alpha);
            let b_hat = self.spectrum(&form.beta);
            for k in 0..n {
                let grk = gr[k];
                let grk_conj = grk.conj();
                for l in 0..n {
                    // l - k and k + l, both offset by 2K into the spectrum
                    let diff = l + 2 * kk - k;
                    let sum = k + l;
                    t[k * n + l] += grk_conj * gc[l] * a_hat[diff];
                    s[k * n + l] += grk * gc[l] * b_hat[sum];
                }
            }
        }

        let pref = self.prefactor();
        let mut h = Matrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            for l in 0..n {
                let tk = t[k * n + l];
                let sk = s[k * n + l];
                h[(k, l)] = pref * (tk.re + sk.re);
                h[(k, n + l)] = pref * (-tk.im - sk.im);
                h[(n + k, l)] = pref * (tk.im - sk.im);
                h[(n + k, n + l)] = pref * (tk.re - sk.re);
            }
        }
        h
    }

    /// Action value, or `+∞` when the path leaves the disk or collides.
    pub fn value(&self, vars: &[f64]) -> f64 {
        self.try_value(vars).unwrap_or(f64::INFINITY)
    }

    /// Action value; infeasibility is reported as an error.
    pub fn try_value(&self, vars: &[f64]) -> Result<f64> {
        self.check_len(vars)?;
        let coeffs = self.coefficients(vars);
        let s = self.sample(&coeffs);
        let mut value = 0.0;
        for m in 0..self.nodes {
            value += self.kinetic(s.q[m], s.u[m], false)?.value;
            for shifted in &s.shifted {
                value += self.pair(s.q[m], shifted[m], false)?.value;
            }
        }
        Ok(value * self.prefactor())
    }

    pub fn gradient(&self, vars: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(vars, false)?.gradient)
    }

    pub fn hessian(&self, vars: &[f64]) -> Result<Matrix> {
        Ok(self
            .evaluate(vars, true)?
            .hessian
            .expect("hessian requested"))
    }

    /// `D_j(t_m)` for `j = 1..n` at the quadrature nodes (planar: `|q - q_j|`).
    pub fn pairwise_separations(&self, path: &TrigPath) -> Result<Vec<Vec<f64>>> {
        let coeffs = self.coefficients(&path.to_vars_checked(&self.config)?);
        let s = self.sample(&coeffs);
        s.shifted
            .iter()
            .map(|shifted| {
                s.q.iter()
                    .zip(shifted)
                    .map(|(&q, &p)| {
                        let dist = match self.config.curvature {
                            Curvature::Planar => (q - p).norm(),
                            Curvature::Hyperbolic(radius) => crate::geometry::disk_distance(
                                DiskPoint(q),
                                DiskPoint(p),
                                radius,
                            )?,
                        };
                        if !(dist > COLLISION_THRESHOLD) {
                            return Err(ChoreoError::Collision(dist));
                        }
                        Ok(dist)
                    })
                    .collect()
            })
            .collect()
    }
}

fn uq_transposed(form: &PairForm) -> PairForm {
    // W_{uq} = W_{qu}ᵀ, i.e. α ↦ conj(α), β unchanged.
    PairForm {
        alpha: form.alpha.iter().map(|a| a.conj()).collect(),
        beta: form.beta.clone(),
    }
}

impl TrigPath {
    /// Packs after checking the bandwidth against a configuration.
    pub fn to_vars_checked(&self, config: &Configuration) -> Result<Vec<f64>> {
        if self.bandwidth() != config.bandwidth {
            return Err(ChoreoError::VariableLength {
                got: 2 * self.len(),
                bandwidth: config.bandwidth,
            });
        }
        Ok(self.to_vars())
    }
}

/// Kinetic and potential energy of the lifted motion on the hyperboloid.
///
/// Bodies are `X_j(t) = R_ω(t) P⁻¹(q(t + 2πj/n))`; returns `K(t) = ½ Σ X_j'⊙X_j'`
/// and `U(t) = -(1/R) Σ_{i<j} coth(d̂(X_i, X_j)/R)` at the given times.
pub fn hyperboloid_energies(
    path: &TrigPath,
    config: &Configuration,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let radius = match config.curvature {
        Curvature::Hyperbolic(r) => r,
        Curvature::Planar => {
            return Err(ChoreoError::InvalidConfig(
                "hyperboloid energies need a finite radius",
            ))
        }
    };
    let r = radius.get();
    let velocity = path.derivative();
    let mut kinetic = Vec::with_capacity(times.len());
    let mut potential = Vec::with_capacity(times.len());
    for &t in times {
        let rot = C64::from_polar(1.0, config.omega * t);
        let mut points = Vec::with_capacity(config.bodies);
        let mut k_sum = 0.0;
        for j in 0..config.bodies {
            let tj = t + config.phase_offset(j);
            let z = path.eval(tj);
            let dz = velocity.eval(tj);
            let x = lift_to_hyperboloid(DiskPoint(z), radius)?;
            // d/dt of (2R² z, R³ + R|z|²) / (R² - |z|²)
            let h = r * r - z.norm_sqr();
            let dh = -2.0 * (z.conj() * dz).re;
            let planar = (dz * (2.0 * r * r) - z * (2.0 * r * r) * (dh / h)) / h;
            let dx3 = (2.0 * r * (z.conj() * dz).re - x.x3 * dh) / h;
            let xy = C64::new(x.x1, x.x2);
            let moving = rot * (planar + C64::new(0.0, config.omega) * xy);
            let v = HyperboloidPoint::new(moving.re, moving.im, dx3);
            k_sum += 0.5 * lorentz_inner(v, v);
            let xr = rot * xy;
            points.push(HyperboloidPoint::new(xr.re, xr.im, x.x3));
        }
        let mut u_sum = 0.0;
        for j in 0..points.len() {
            for i in 0..j {
                let dhat = geodesic_hyperboloid(points[i], points[j], radius)?;
                if !(dhat > 0.0) {
                    return Err(ChoreoError::Collision(dhat));
                }
                u_sum -= 1.0 / (r * (dhat / r).tanh());
            }
        }
        kinetic.push(k_sum);
        potential.push(u_sum);
    }
    Ok((kinetic, potential))
}

/// Equispaced times `2πm/count` on one period.
pub fn uniform_times(count: usize) -> Vec<f64> {
    (0..count).map(|m| node(m, count)).collect()
}
