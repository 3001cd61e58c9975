//! Damped least-squares (Levenberg–Marquardt) engine and model library.

mod models;

pub use models::*;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve};
use crate::scalar::Real;

/// Name, bounds and typical magnitude of one model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec<T> {
    pub name: String,
    pub lower: T,
    pub upper: T,
    /// Typical magnitude, used for finite-difference steps near zero.
    pub scale: T,
}

impl<T: Real> ParamSpec<T> {
    pub fn free(name: &str, scale: T) -> Self {
        Self { name: name.to_string(), lower: T::neg_infinity(), upper: T::infinity(), scale }
    }

    pub fn bounded(name: &str, lower: T, upper: T, scale: T) -> Self {
        Self { name: name.to_string(), lower, upper, scale }
    }

    pub fn positive(name: &str, scale: T) -> Self {
        Self::bounded(name, T::zero(), T::infinity(), scale)
    }
}

/// A parametric model y = f(p; x), real or complex valued.
pub trait Model<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn params(&self) -> Vec<ParamSpec<T>>;

    /// Complex models are fitted on stacked (Re, Im) residuals.
    fn is_complex(&self) -> bool {
        false
    }

    /// Model value. Real models return a zero imaginary part.
    fn eval(&self, p: &[T], x: T) -> Complex<T>;

    /// Writes ∂f/∂pⱼ into `out`. Returns `false` when no analytic form is available.
    fn jacobian(&self, _p: &[T], _x: T, _out: &mut [Complex<T>]) -> bool {
        false
    }
}

/// Samples to fit. For real models the imaginary parts of `y` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData<T> {
    pub x: Vec<T>,
    pub y: Vec<Complex<T>>,
    /// Per-point standard deviation; unit weights when absent.
    pub sigma: Option<Vec<T>>,
}

impl<T: Real> FitData<T> {
    pub fn real(x: Vec<T>, y: Vec<T>) -> Self {
        let y = y.into_iter().map(|v| Complex::new(v, T::zero())).collect();
        Self { x, y, sigma: None }
    }

    pub fn complex(x: Vec<T>, y: Vec<Complex<T>>) -> Self {
        Self { x, y, sigma: None }
    }

    pub fn with_sigma(mut self, sigma: Vec<T>) -> Self {
        self.sigma = Some(sigma);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<T> {
    pub max_iter: usize,
    /// Relative step tolerance.
    pub xtol: T,
    /// Relative cost-decrease tolerance.
    pub ftol: T,
    /// Gradient-cosine tolerance required for `converged`.
    pub gtol: T,
    /// Relative finite-difference step for models without analytic Jacobians.
    pub fd_step: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 500,
            xtol: T::lit(1e-10),
            ftol: T::lit(1e-12),
            gtol: T::lit(1e-5),
            fd_step: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    SmallStep,
    SmallDecrease,
    ZeroResidual,
    /// Damping grew without finding a lower cost.
    NoImprovement,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub model: String,
    pub names: Vec<String>,
    pub params: Vec<T>,
    pub uncertainties: Vec<T>,
    /// Row-major n × n covariance estimate.
    pub covariance: Vec<T>,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Largest cosine between a Jacobian column and the residual vector. The residual norm
    /// in the denominator is floored at √ε times the weighted data norm.
    pub gradient_cosine: T,
    pub n_residuals: usize,
}

impl<T: Real> FitResult<T> {
    pub fn param(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.uncertainties[i])
    }

    /// Covariance entry (i, j).
    pub fn cov(&self, i: usize, j: usize) -> T {
        self.covariance[i * self.params.len() + j]
    }
}

struct Problem<'a, T: Real> {
    model: &'a dyn Model<T>,
    data: &'a FitData<T>,
    specs: Vec<ParamSpec<T>>,
    complex: bool,
    fd_step: T,
}

impl<'a, T: Real> Problem<'a, T> {
    fn n_res(&self) -> usize {
        self.data.x.len() * if self.complex { 2 } else { 1 }
    }

    fn weight(&self, i: usize) -> T {
        match &self.data.sigma {
            Some(s) => T::one() / s[i],
            None => T::one(),
        }
    }

    fn residuals(&self, p: &[T], r: &mut [T]) -> bool {
        for (i, (&x, &y)) in self.data.x.iter().zip(&self.data.y).enumerate() {
            let f = self.model.eval(p, x);
            let w = self.weight(i);
            if self.complex {
                r[2 * i] = (f.re - y.re) * w;
                r[2 * i + 1] = (f.im - y.im) * w;
            } else {
                r[i] = (f.re - y.re) * w;
            }
        }
        r.iter().all(|v| v.is_finite())
    }

    /// Column-major Jacobian of the residuals (n_params columns).
    fn jacobian(&self, p: &[T], jac: &mut [Vec<T>]) {
        let n = p.len();
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        let mut analytic = true;
        for (i, &x) in self.data.x.iter().enumerate() {
            if !self.model.jacobian(p, x, &mut buf) {
                analytic = false;
                break;
            }
            let w = self.weight(i);
            for j in 0..n {
                if self.complex {
                    jac[j][2 * i] = buf[j].re * w;
                    jac[j][2 * i + 1] = buf[j].im * w;
                } else {
                    jac[j][i] = buf[j].re * w;
                }
            }
        }
        if analytic {
            return;
        }
        let m = self.n_res();
        let mut rp = vec![T::zero(); m];
        let mut rm = vec![T::zero(); m];
        let mut q = p.to_vec();
        for j in 0..n {
            let h = self.fd_step * p[j].abs().max(self.specs[j].scale.abs()).max(T::min_positive_value());
            q[j] = p[j] + h;
            self.residuals(&q, &mut rp);
            q[j] = p[j] - h;
            self.residuals(&q, &mut rm);
            q[j] = p[j];
            for k in 0..m {
                jac[j][k] = (rp[k] - rm[k]) / (T::lit(2.0) * h);
            }
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn project<T: Real>(p: &mut [T], specs: &[ParamSpec<T>]) {
    for (v, s) in p.iter_mut().zip(specs) {
        *v = v.max(s.lower).min(s.upper);
    }
}

/// Levenberg–Marquardt fit of `model` to `data` starting from `init`.
///
/// Damping multiplies by 10 on rejected steps and divides by 3 on accepted ones, starting
/// at 1e-3 times the largest diagonal entry of the column-scaled normal matrix. Bounds are
/// enforced by projection.
pub fn nls_fit<T: Real>(
    model: &dyn Model<T>,
    data: &FitData<T>,
    init: &[T],
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let specs = model.params();
    let n = specs.len();
    if init.len() != n {
        return Err(Error::Domain(format!(
            "model `{}` has {} parameters, {} initial values given",
            model.name(),
            n,
            init.len()
        )));
    }
    if data.x.len() != data.y.len() || data.sigma.as_ref().is_some_and(|s| s.len() != data.x.len()) {
        return Err(Error::Domain("data arrays have mismatched lengths".into()));
    }
    for (v, s) in init.iter().zip(&specs) {
        if *v < s.lower || *v > s.upper || !v.is_finite() {
            return Err(Error::Domain(format!(
                "initial value {} of `{}` outside bounds [{}, {}]",
                v, s.name, s.lower, s.upper
            )));
        }
    }
    let prob = Problem { model, data, specs: specs.clone(), complex: model.is_complex(), fd_step: options.fd_step };
    let m = prob.n_res();
    if m < n {
        return Err(Error::InsufficientData(format!("{m} residuals for {n} parameters")));
    }

    let mut p = init.to_vec();
    let mut r = vec![T::zero(); m];
    if !prob.residuals(&p, &mut r) {
        return Err(Error::NonFinite { params: p.iter().map(|v| v.as_f64()).collect() });
    }
    let mut cost = dot(&r, &r);
    let mut jac = vec![vec![T::zero(); m]; n];
    prob.jacobian(&p, &mut jac);
    let mut diag: Vec<T> = jac.iter().map(|c| dot(c, c).sqrt()).collect();
    check_rank(&jac, &diag, &specs)?;

    let mut mu = T::nan();
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut trial = vec![T::zero(); n];
    let mut r_trial = vec![T::zero(); m];
    let mut jtj = vec![T::zero(); n * n];
    let mut g = vec![T::zero(); n];

    if cost == T::zero() {
        termination = Termination::ZeroResidual;
    } else {
        'outer: while iterations < options.max_iter {
            iterations += 1;
            for (j, col) in jac.iter().enumerate() {
                diag[j] = diag[j].max(dot(col, col).sqrt());
                if diag[j] == T::zero() {
                    diag[j] = T::one();
                }
            }
            // Scaled normal equations: Ĵ = J·D⁻¹.
            for a in 0..n {
                g[a] = dot(&jac[a], &r) / diag[a];
                for b in 0..=a {
                    let v = dot(&jac[a], &jac[b]) / (diag[a] * diag[b]);
                    jtj[a * n + b] = v;
                    jtj[b * n + a] = v;
                }
            }
            if mu.is_nan() {
                let max_d = (0..n).map(|i| jtj[i * n + i]).fold(T::zero(), T::max);
                mu = T::lit(1e-3) * max_d;
            }
            loop {
                let mut a = jtj.clone();
                for i in 0..n {
                    a[i * n + i] += mu;
                }
                let mut h: Vec<T> = g.iter().map(|&v| -v).collect();
                match cholesky(&a, n, T::epsilon()) {
                    Some(l) => cholesky_solve(&l, n, &mut h),
                    None => {
                        mu *= T::lit(10.0);
                        if mu > T::lit(1e32) {
                            termination = Termination::NoImprovement;
                            break 'outer;
                        }
                        continue;
                    }
                }
                // Predicted relative reduction of the linearized model.
                let mut quad = T::zero();
                for a in 0..n {
                    quad += h[a] * dot(&jtj[a * n..(a + 1) * n], &h);
                }
                let predicted = -(T::lit(2.0) * dot(&g, &h) + quad) / cost;
                for i in 0..n {
                    trial[i] = p[i] + h[i] / diag[i];
                }
                project(&mut trial, &specs);
                // Every component moved by less than xtol of its own magnitude.
                let small_step = trial
                    .iter()
                    .zip(&p)
                    .zip(&specs)
                    .all(|((&t, &x), sp)| (t - x).abs() <= options.xtol * x.abs().max(sp.scale.abs() * options.xtol));
                let ok = prob.residuals(&trial, &mut r_trial);
                let new_cost = if ok { dot(&r_trial, &r_trial) } else { T::infinity() };
                if new_cost < cost {
                    let decrease = (cost - new_cost) / cost;
                    p.copy_from_slice(&trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    cost = new_cost;
                    mu = mu / T::lit(3.0);
                    if cost == T::zero() {
                        termination = Termination::ZeroResidual;
                        break 'outer;
                    }
                    if small_step {
                        termination = Termination::SmallStep;
                        break 'outer;
                    }
                    if decrease <= options.ftol && predicted.abs() <= options.ftol {
                        termination = Termination::SmallDecrease;
                        break 'outer;
                    }
                    prob.jacobian(&p, &mut jac);
                    break;
                }
                if small_step {
                    termination = Termination::SmallStep;
                    break 'outer;
                }
                mu *= T::lit(10.0);
                if mu > T::lit(1e32) {
                    termination = Termination::NoImprovement;
                    break 'outer;
                }
            }
        }
    }

    // Final Jacobian, gradient test and covariance at the solution.
    prob.jacobian(&p, &mut jac);
    let rnorm = cost.sqrt();
    // Residuals at the rounding floor of the data carry no gradient information.
    let ynorm = (0..data.x.len())
        .map(|i| {
            let w = prob.weight(i);
            let y = data.y[i];
            if prob.complex {
                (y.re * w).powi(2) + (y.im * w).powi(2)
            } else {
                (y.re * w).powi(2)
            }
        })
        .fold(T::zero(), |s, v| s + v)
        .sqrt();
    let rref = rnorm.max(T::epsilon().sqrt() * ynorm);
    let mut gcos = T::zero();
    if rref > T::zero() {
        for col in &jac {
            let cn = dot(col, col).sqrt();
            if cn > T::zero() {
                gcos = gcos.max((dot(col, &r) / (cn * rref)).abs());
            }
        }
    }
    let converged = termination != Termination::MaxIterations && gcos <= options.gtol;

    let dof = m - n;
    let s2 = if dof > 0 { cost / T::from_usize(dof).unwrap() } else { T::zero() };
    let colnorm: Vec<T> = jac.iter().map(|c| dot(c, c).sqrt().max(T::min_positive_value())).collect();
    let mut norm_mat = vec![T::zero(); n * n];
    for a in 0..n {
        for b in 0..=a {
            let v = dot(&jac[a], &jac[b]) / (colnorm[a] * colnorm[b]);
            norm_mat[a * n + b] = v;
            norm_mat[b * n + a] = v;
        }
    }
    let covariance = match cholesky(&norm_mat, n, T::lit(1e-15)) {
        Some(l) => {
            let inv = cholesky_inverse(&l, n);
            (0..n * n).map(|k| inv[k] / (colnorm[k / n] * colnorm[k % n]) * s2).collect()
        }
        None => vec![T::infinity(); n * n],
    };
    let uncertainties = (0..n).map(|i| covariance[i * n + i].abs().sqrt()).collect();

    Ok(FitResult {
        model: model.name().to_string(),
        names: specs.iter().map(|s| s.name.clone()).collect(),
        params: p,
        uncertainties,
        covariance,
        residual_norm: rnorm,
        iterations,
        converged,
        termination,
        gradient_cosine: gcos,
        n_residuals: m,
    })
}

fn check_rank<T: Real>(jac: &[Vec<T>], norms: &[T], specs: &[ParamSpec<T>]) -> Result<()> {
    let n = jac.len();
    for (j, &c) in norms.iter().enumerate() {
        if c == T::zero() || !c.is_finite() {
            return Err(Error::SingularJacobian(format!(
                "parameter `{}` has no influence on the residuals",
                specs[j].name
            )));
        }
    }
    let mut corr = vec![T::zero(); n * n];
    for a in 0..n {
        for b in 0..=a {
            let v = dot(&jac[a], &jac[b]) / (norms[a] * norms[b]);
            corr[a * n + b] = v;
            corr[b * n + a] = v;
        }
    }
    if cholesky(&corr, n, T::lit(1e-13).max(T::epsilon() * T::lit(100.0))).is_none() {
        return Err(Error::SingularJacobian("parameters are not independently identifiable".into()));
    }
    Ok(())
}

/// Central finite-difference derivative of a model's output with respect to each parameter.
pub fn finite_difference_jacobian<T: Real>(model: &dyn Model<T>, p: &[T], x: T, rel_step: T) -> Vec<Complex<T>> {
    let specs = model.params();
    let mut q = p.to_vec();
    (0..p.len())
        .map(|j| {
            let h = rel_step * p[j].abs().max(specs[j].scale.abs());
            q[j] = p[j] + h;
            let fp = model.eval(&q, x);
            q[j] = p[j] - h;
            let fm = model.eval(&q, x);
            q[j] = p[j];
            (fp - fm) / (T::lit(2.0) * h)
        })
        .collect()
}
