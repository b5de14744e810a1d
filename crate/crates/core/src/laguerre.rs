//! Orthonormal Laguerre functions, the finite-N Christoffel-Darboux kernel
//! at real or complex scale, its integral representation, and the sine, Airy
//! and Bessel limiting kernels.
//!
//! The weighted functions are `phi_k(x) = x^{alpha/2} e^{-x/2} p_k(x)` with
//! `p_k` orthonormal for `x^alpha e^{-x}` and positive leading coefficient.
//! At scale `s` they become `phi_k(x, s) = s^{-1/2} phi_k(x / s)` and the
//! kernel is `K_N(x, y, s) = s^{-1} K_N(x / s, y / s)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{branch, contract, domain, numeric, range, Result};
use crate::linalg::det_complex;
use crate::quad::{integrate, integrate_to_infinity, Tolerance};
use crate::specfun::{airy, bessel_j, log_gamma};

const RESCALE: f64 = 1e150;

/// Relative separation below which [`kernel_cd`] switches to the direct sum.
pub const CD_SWITCH: f64 = 1e-4;

/// Recurrence data for `phi_0..=phi_N` at a fixed `(N, alpha, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelContext {
    n: usize,
    alpha: f64,
    scale: Complex64,
    /// Off-diagonal Jacobi entries `a_k = sqrt(k (k + alpha))`, `k = 0..=n`.
    a: Vec<f64>,
    /// Diagonal Jacobi entries `b_k = 2k + alpha + 1`, `k = 0..=n`.
    b: Vec<f64>,
    log_p0: f64,
}

impl KernelContext {
    /// Context at unit scale.
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Self::with_scale(n, alpha, Complex64::new(1.0, 0.0))
    }

    pub fn with_real_scale(n: usize, alpha: f64, s: f64) -> Result<Self> {
        Self::with_scale(n, alpha, Complex64::new(s, 0.0))
    }

    pub fn with_scale(n: usize, alpha: f64, scale: Complex64) -> Result<Self> {
        if n == 0 {
            return Err(domain("KernelContext", "N must be positive"));
        }
        if !(alpha > -1.0 && alpha.is_finite()) {
            return Err(domain("KernelContext", format!("alpha = {alpha} must exceed -1")));
        }
        check_scale(scale)?;
        let a = (0..=n).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
        let b = (0..=n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
        Ok(Self { n, alpha, scale, a, b, log_p0: -0.5 * log_gamma(alpha + 1.0) })
    }

    /// Same `(N, alpha)` at another scale, reusing the recurrence data.
    pub fn rescaled(&self, scale: Complex64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self { scale, ..self.clone() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn is_real_scale(&self) -> bool {
        self.scale.im == 0.0
    }

    /// `sqrt(N (N + alpha))`, the Christoffel-Darboux prefactor.
    pub fn cd_prefactor(&self) -> f64 {
        self.a[self.n]
    }

    /// `phi_k(x, s)` for every `k = 0..=N`.
    pub fn phi_table(&self, x: Complex64) -> Result<Vec<Complex64>> {
        let w = x / self.scale;
        let mut out = self.phi_unit(w, self.n)?;
        let f = self.scale.inv().sqrt();
        for v in &mut out {
            *v *= f;
        }
        Ok(out)
    }

    pub fn phi_table_real(&self, x: f64) -> Result<Vec<Complex64>> {
        self.phi_table(Complex64::new(x, 0.0))
    }

    // phi_0..=phi_kmax at unit scale and complex argument w.
    fn phi_unit(&self, w: Complex64, kmax: usize) -> Result<Vec<Complex64>> {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(domain("phi_eval", "non-finite argument"));
        }
        if w.re < 0.0 {
            let integral_alpha = self.alpha.fract() == 0.0;
            if w.im != 0.0 || !integral_alpha {
                return Err(branch(
                    "phi_eval",
                    format!("argument {w} has negative real part after scaling"),
                ));
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); kmax + 1];
        if w.norm() == 0.0 {
            out[0] = if self.alpha == 0.0 {
                Complex64::new(self.log_p0.exp(), 0.0)
            } else if self.alpha > 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(f64::INFINITY, 0.0)
            };
            // p_k(0) is finite, so the weight decides every value.
            if self.alpha == 0.0 {
                let mut p_prev = Complex64::new(0.0, 0.0);
                let mut p = out[0];
                for k in 0..kmax {
                    let next = ((-self.b[k]) * p - self.a[k] * p_prev) / self.a[k + 1];
                    p_prev = p;
                    p = next;
                    out[k + 1] = p;
                }
            } else {
                for v in out.iter_mut().skip(1) {
                    *v = out_zero_like(self.alpha);
                }
            }
            return Ok(out);
        }
        // log phi_0 split into a real magnitude exponent and a unit phase.
        let lw = if w.re < 0.0 {
            // integral alpha on the negative axis: w^{alpha/2} via |w| and sign
            Complex64::new(w.norm().ln(), PI)
        } else {
            w.ln()
        };
        let l0 = lw * (0.5 * self.alpha) - w * 0.5 + self.log_p0;
        let mut log_mag = l0.re;
        let mut q_prev = Complex64::new(0.0, 0.0);
        let mut q = Complex64::from_polar(1.0, l0.im);
        let mut q_store = vec![(q, log_mag)];
        for k in 0..kmax {
            let next = ((w - self.b[k]) * q - self.a[k] * q_prev) / self.a[k + 1];
            q_prev = q;
            q = next;
            let m = q.norm().max(q_prev.norm());
            if m > RESCALE {
                q /= m;
                q_prev /= m;
                log_mag += m.ln();
            }
            q_store.push((q, log_mag));
        }
        for (o, (q, lm)) in out.iter_mut().zip(q_store) {
            *o = q * lm.exp();
        }
        Ok(out)
    }

    /// Single `phi_k(x, s)`.
    pub fn phi_eval(&self, k: usize, x: Complex64) -> Result<Complex64> {
        if k > self.n {
            return Err(range("phi_eval", format!("index {k} exceeds N = {}", self.n)));
        }
        let w = x / self.scale;
        let v = self.phi_unit(w, k)?[k];
        Ok(v * self.scale.inv().sqrt())
    }
}

fn out_zero_like(alpha: f64) -> Complex64 {
    if alpha > 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(f64::INFINITY, 0.0)
    }
}

fn check_scale(scale: Complex64) -> Result<()> {
    if !(scale.re > 0.0 && scale.im.is_finite()) {
        return Err(branch("KernelContext", format!("scale {scale} needs positive real part")));
    }
    Ok(())
}

/// Monomial coefficients (ascending) of `L_k^alpha` in the convention with
/// leading coefficient `+1/k!`, i.e. `(-1)^k` times the common one.
pub fn laguerre_coeffs(k: usize, alpha: f64) -> Result<Vec<f64>> {
    if k > 64 {
        return Err(range("laguerre_coeffs", format!("degree {k} exceeds 64")));
    }
    if !(alpha > -1.0) {
        return Err(domain("laguerre_coeffs", format!("alpha = {alpha} must exceed -1")));
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut jfact = 1.0;
    for j in 0..=k {
        if j > 0 {
            jfact *= j as f64;
        }
        let m = k - j;
        let mut binom = 1.0;
        for i in 1..=m {
            binom *= (alpha + j as f64 + i as f64) / i as f64;
        }
        let sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * binom / jfact);
    }
    Ok(out)
}

/// Finite-N kernel `K_N(x, y, s)`.
///
/// Uses the Christoffel-Darboux quotient unless `|x - y|` is below
/// [`CD_SWITCH`] relative to `max(|x|, |y|)`, where the direct sum is used.
pub fn kernel_cd(ctx: &KernelContext, x: Complex64, y: Complex64) -> Result<Complex64> {
    let px = ctx.phi_table(x)?;
    let py = ctx.phi_table(y)?;
    Ok(kernel_from_tables(ctx, x, y, &px, &py))
}

pub fn kernel_cd_real(ctx: &KernelContext, x: f64, y: f64) -> Result<Complex64> {
    kernel_cd(ctx, Complex64::new(x, 0.0), Complex64::new(y, 0.0))
}

/// Kernel on the diagonal, `sum_{k<N} phi_k(x, s)^2`.
pub fn kernel_diag(ctx: &KernelContext, x: Complex64) -> Result<Complex64> {
    let p = ctx.phi_table(x)?;
    Ok(p[..ctx.n].iter().map(|v| v * v).sum())
}

pub(crate) fn kernel_from_tables(
    ctx: &KernelContext,
    x: Complex64,
    y: Complex64,
    px: &[Complex64],
    py: &[Complex64],
) -> Complex64 {
    let d = x - y;
    if d.norm() <= CD_SWITCH * x.norm().max(y.norm()) {
        direct_sum(ctx, px, py)
    } else {
        cd_quotient(ctx, d, px, py)
    }
}

fn direct_sum(ctx: &KernelContext, px: &[Complex64], py: &[Complex64]) -> Complex64 {
    px[..ctx.n].iter().zip(&py[..ctx.n]).map(|(a, b)| a * b).sum()
}

fn cd_quotient(ctx: &KernelContext, d: Complex64, px: &[Complex64], py: &[Complex64]) -> Complex64 {
    let n = ctx.n;
    (px[n] * py[n - 1] - py[n] * px[n - 1]) * ctx.scale * ctx.cd_prefactor() / d
}

/// Both kernel branches at `(x, y)`, `(christoffel_darboux, direct_sum)`,
/// for consistency checks near the switch.
pub fn kernel_branches(ctx: &KernelContext, x: Complex64, y: Complex64) -> Result<(Complex64, Complex64)> {
    let px = ctx.phi_table(x)?;
    let py = ctx.phi_table(y)?;
    if x == y {
        return Err(contract("kernel_branches", "the quotient branch needs x != y"));
    }
    Ok((cd_quotient(ctx, x - y, &px, &py), direct_sum(ctx, &px, &py)))
}

/// Kernel matrix `[K_N(x_i, x_j, s)]` with one recurrence per point.
pub fn kernel_matrix(ctx: &KernelContext, points: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let tables = points.iter().map(|&x| ctx.phi_table_real(x)).collect::<Result<Vec<_>>>()?;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); points.len()]; points.len()];
    for i in 0..points.len() {
        for j in 0..=i {
            let xi = Complex64::new(points[i], 0.0);
            let xj = Complex64::new(points[j], 0.0);
            let v = kernel_from_tables(ctx, xi, xj, &tables[i], &tables[j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// Kernel by quadrature of its integral representation, used as an oracle
/// independent of the Christoffel-Darboux quotient.
pub fn kernel_integral_rep(ctx: &KernelContext, x: f64, y: f64) -> Result<f64> {
    if !ctx.is_real_scale() {
        return Err(contract("kernel_integral_rep", "real scale required"));
    }
    if !(x > 0.0 && y > 0.0) {
        return Err(domain("kernel_integral_rep", "x and y must be positive"));
    }
    let s = ctx.scale.re;
    let unit = ctx.rescaled(Complex64::new(1.0, 0.0))?;
    let (xs, ys) = (x / s, y / s);
    let n = ctx.n as f64;
    let (rn, rna) = (n.sqrt(), (n + ctx.alpha).sqrt());
    let mut failure = None;
    let mut s12 = |w: f64| -> (f64, f64) {
        match unit.phi_unit(Complex64::new(w, 0.0), ctx.n) {
            Ok(p) => {
                let (pn, pm) = (p[ctx.n].re, p[ctx.n - 1].re);
                ((rn * pn + rna * pm) / w, (rna * pn + rn * pm) / w)
            }
            Err(e) => {
                failure = Some(e);
                (0.0, 0.0)
            }
        }
    };
    let mut integrand = |z: f64| {
        let (a1, a2) = s12(xs + z);
        let (b1, b2) = s12(ys + z);
        a1 * b2 + b1 * a2
    };
    // Oscillations live below the soft edge near 4N + 2 alpha; beyond it the
    // integrand decays like e^{-z}.
    let edge = 4.0 * n + 2.0 * ctx.alpha + 10.0 * n.cbrt() + 20.0;
    let z1 = (edge - xs.min(ys)).max(1.0);
    let tol = Tolerance::new(1e-300, 1e-11).with_max_intervals(20_000);
    let head = integrate(&mut integrand, 0.0, z1, tol)?;
    let tail = integrate_to_infinity(&mut integrand, z1, 2.0, Tolerance::new(1e-300, 1e-11))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let total = head.value + tail.value;
    let err = head.error + tail.error;
    if !total.is_finite() || err > 1e-8 * total.abs().max(1e-300) {
        return Err(numeric(
            "kernel_integral_rep",
            format!("quadrature error {err:e} for value {total:e}"),
        ));
    }
    Ok(0.5 * ctx.cd_prefactor() * total / s)
}

/// The three universal kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitingKernel {
    Sine,
    Airy,
    Bessel(f64),
}

// Separation below which the Airy and Bessel quotients are replaced by the
// diagonal value at the midpoint; the error is second order in the gap.
const NEAR_DIAGONAL: f64 = 1e-5;

impl LimitingKernel {
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        match *self {
            LimitingKernel::Sine => {
                let d = PI * (u - v);
                if d.abs() < 1e-8 {
                    Ok(1.0 - d * d / 6.0)
                } else {
                    Ok(d.sin() / d)
                }
            }
            LimitingKernel::Airy => {
                if (u - v).abs() < NEAR_DIAGONAL {
                    let m = 0.5 * (u + v);
                    let (a, ap) = airy(m)?;
                    return Ok(ap * ap - m * a * a);
                }
                // Oriented so that the diagonal limit is Ai'(u)^2 - u Ai(u)^2 > 0.
                let (au, apu) = airy(u)?;
                let (av, apv) = airy(v)?;
                Ok((au * apv - apu * av) / (u - v))
            }
            LimitingKernel::Bessel(alpha) => {
                if !(u > 0.0 && v > 0.0) {
                    return Err(domain("limiting_kernel_eval", "Bessel kernel needs u, v > 0"));
                }
                if (u - v).abs() < NEAR_DIAGONAL * u.max(v).max(1.0) {
                    let m = 0.5 * (u + v);
                    let (j, jp) = bessel_j(alpha, m.sqrt())?;
                    return Ok(0.25 * (jp * jp + (1.0 - alpha * alpha / m) * j * j));
                }
                let (su, sv) = (u.sqrt(), v.sqrt());
                let (ju, jpu) = bessel_j(alpha, su)?;
                let (jv, jpv) = bessel_j(alpha, sv)?;
                Ok((ju * sv * jpv - jv * su * jpu) / (2.0 * (u - v)))
            }
        }
    }
}

pub fn limiting_kernel_eval(k: LimitingKernel, u: f64, v: f64) -> Result<f64> {
    k.eval(u, v)
}

/// Determinantal correlation `det[K_N(x_i, x_j, s)]` for at most 8 points.
pub fn correlation_lue(ctx: &KernelContext, points: &[f64]) -> Result<f64> {
    if points.len() > 8 {
        return Err(range("correlation_lue", format!("{} points exceed the cap of 8", points.len())));
    }
    if points.is_empty() {
        return Ok(1.0);
    }
    let m = kernel_matrix(ctx, points)?;
    Ok(det_complex(m).re)
}

/// Marchenko-Pastur density `(2/pi) sqrt((1 - x) / x)` on `(0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MpLaw;

impl MpLaw {
    pub fn density(&self, x: f64) -> f64 {
        mp_density(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        mp_cdf(x)
    }
}

pub fn mp_density(x: f64) -> f64 {
    if x > 0.0 && x <= 1.0 {
        2.0 / PI * ((1.0 - x) / x).sqrt()
    } else {
        0.0
    }
}

pub fn mp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        2.0 / PI * (x.sqrt().asin() + (x * (1.0 - x)).sqrt())
    }
}
