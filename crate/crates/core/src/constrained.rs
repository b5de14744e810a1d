//! Exact one-point densities of the fixed-trace and bounded-trace ensembles.
//!
//! Three independent routes are provided:
//!
//! * series: the LUE one-point function at scale `1/(4N)` is a polynomial
//!   times `x^alpha e^{-4Nx}`; inverting the Laplace transform term by term
//!   gives the fixed-trace density as a finite Beta-type sum.
//! * fourier: inversion of the trace characteristic function against the
//!   LUE kernel at complex scale.
//! * radial: the bounded-trace density as a mixture of fixed-trace
//!   densities over the radial coordinate.
//!
//! The series coefficients are badly conditioned in the monomial basis
//! (roughly 1e13 at N = 16), so they are carried in double-double arithmetic.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::ensembles::{sample_blocks, Constraint, EnsembleSpec};
use crate::error::{contract, domain, numeric, range, Result};
use crate::laguerre::{kernel_diag, KernelContext};
use crate::quad::{integrate, integrate_to_infinity, Tolerance};
use crate::specfun::{gamma_density, log_gamma, phi_char};

/// Largest N accepted by [`lue_poly_expansion`].
pub const MAX_SERIES_N: usize = 24;
/// Largest N accepted by [`ftlue_density_fourier`].
pub const MAX_FOURIER_N: usize = 12;

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

// Long division a / b. twofloat's own TwoFloat / TwoFloat forms the reciprocal
// residual without fma and is only double-accurate.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    dd(q1) + q2 + q3
}

/// Polynomial part of the LUE one-point function at scale `1/(4N)`.
#[derive(Debug, Clone)]
pub struct PolyExpansion {
    pub n: usize,
    pub alpha: f64,
    /// `c_l`, `l = 0..=2N-2`, with `R_1(x) = x^alpha e^{-4Nx} sum_l c_l x^l`.
    pub coefficients: Vec<f64>,
    // Coefficients of sum_k p_k(z)^2 * Gamma(alpha + 1) in z = 4Nx.
    z_coeffs: Vec<TwoFloat>,
    // Beta-sum weights d_l (N_alpha - alpha - 2)_(l) falling, fixed-trace route.
    beta_coeffs: Vec<TwoFloat>,
}

/// Build the expansion for `1 <= N <= 24`.
pub fn lue_poly_expansion(n: usize, alpha: f64) -> Result<PolyExpansion> {
    if n == 0 || n > MAX_SERIES_N {
        return Err(range("lue_poly_expansion", format!("N = {n} outside 1..={MAX_SERIES_N}")));
    }
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(domain("lue_poly_expansion", format!("alpha = {alpha} must exceed -1")));
    }
    let deg = 2 * n - 1;
    let mut z_coeffs = vec![dd(0.0); deg];
    // rho_k = k! / (alpha + 1)_k, so p_k^2 = rho_k L_k^2 / Gamma(alpha + 1).
    let mut rho = dd(1.0);
    for k in 0..n {
        if k > 0 {
            rho = dd_div(rho * k as f64, dd(alpha) + k as f64);
        }
        let lk = laguerre_coeffs_dd(k, alpha);
        for i in 0..=k {
            let ri = rho * lk[i];
            for j in 0..=k {
                z_coeffs[i + j] += ri * lk[j];
            }
        }
    }
    let nf = n as f64;
    let ln4n = (4.0 * nf).ln();
    let lg = log_gamma(alpha + 1.0);
    let coefficients = z_coeffs
        .iter()
        .enumerate()
        .map(|(l, d)| {
            let v = f64::from(*d);
            if v == 0.0 {
                0.0
            } else {
                v.signum() * (v.abs().ln() + (alpha + l as f64 + 1.0) * ln4n - lg).exp()
            }
        })
        .collect();
    let n_alpha = nf * (nf + alpha);
    let mut ff = dd(1.0);
    let beta_coeffs = z_coeffs
        .iter()
        .enumerate()
        .map(|(l, d)| {
            if l > 0 {
                ff *= dd(n_alpha) - alpha - 1.0 - l as f64;
            }
            *d * ff
        })
        .collect();
    Ok(PolyExpansion { n, alpha, coefficients, z_coeffs, beta_coeffs })
}

// Paper-convention L_k^alpha coefficients (leading 1/k!) in double-double.
fn laguerre_coeffs_dd(k: usize, alpha: f64) -> Vec<TwoFloat> {
    let mut out = Vec::with_capacity(k + 1);
    let mut jfact = dd(1.0);
    for j in 0..=k {
        if j > 0 {
            jfact *= j as f64;
        }
        let mut binom = dd(1.0);
        for i in 1..=k - j {
            binom = binom * (dd(alpha) + (j + i) as f64) / i as f64;
        }
        let v = dd_div(binom, jfact);
        out.push(if (k + j) % 2 == 0 { v } else { -v });
    }
    out
}

impl PolyExpansion {
    pub fn n_alpha(&self) -> f64 {
        self.n as f64 * (self.n as f64 + self.alpha)
    }

    /// Reconstructed LUE one-point function at scale `1/(4N)`.
    pub fn lue_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let nf = self.n as f64;
        let z = 4.0 * nf * x;
        if z == 0.0 {
            return if self.alpha == 0.0 {
                4.0 * nf * f64::from(self.z_coeffs[0]) / (log_gamma(1.0)).exp()
            } else if self.alpha > 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let mut acc = dd(0.0);
        for c in self.z_coeffs.iter().rev() {
            acc = acc * z + *c;
        }
        let poly = f64::from(acc);
        if poly == 0.0 {
            return 0.0;
        }
        let log_pref = (4.0 * nf).ln() + self.alpha * z.ln() - z - log_gamma(self.alpha + 1.0);
        poly.signum() * (poly.abs().ln() + log_pref).exp()
    }

    /// `integral of x^alpha e^{-4Nx} sum_l c_l x^l dx`, summed exactly term by
    /// term as Gamma integrals; equals N.
    pub fn normalization(&self) -> f64 {
        // c_l Gamma(l + alpha + 1) / (4N)^{l + alpha + 1} = d_l (alpha + 1)_l
        let mut poch = dd(1.0);
        let mut acc = dd(0.0);
        for (l, d) in self.z_coeffs.iter().enumerate() {
            if l > 0 {
                poch = poch * (dd(self.alpha) + l as f64);
            }
            acc += *d * poch;
        }
        f64::from(acc)
    }

    // Fixed-trace density at trace one, y in [0, 1].
    fn unit_density(&self, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        let nf = self.n as f64;
        let n_alpha = self.n_alpha();
        let p = n_alpha - self.alpha - 2.0 * nf;
        let mut log_pref = log_gamma(n_alpha) - log_gamma(n_alpha - self.alpha - 1.0) - log_gamma(self.alpha + 1.0);
        if self.alpha != 0.0 {
            if y == 0.0 {
                return if self.alpha > 0.0 { 0.0 } else { f64::INFINITY };
            }
            log_pref += self.alpha * y.ln();
        }
        if p != 0.0 {
            if y == 1.0 {
                return if p > 0.0 { 0.0 } else { f64::INFINITY };
            }
            log_pref += p * (-y).ln_1p();
        }
        let m = 2 * self.n - 2;
        let yd = dd(y);
        let od = dd(1.0) - yd;
        let mut acc = dd(0.0);
        let mut ypow = dd(1.0);
        for (l, e) in self.beta_coeffs.iter().enumerate() {
            let mut opow = dd(1.0);
            for _ in 0..m - l {
                opow *= od;
            }
            acc += *e * ypow * opow;
            ypow *= yd;
        }
        f64::from(acc) * log_pref.exp()
    }
}

/// Fixed-trace one-point density `R_1^{delta, r}(x)` by the series route.
pub fn ftlue_density_series(pe: &PolyExpansion, r: f64, x: f64) -> Result<f64> {
    if pe.n == 1 {
        return Err(domain(
            "ftlue_density_series",
            "N = 1: the fixed-trace law is a point mass at r and has no density",
        ));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain("ftlue_density_series", format!("trace r = {r} must be positive")));
    }
    // Gamma(N_alpha - alpha - 1 - l) needs a positive argument for every l <= 2N-2.
    let worst = pe.n_alpha() - pe.alpha - 1.0 - (2 * pe.n - 2) as f64;
    if !(worst > 0.0) {
        return Err(domain(
            "ftlue_density_series",
            format!("Gamma(N_alpha - alpha - 2N + 1) has argument {worst} <= 0"),
        ));
    }
    if !x.is_finite() {
        return Err(domain("ftlue_density_series", "non-finite x"));
    }
    Ok(pe.unit_density(x / r) / r)
}

/// Fixed-trace density at the natural trace `r = (N + alpha)/4` by Fourier
/// inversion of the trace characteristic function.
///
/// The real segment `[-Y, Y]` uses the complex-scale kernel. Beyond it the
/// integrand is continued analytically into the upper half-plane, where
/// `e^{iy(N + alpha - 4x)}` decays, and the two tails are integrated along
/// vertical rays from `+-Y`. The branch cut of `(1 + iy/N)^p` sits on the
/// imaginary axis above `iN` and is never crossed.
pub fn ftlue_density_fourier(n: usize, alpha: f64, x: f64) -> Result<f64> {
    Ok(fourier_parts(n, alpha, x)?.density)
}

/// Pieces of the Fourier route, exposed for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct FourierParts {
    pub density: f64,
    /// Assembled integral before normalization.
    pub integral: Complex64,
    pub segment: Complex64,
    pub right_tail: Complex64,
    pub left_tail: Complex64,
    pub cutoff: f64,
}

pub fn fourier_parts(n: usize, alpha: f64, x: f64) -> Result<FourierParts> {
    if n == 0 || n > MAX_FOURIER_N {
        return Err(range("ftlue_density_fourier", format!("N = {n} outside 1..={MAX_FOURIER_N}")));
    }
    let nf = n as f64;
    let r = (nf + alpha) / 4.0;
    if !(x > 0.0 && x < r) {
        return Err(domain("ftlue_density_fourier", format!("x = {x} outside (0, {r})")));
    }
    let base = KernelContext::new(n, alpha)?;
    let n_alpha = nf * (nf + alpha);
    // |phi_N(Y)| = 1e-12, doubled, and capped: the tails are exact anyway.
    let y0 = nf * ((2.0 * 12.0 * 10f64.ln() / n_alpha).exp() - 1.0).sqrt();
    let cutoff = (2.0 * y0).min(8.0 * nf).max(2.0);

    let segment_integrand = |y: f64| -> Complex64 {
        let s = Complex64::new(1.0, y / nf).inv() / (4.0 * nf);
        let k = base.rescaled(s).and_then(|ctx| kernel_diag(&ctx, Complex64::new(x, 0.0)));
        match k {
            Ok(k) => phi_char(n, alpha, y) * k,
            Err(_) => Complex64::new(f64::NAN, 0.0),
        }
    };
    let tol = Tolerance::new(1e-13, 1e-12).with_max_intervals(20_000);
    let segment = integrate(segment_integrand, -cutoff, cutoff, tol)
        .map_err(|e| numeric("ftlue_density_fourier", format!("real segment: {e}")))?
        .value;

    let omega = nf + alpha - 4.0 * x;
    let ray = |y0: f64| -> Result<Complex64> {
        let f = |t: f64| -> Complex64 { continued_integrand(n, alpha, x, Complex64::new(y0, t)) };
        let v = integrate_to_infinity(f, 0.0, 1.0 / omega, tol)
            .map_err(|e| numeric("ftlue_density_fourier", format!("tail ray at {y0}: {e}")))?;
        Ok(v.value * Complex64::i())
    };
    // int_Y^inf = i int_0^inf G(Y + it) dt; int_{-inf}^{-Y} = -i int_0^inf G(-Y + it) dt
    let right_tail = ray(cutoff)?;
    let left_tail = -ray(-cutoff)?;
    let integral = segment + right_tail + left_tail;
    let norm = 2.0 * PI * nf * gamma_density(n_alpha, n_alpha)?;
    if integral.im.abs() > 1e-8 * integral.re.abs().max(norm) {
        return Err(numeric(
            "ftlue_density_fourier",
            format!("imaginary residue {:e} against real part {:e}", integral.im, integral.re),
        ));
    }
    Ok(FourierParts { density: integral.re / norm, integral, segment, right_tail, left_tail, cutoff })
}

/// `phi_N(y) K_N(x, x, 1/(4N(1 + iy/N)))` for complex `y`, written through
/// the polynomial `sum_k p_k(z)^2` so it continues off the real axis.
pub fn continued_integrand(n: usize, alpha: f64, x: f64, y: Complex64) -> Complex64 {
    let nf = n as f64;
    let n_alpha = nf * (nf + alpha);
    let w = Complex64::new(1.0, 0.0) + Complex64::i() * y / nf;
    let z = w * (4.0 * nf * x);
    let omega = nf + alpha - 4.0 * x;
    let log_real = (4.0 * nf).ln() + alpha * (4.0 * nf * x).ln() - 4.0 * nf * x;
    let log_c = Complex64::i() * y * omega + w.ln() * (1.0 + alpha - n_alpha) + log_real;
    log_c.exp() * orthonormal_square_sum(n, alpha, z)
}

// sum_{k<N} p_k(z)^2 for the orthonormal Laguerre polynomials.
fn orthonormal_square_sum(n: usize, alpha: f64, z: Complex64) -> Complex64 {
    let mut p_prev = Complex64::new(0.0, 0.0);
    let mut p = Complex64::new((-0.5 * log_gamma(alpha + 1.0)).exp(), 0.0);
    let mut acc = p * p;
    for k in 0..n.saturating_sub(1) {
        let kf = k as f64;
        let a_k = (kf * (kf + alpha)).sqrt();
        let a_k1 = ((kf + 1.0) * (kf + 1.0 + alpha)).sqrt();
        let next = ((z - (2.0 * kf + alpha + 1.0)) * p - a_k * p_prev) / a_k1;
        p_prev = p;
        p = next;
        acc += p * p;
    }
    acc
}

/// Bounded-trace one-point density `R_1^{theta, r}(x)` by the radial mixture.
pub fn btlue_density_radial(n: usize, alpha: f64, r: f64, x: f64) -> Result<f64> {
    let pe = lue_poly_expansion(n, alpha)?;
    btlue_density_radial_with(&pe, r, x)
}

/// As [`btlue_density_radial`], reusing a prepared expansion.
pub fn btlue_density_radial_with(pe: &PolyExpansion, r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("btlue_density_radial", format!("trace r = {r} must be positive")));
    }
    if !(x >= 0.0) || x > r {
        return Ok(0.0);
    }
    let n_alpha = pe.n_alpha();
    let lo = x / r;
    if pe.n == 1 {
        return Ok(n_alpha * lo.powf(n_alpha - 1.0) / r);
    }
    let window = 1.0 - 10.0 * n_alpha.ln() / n_alpha;
    let u_minus = lo.max(window).max(0.0);
    let f = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        n_alpha * ((n_alpha - 2.0) * u.ln()).exp() * pe.unit_density(x / (u * r)) / r
    };
    let val = integrate(f, u_minus, 1.0, Tolerance::new(1e-14, 1e-11).with_max_intervals(20_000))?;
    if u_minus > lo {
        // Bound the discarded mass by the density supremum on the y-range it
        // can reach, with a safety factor for the grid.
        let y_lo = x / (u_minus * r);
        let sup = (0..=128)
            .map(|i| pe.unit_density(y_lo + (1.0 - y_lo) * i as f64 / 128.0))
            .fold(0.0, f64::max)
            * 1.5
            / r;
        let bound = sup * n_alpha / (n_alpha - 1.0) * u_minus.powf(n_alpha - 1.0);
        if bound > 1e-9 * val.value.abs().max(1e-3) {
            return Err(numeric(
                "btlue_density_radial",
                format!("remainder bound {bound:e} beyond the window [{u_minus}, 1]"),
            ));
        }
    }
    Ok(val.value)
}

/// Both sides of `R_1^{LUE,s}(x) = int_0^inf R_1^{delta,u}(x) gamma(u/s) du / s`.
pub fn prop2_check(n: usize, alpha: f64, s: f64, x: f64) -> Result<(f64, f64)> {
    if n == 0 || n > 8 {
        return Err(range("prop2_check", format!("N = {n} outside 1..=8")));
    }
    if !(s > 0.0 && x > 0.0) {
        return Err(domain("prop2_check", "s and x must be positive"));
    }
    let ctx = KernelContext::with_real_scale(n, alpha, s)?;
    let lhs = kernel_diag(&ctx, Complex64::new(x, 0.0))?.re;
    let nf = n as f64;
    let n_alpha = nf * (nf + alpha);
    if n == 1 {
        return Ok((lhs, gamma_density(n_alpha, x / s)? / s));
    }
    let pe = lue_poly_expansion(n, alpha)?;
    // Substitute v = u / s: integrand R^{delta, s v}(x) gamma(v) on v > x / s.
    let v0 = x / s;
    let f = |v: f64| -> f64 {
        let u = s * v;
        pe.unit_density(x / u) / u * gamma_density(n_alpha, v).unwrap_or(f64::NAN)
    };
    let v1 = v0.max(n_alpha + 40.0 * n_alpha.sqrt() + 40.0);
    let tol = Tolerance::new(1e-16, 1e-12).with_max_intervals(20_000);
    let head = integrate(f, v0, v1, tol)?;
    let tail = integrate_to_infinity(f, v1, 1.0, tol)?;
    Ok((lhs, head.value + tail.value))
}

/// Which concentration statement to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcentrationMode {
    /// Log of `gamma(N_alpha (1 +- b)) / gamma(N_alpha)`, the larger side,
    /// against `-N^2 b^2 / 2`.
    Fixed,
    /// Log of `int_0^{1-b} N_alpha u^{N_alpha - 1} du` against `-N^2 b`.
    Bounded,
}

/// Exact log tail and its leading-order prediction.
pub fn concentration_tail(n: usize, alpha: f64, b: f64, mode: ConcentrationMode) -> Result<(f64, f64)> {
    if !(b > 0.0 && b < 1.0) {
        return Err(domain("concentration_tail", format!("b = {b} must lie in (0, 1)")));
    }
    let nf = n as f64;
    let n_alpha = nf * (nf + alpha);
    match mode {
        ConcentrationMode::Bounded => Ok((n_alpha * (-b).ln_1p(), -nf * nf * b)),
        ConcentrationMode::Fixed => {
            let side = |sign: f64| (n_alpha - 1.0) * (sign * b).ln_1p() - sign * n_alpha * b;
            Ok((side(1.0).max(side(-1.0)), -nf * nf * b * b / 2.0))
        }
    }
}

/// Route that produced a [`ConstrainedDensity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Series,
    Fourier,
    Radial,
    MonteCarlo,
}

#[derive(Debug, Clone)]
pub struct ConstrainedDensity {
    pub spec: EnsembleSpec,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub route: Route,
}

impl ConstrainedDensity {
    /// Evaluate an exact route on a grid, in parallel.
    pub fn exact(spec: &EnsembleSpec, grid: &[f64], route: Route) -> Result<Self> {
        let (n, alpha) = (spec.n, spec.alpha());
        let values: Result<Vec<f64>> = match (route, spec.constraint) {
            (Route::Series, Constraint::Fixed { trace }) => {
                let pe = lue_poly_expansion(n, alpha)?;
                grid.par_iter().map(|&x| ftlue_density_series(&pe, trace, x)).collect()
            }
            (Route::Fourier, Constraint::Fixed { trace }) => {
                let natural = (n as f64 + alpha) / 4.0;
                grid.par_iter()
                    .map(|&x| {
                        let xn = x * natural / trace;
                        if xn <= 0.0 || xn >= natural {
                            // Support edges: the density vanishes outside (0, r)
                            // and the inversion integral is not defined on them.
                            lue_poly_expansion(n, alpha).and_then(|pe| ftlue_density_series(&pe, trace, x))
                        } else {
                            ftlue_density_fourier(n, alpha, xn).map(|v| v * natural / trace)
                        }
                    })
                    .collect()
            }
            (Route::Radial, Constraint::Bounded { trace }) => {
                let pe = lue_poly_expansion(n, alpha)?;
                grid.par_iter().map(|&x| btlue_density_radial_with(&pe, trace, x)).collect()
            }
            (Route::MonteCarlo, _) => {
                return Err(contract("ConstrainedDensity::exact", "use monte_carlo for sampled densities"))
            }
            (route, c) => {
                return Err(contract("ConstrainedDensity::exact", format!("route {route:?} does not apply to {c:?}")))
            }
        };
        Ok(Self { spec: *spec, grid: grid.to_vec(), values: values?, route })
    }

    /// Sampled density on a uniform grid: the bin around each grid point
    /// spans half the spacing to either side, clipped to `[lo, hi]`.
    pub fn monte_carlo(spec: &EnsembleSpec, grid: &[f64], seed: u64, draws: usize) -> Result<Self> {
        if grid.len() < 2 || draws == 0 {
            return Err(contract("ConstrainedDensity::monte_carlo", "need >= 2 grid points and >= 1 draw"));
        }
        let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
        let (lo, hi) = (grid[0] - 0.5 * h, grid[grid.len() - 1] + 0.5 * h);
        let m = grid.len();
        let blocks = sample_blocks(spec, seed, draws, || vec![0u64; m], |counts, sp| {
            for &x in &sp.values {
                if x >= lo && x < hi {
                    let i = (((x - lo) / h) as usize).min(m - 1);
                    counts[i] += 1;
                }
            }
        })?;
        let mut counts = vec![0u64; m];
        for b in blocks {
            for (c, v) in counts.iter_mut().zip(b) {
                *c += v;
            }
        }
        let support_hi = match spec.constraint {
            Constraint::Fixed { trace } | Constraint::Bounded { trace } => trace,
            Constraint::Free { .. } => f64::INFINITY,
        };
        let values = grid
            .iter()
            .zip(&counts)
            .map(|(&x, &c)| {
                let a = (x - 0.5 * h).max(0.0);
                let b = (x + 0.5 * h).min(support_hi);
                if b > a {
                    c as f64 / (draws as f64 * (b - a))
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { spec: *spec, grid: grid.to_vec(), values, route: Route::MonteCarlo })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laguerre::kernel_cd_real;
    use approx::assert_relative_eq;

    #[test]
    fn dd_division_is_double_double_accurate() {
        let third = dd_div(dd(1.0), dd(3.0));
        let res = third * 3.0 - 1.0;
        assert!(f64::from(res).abs() < 1e-31);
        let a = dd_div(dd(2.0), dd(7.0)) + dd(1e-20);
        let q = dd_div(a, dd_div(dd(5.0), dd(11.0)));
        let back = q * dd_div(dd(5.0), dd(11.0)) - a;
        assert!(f64::from(back).abs() < 1e-31);
    }

    #[test]
    fn expansion_examples() {
        let pe = lue_poly_expansion(1, 0.0).unwrap();
        assert_eq!(pe.coefficients.len(), 1);
        assert_relative_eq!(pe.coefficients[0], 4.0, max_relative = 1e-15);
        let pe = lue_poly_expansion(2, 0.0).unwrap();
        assert_relative_eq!(pe.normalization(), 2.0, max_relative = 1e-14);
        let r = integrate_to_infinity(|x| pe.lue_density(x), 0.0, 0.25, Tolerance::new(1e-13, 1e-13)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        assert!(lue_poly_expansion(25, 0.0).is_err());
    }

    #[test]
    fn expansion_matches_kernel() {
        for (n, alpha) in [(8usize, 1.0), (16, 0.0), (24, 2.5), (24, -0.5)] {
            let pe = lue_poly_expansion(n, alpha).unwrap();
            let ctx = KernelContext::with_real_scale(n, alpha, 1.0 / (4.0 * n as f64)).unwrap();
            // spectrum edge sits near x = 1 at this scale
            let hi = 1.3;
            let mut worst: f64 = 0.0;
            for i in 1..=200 {
                let x = hi * i as f64 / 200.0;
                let k = kernel_cd_real(&ctx, x, x).unwrap().re;
                if k < 1e-250 {
                    continue;
                }
                worst = worst.max((pe.lue_density(x) / k - 1.0).abs());
            }
            assert!(worst < 1e-8, "N={n} alpha={alpha}: {worst:e}");
            assert_relative_eq!(pe.normalization(), n as f64, max_relative = 1e-8);
        }
    }

    #[test]
    fn expansion_is_nonnegative() {
        let pe = lue_poly_expansion(12, 0.5).unwrap();
        let peak = (1..400).map(|i| pe.lue_density(i as f64 / 200.0)).fold(0.0, f64::max);
        for i in 0..400 {
            assert!(pe.lue_density(i as f64 / 200.0) >= -1e-9 * peak);
        }
    }

    #[test]
    fn series_two_by_two_closed_form() {
        let pe = lue_poly_expansion(2, 0.0).unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let v = ftlue_density_series(&pe, 1.0, x).unwrap();
            assert!((v - 6.0 * (2.0 * x - 1.0).powi(2)).abs() < 1e-10, "x={x}");
        }
        assert_eq!(ftlue_density_series(&pe, 1.0, 1.2).unwrap(), 0.0);
        assert_eq!(ftlue_density_series(&pe, 1.0, -0.1).unwrap(), 0.0);
    }

    #[test]
    fn series_rejects_point_mass() {
        let pe = lue_poly_expansion(1, 0.0).unwrap();
        assert!(matches!(ftlue_density_series(&pe, 1.0, 0.5), Err(crate::Error::Domain { .. })));
    }

    #[test]
    fn series_normalization_and_boundary() {
        for (n, alpha, r) in [(3usize, 0.0, 1.0), (4, 1.0, 2.0), (8, 0.5, 2.125), (16, 0.0, 4.0), (24, 1.0, 1.0)] {
            let pe = lue_poly_expansion(n, alpha).unwrap();
            let v = integrate(|x| ftlue_density_series(&pe, r, x).unwrap(), 0.0, r, Tolerance::new(1e-12, 1e-12))
                .unwrap()
                .value;
            assert!((v - n as f64).abs() < 1e-7, "N={n}: {v}");
        }
        let pe = lue_poly_expansion(4, 0.0).unwrap();
        assert!(ftlue_density_series(&pe, 1.0, 1.0 - 1e-6).unwrap() <= 1e-3);
    }

    #[test]
    fn series_homogeneity() {
        let pe = lue_poly_expansion(6, 1.5).unwrap();
        for r in [0.5, 1.0, 3.0, 7.5] {
            for i in 1..20 {
                let x = r * i as f64 / 20.0;
                let a = ftlue_density_series(&pe, r, x).unwrap() * r;
                let b = ftlue_density_series(&pe, 1.0, x / r).unwrap();
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn continued_integrand_matches_kernel_on_real_axis() {
        let (n, alpha, x) = (5usize, 0.5, 0.7);
        let base = KernelContext::new(n, alpha).unwrap();
        for y in [-7.0, -0.3, 0.0, 2.5, 11.0] {
            let s = Complex64::new(1.0, y / n as f64).inv() / (4.0 * n as f64);
            let k = kernel_diag(&base.rescaled(s).unwrap(), Complex64::new(x, 0.0)).unwrap();
            let a = phi_char(n, alpha, y) * k;
            let b = continued_integrand(n, alpha, x, Complex64::new(y, 0.0));
            assert!((a - b).norm() <= 1e-12 * a.norm(), "y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn fourier_two_by_two() {
        for x in [0.1, 0.25, 0.5, 0.75, 0.9] {
            // natural trace is 1/2 for N = 2, alpha = 0
            let v = ftlue_density_fourier(2, 0.0, x * 0.5).unwrap() * 0.5;
            assert!((v - 6.0 * (2.0 * x - 1.0).powi(2)).abs() < 1e-6, "x={x}: {v}");
        }
    }

    #[test]
    fn fourier_matches_series() {
        let pe = lue_poly_expansion(4, 0.0).unwrap();
        for i in 1..=20 {
            let x = i as f64 / 21.0;
            let f = ftlue_density_fourier(4, 0.0, x).unwrap();
            let s = ftlue_density_series(&pe, 1.0, x).unwrap();
            assert!((f - s).abs() < 1e-6, "x={x}: {f} vs {s}");
        }
    }

    #[test]
    fn fourier_halves_are_conjugate() {
        let p = fourier_parts(4, 1.0, 0.6).unwrap();
        assert!(p.integral.im.abs() < 1e-10 * p.integral.re.abs());
        assert!((p.right_tail - p.left_tail.conj()).norm() < 1e-10 * p.integral.norm());
    }

    #[test]
    fn radial_examples() {
        for x in [0.0, 0.3, 0.99] {
            assert_relative_eq!(btlue_density_radial(1, 0.0, 1.0, x).unwrap(), 1.0, epsilon = 1e-15);
        }
        assert_eq!(btlue_density_radial(3, 0.0, 1.0, 1.5).unwrap(), 0.0);
        for (n, alpha, r) in [(2usize, 0.0, 1.0), (4, 1.0, 1.25), (8, 0.0, 2.0)] {
            let pe = lue_poly_expansion(n, alpha).unwrap();
            let v = integrate(|x| btlue_density_radial_with(&pe, r, x).unwrap(), 0.0, r, Tolerance::new(1e-10, 1e-10))
                .unwrap()
                .value;
            assert!((v / n as f64 - 1.0).abs() < 1e-6, "N={n}: {v}");
        }
    }

    #[test]
    fn radial_approaches_fixed_trace() {
        let mut prev = f64::INFINITY;
        for n in [4usize, 8, 12] {
            let r = n as f64 / 4.0;
            let pe = lue_poly_expansion(n, 0.0).unwrap();
            let d = (0..=40)
                .map(|i| {
                    let x = 0.1 + 0.8 * i as f64 / 40.0;
                    let b = btlue_density_radial_with(&pe, r, x).unwrap();
                    let f = ftlue_density_series(&pe, r, x).unwrap();
                    (b - f).abs() / n as f64
                })
                .fold(0.0, f64::max);
            assert!(d < prev, "N={n}: {d} !< {prev}");
            prev = d;
        }
    }

    #[test]
    fn prop2_examples() {
        let (l, r) = prop2_check(1, 0.0, 1.0, 0.7).unwrap();
        assert_relative_eq!(l, (-0.7f64).exp(), max_relative = 1e-10);
        assert_relative_eq!(r, (-0.7f64).exp(), max_relative = 1e-10);
        let (l, r) = prop2_check(2, 0.0, 1.0, 1.0).unwrap();
        assert!((l - r).abs() < 1e-7);
        let (l, r) = prop2_check(4, 1.0, 1.0 / 16.0, 0.5).unwrap();
        assert!(((l - r) / l).abs() < 1e-6);
    }

    #[test]
    fn concentration_examples() {
        let (t, p) = concentration_tail(10, 0.0, 0.05, ConcentrationMode::Bounded).unwrap();
        assert_relative_eq!(t, 100.0 * 0.95f64.ln(), max_relative = 1e-14);
        assert_eq!(p, -5.0);
        let b = 20f64.powf(-0.8);
        let (t, p) = concentration_tail(20, 0.0, b, ConcentrationMode::Fixed).unwrap();
        assert!((t / p - 1.0).abs() < 0.25);
        let (t, _) = concentration_tail(10, 0.0, 1e-12, ConcentrationMode::Bounded).unwrap();
        assert!(t.abs() < 1e-9);
    }

    // Fails at t = 10 (ratio 0.97866, confirmed by the Fourier route below);
    // the 2% band holds only up to about t = 9.
    #[test]
    #[ignore = "2% band is exceeded at t = 10 for N = 8; see README"]
    fn hard_edge_factor_structure() {
        let n = 8usize;
        let pe = lue_poly_expansion(n, 0.0).unwrap();
        let r = n as f64 / 4.0;
        for i in 1..=20 {
            let t = 10.0 * i as f64 / 20.0;
            let x = t / (16.0 * (n * n) as f64);
            let ratio = ftlue_density_series(&pe, r, x).unwrap() / pe.lue_density(x);
            assert!((ratio - 1.0).abs() < 0.02, "t={t}: {ratio}");
        }
    }

    #[test]
    fn hard_edge_ratio_confirmed_by_fourier() {
        let pe = lue_poly_expansion(8, 0.0).unwrap();
        for t in [1.0, 5.0, 8.0, 10.0] {
            let x = t / 1024.0;
            let s = ftlue_density_series(&pe, 2.0, x).unwrap();
            let f = ftlue_density_fourier(8, 0.0, x).unwrap();
            assert!((s - f).abs() < 1e-10 * s, "t={t}");
            let ratio = s / pe.lue_density(x);
            assert!((ratio - 1.0).abs() < if t <= 8.0 { 0.02 } else { 0.025 }, "t={t}: {ratio}");
        }
    }

    #[test]
    fn monte_carlo_density_tracks_series() {
        let spec = EnsembleSpec::with_alpha(3, 0.0, Constraint::Fixed { trace: 1.0 }).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let mc = ConstrainedDensity::monte_carlo(&spec, &grid, 1, 200_000).unwrap();
        let ex = ConstrainedDensity::exact(&spec, &grid, Route::Series).unwrap();
        for (i, (a, b)) in mc.values.iter().zip(&ex.values).enumerate().skip(1).take(19) {
            assert!((a - b).abs() < 0.1 * b.max(0.5), "{i}: {a} vs {b}");
        }
    }
}
