//! Numerical integration: adaptive Gauss-Kronrod, fixed Gauss-Legendre
//! panels, and generalized Gauss-Laguerre rules.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{contract, numeric, Result};
use crate::linalg::tridiag_eigenvalues;
use crate::specfun::log_gamma;

/// Values that can be accumulated by the adaptive integrator.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Result<(T, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut bad = !fc.magnitude().is_finite();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        bad |= !(f1.magnitude().is_finite() && f2.magnitude().is_finite());
        let s = f1 + f2;
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    if bad {
        return Err(numeric("integrate", format!("non-finite integrand on [{a}, {b}]")));
    }
    let k = kron * h;
    let g = gauss * h;
    Ok((k, (k - g).magnitude()))
}

/// Adaptive 7/15-point Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate is below `max(tol.abs, tol.rel * |I|)`.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(contract("integrate", "finite limits required"));
    }
    if a == b {
        return Ok(Integral { value: T::default(), error: 0.0, evaluations: 0 });
    }
    let (v, e) = gk15(&mut f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    let mut evaluations = 15;
    let min_width = |lo: f64, hi: f64| 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    loop {
        let mut total = T::default();
        let mut err = 0.0;
        for p in &parts {
            total = total + p.2;
            err += p.3;
        }
        if err <= tol.abs.max(tol.rel * total.magnitude()) {
            return Ok(Integral { value: total, error: err, evaluations });
        }
        // Bisect the worst interval that is still wide enough to split.
        let worst = parts
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.1 - p.0).abs() > min_width(p.0, p.1))
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(numeric(
                "integrate",
                format!("interval resolution exhausted with error estimate {err:e}"),
            ));
        };
        if parts.len() >= tol.max_intervals {
            return Err(numeric(
                "integrate",
                format!("{} intervals used, error estimate {err:e}", parts.len()),
            ));
        }
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        evaluations += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Integral over `[a, inf)` via `x = a + scale * t / (1 - t)`.
///
/// `scale` should be comparable to the decay length of `f`.
pub fn integrate_to_infinity<T, F>(mut f: F, a: f64, scale: f64, tol: Tolerance) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !(scale > 0.0) {
        return Err(contract("integrate_to_infinity", "scale must be positive"));
    }
    integrate(
        |t| {
            let u = 1.0 - t;
            if u <= 0.0 {
                return T::default();
            }
            let jac = scale / (u * u);
            f(a + scale * t / u) * jac
        },
        0.0,
        1.0,
        tol,
    )
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Generalized Gauss-Laguerre rule for the weight `x^alpha e^{-x}` on
/// `(0, inf)`, returned as nodes and natural-log weights.
///
/// Nodes come from the Jacobi matrix and are polished by Newton steps on the
/// standard three-term recurrence; weights use the derivative formula.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || !(alpha > -1.0) {
        return Err(contract("gauss_laguerre", "need n >= 1 and alpha > -1"));
    }
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    let mut nodes = tridiag_eigenvalues(&diag, &off)?;
    let mut logw = Vec::with_capacity(n);
    let nf = n as f64;
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (ln, lnm1, _) = laguerre_pair(n, alpha, *x);
            let deriv = (nf * ln - (nf + alpha) * lnm1) / *x;
            let dx = ln / deriv;
            *x -= dx;
            if dx.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        let (ln, lnm1, log_scale) = laguerre_pair(n, alpha, *x);
        let deriv = (nf * ln - (nf + alpha) * lnm1) / *x;
        let log_deriv = deriv.abs().ln() + log_scale;
        logw.push(log_gamma(nf + alpha + 1.0) - log_gamma(nf + 1.0) - x.ln() - 2.0 * log_deriv);
    }
    Ok((nodes, logw))
}

// Standard Laguerre L_n and L_{n-1} at x as mantissas sharing the
// returned natural-log scale.
fn laguerre_pair(n: usize, alpha: f64, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1) = (1.0, 1.0 + alpha - x);
    if n == 1 {
        return (p1, p0, 0.0);
    }
    let mut log_scale = 0.0;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        let m = p1.abs().max(p0.abs());
        if m > 1e100 {
            p0 /= m;
            p1 /= m;
            log_scale += m.ln();
        }
    }
    (p1, p0, log_scale)
}
