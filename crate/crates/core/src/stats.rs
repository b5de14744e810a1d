//! Empirical statistics of sampled spectra and their exact determinantal
//! counterparts.

use std::fmt;

use rayon::prelude::*;

use crate::ensembles::{entropy_of, sample_blocks, Constraint, EnsembleSpec, Spectrum};
use crate::error::{contract, domain, numeric, Result};
use crate::laguerre::{kernel_matrix, mp_density, KernelContext, LimitingKernel};
use crate::quad::gauss_legendre;
use crate::specfun::CompensatedSum;

/// Fixed-width histogram over `[lo, hi]`. Bins are half-open `[a, b)`
/// except the last, which also takes `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Eigenvalues that fell outside `[lo, hi]`.
    pub overflow: u64,
    pub total_draws: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(contract("histogram", format!("need bins >= 1 and lo < hi, got {bins} on [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, counts: vec![0; bins], overflow: 0, total_draws: 0 })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, if i + 1 == self.bins() { self.hi } else { self.lo + (i + 1) as f64 * w })
    }

    /// Record one spectrum.
    pub fn add(&mut self, values: &[f64]) {
        self.total_draws += 1;
        let bins = self.bins();
        for &x in values {
            if x >= self.lo && x <= self.hi {
                let i = (((x - self.lo) / self.width()) as usize).min(bins - 1);
                self.counts[i] += 1;
            } else {
                self.overflow += 1;
            }
        }
    }

    /// Add another histogram with the same binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if other.lo != self.lo || other.hi != self.hi || other.bins() != self.bins() {
            return Err(contract("Histogram::merge", "binning mismatch"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        self.total_draws += other.total_draws;
        Ok(())
    }

    /// Expected eigenvalues per draw per unit length, bin by bin. Integrates
    /// to the in-range count per draw.
    pub fn density(&self) -> Vec<f64> {
        let scale = 1.0 / (self.total_draws as f64 * self.width());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    /// Binomial standard error of each bin's density, taking the
    /// `total_draws * per_draw` eigenvalues as independent trials.
    pub fn density_std_error(&self, per_draw: usize) -> Vec<f64> {
        let trials = self.total_draws as f64 * per_draw as f64;
        let scale = 1.0 / (self.total_draws as f64 * self.width());
        self.counts
            .iter()
            .map(|&c| {
                let p = c as f64 / trials;
                (trials * p * (1.0 - p)).sqrt() * scale
            })
            .collect()
    }
}

/// Histogram of every eigenvalue across `samples`.
pub fn histogram(samples: &[Spectrum], lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(contract("histogram", "empty sample set"));
    }
    let mut h = Histogram::new(lo, hi, bins)?;
    for s in samples {
        h.add(&s.values);
    }
    Ok(h)
}

/// Histogram of `draws` fresh spectra, accumulated block by block.
pub fn histogram_sampled(spec: &EnsembleSpec, seed: u64, draws: usize, lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    let empty = Histogram::new(lo, hi, bins)?;
    let blocks = sample_blocks(spec, seed, draws, || empty.clone(), |h, sp| h.add(&sp.values))?;
    let mut total = empty;
    for b in &blocks {
        total.merge(b)?;
    }
    Ok(total)
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Mean and variance of the number of eigenvalues in a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingMoments {
    pub mean: f64,
    pub variance: f64,
    /// Exact route: change over the last refinement. Sampled route: standard
    /// error of the mean.
    pub mean_error: f64,
    pub variance_error: f64,
}

/// Exact counting moments of the LUE on `[a, b]`.
///
/// With `G_jk = int_a^b phi_j phi_k`, the mean is `tr G` and
/// `int int K^2 = tr G^2`, so the variance `tr G - tr G^2` follows from
/// one-dimensional quadrature. `G` is built on Gauss-Legendre panels and the
/// panel count doubles until the variance moves by less than 1e-6 relative.
pub fn counting_moments_exact(ctx: &KernelContext, a: f64, b: f64) -> Result<CountingMoments> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(domain("counting_moments_exact", format!("need 0 <= a < b < inf, got [{a}, {b}]")));
    }
    if !ctx.is_real_scale() {
        return Err(contract("counting_moments_exact", "real scale required"));
    }
    let n = ctx.n();
    let (nodes, weights) = gauss_legendre(24);
    let gram = |panels: usize| -> Result<Vec<f64>> {
        let h = (b - a) / panels as f64;
        let mut g = vec![0.0; n * n];
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (t, w) in nodes.iter().zip(&weights) {
                let x = lo + 0.5 * h * (t + 1.0);
                let phi = ctx.phi_table_real(x)?;
                let wx = 0.5 * h * w;
                for j in 0..n {
                    let pj = phi[j].re * wx;
                    for k in j..n {
                        g[j * n + k] += pj * phi[k].re;
                    }
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                g[j * n + k] = g[k * n + j];
            }
        }
        Ok(g)
    };
    let moments = |g: &[f64]| -> (f64, f64) {
        let mean: CompensatedSum = (0..n).map(|j| g[j * n + j]).collect();
        let sq: CompensatedSum = g.iter().map(|v| v * v).collect();
        (mean.value(), mean.value() - sq.value())
    };
    // Start with panels no wider than the local oscillation scale of phi_N.
    let span = (b - a) / ctx.scale().re;
    let mut panels = ((span / (4.0 * n as f64 + 8.0)) * 2.0 * n as f64 / 8.0).ceil().max(2.0) as usize;
    let (mut mean, mut var) = moments(&gram(panels)?);
    for _ in 0..12 {
        panels *= 2;
        let (m2, v2) = moments(&gram(panels)?);
        let (dm, dv) = ((m2 - mean).abs(), (v2 - var).abs());
        mean = m2;
        var = v2;
        // var vanishes on windows holding the whole spectrum; floor it by the mean
        if dv <= 1e-6 * var.abs().max(1e-6 * mean.abs()) && dm <= 1e-10 * mean.abs().max(1.0) {
            return Ok(CountingMoments { mean, variance: var, mean_error: dm, variance_error: dv });
        }
    }
    Err(numeric("counting_moments_exact", "panel refinement did not settle"))
}

/// Sampled counting moments from `draws` spectra.
///
/// Counts are integers, so the power sums are accumulated exactly and the
/// result does not depend on the thread count.
pub fn counting_moments_sampled(spec: &EnsembleSpec, seed: u64, draws: usize, a: f64, b: f64) -> Result<CountingMoments> {
    if draws < 2 {
        return Err(contract("counting_moments_sampled", "need at least two draws"));
    }
    let blocks = sample_blocks(spec, seed, draws, || [0u128; 4], |acc, sp| {
        let c = sp.values.iter().filter(|&&x| x >= a && x <= b).count() as u128;
        acc[0] += c;
        acc[1] += c * c;
        acc[2] += c * c * c;
        acc[3] += c * c * c * c;
    })?;
    let mut s = [0u128; 4];
    for blk in blocks {
        for i in 0..4 {
            s[i] += blk[i];
        }
    }
    let nd = draws as f64;
    let [m1, m2, m3, m4] = s.map(|v| v as f64 / nd);
    let mean = m1;
    let var = m2 - m1 * m1;
    let central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    let unbiased = var * nd / (nd - 1.0);
    Ok(CountingMoments {
        mean,
        variance: unbiased,
        mean_error: (unbiased / nd).sqrt(),
        variance_error: ((central4 - var * var).max(0.0) / nd).sqrt(),
    })
}

/// Scaling regime of a kernel-convergence measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Around the bulk point `u` in `(0, 1)`.
    Bulk(f64),
    Soft,
    Hard,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Bulk(u) => write!(f, "bulk(u={u})"),
            Regime::Soft => write!(f, "soft"),
            Regime::Hard => write!(f, "hard"),
        }
    }
}

/// Sup distance between the rescaled finite-N kernel and its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub alpha: f64,
    pub regime: Regime,
    pub window: String,
    pub sup_error: f64,
    pub points_checked: usize,
}

/// Default window for each regime: `|t| <= 2` in the bulk, `[-4, 2]` at
/// the soft edge and `(0, 20]` at the hard edge.
pub fn default_window(regime: Regime) -> Vec<f64> {
    match regime {
        Regime::Bulk(_) => (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect(),
        Regime::Soft => (0..=24).map(|i| -4.0 + 0.25 * i as f64).collect(),
        Regime::Hard => (1..=40).map(|i| 0.5 * i as f64).collect(),
    }
}

/// Compare `K_N` at `s = 1/(4N)`, rescaled to the regime, with the limiting
/// kernel on every pair of window points.
///
/// The bulk comparison is between magnitudes off the diagonal, since the
/// finite-N kernel carries a phase factor that cancels in determinants.
pub fn kernel_convergence(regime: Regime, n: usize, alpha: f64, window: &[f64]) -> Result<ConvergenceRow> {
    if window.len() < 4 {
        return Err(contract("kernel_convergence", "window needs at least 4 points"));
    }
    let nf = n as f64;
    let ctx = KernelContext::with_real_scale(n, alpha, 1.0 / (4.0 * nf))?;
    let (centre, width, limit) = match regime {
        Regime::Bulk(u) => {
            if !(u > 0.0 && u < 1.0) {
                return Err(domain("kernel_convergence", format!("bulk point u = {u} outside (0, 1)")));
            }
            (u, 1.0 / (nf * mp_density(u)), LimitingKernel::Sine)
        }
        Regime::Soft => (1.0, (2.0 * nf).powf(-2.0 / 3.0), LimitingKernel::Airy),
        Regime::Hard => {
            if window.iter().any(|&t| t <= 0.0) {
                return Err(domain("kernel_convergence", "hard-edge window must be positive"));
            }
            (0.0, 1.0 / (16.0 * nf * nf), LimitingKernel::Bessel(alpha))
        }
    };
    let points: Vec<f64> = window.iter().map(|t| centre + t * width).collect();
    let km = kernel_matrix(&ctx, &points)?;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..window.len() {
        for j in 0..window.len() {
            let scaled = km[i][j].re * width;
            let lim = limit.eval(window[i], window[j])?;
            let err = match regime {
                Regime::Bulk(_) if i != j => (scaled.abs() - lim.abs()).abs(),
                _ => (scaled - lim).abs(),
            };
            if !err.is_finite() {
                return Err(numeric("kernel_convergence", format!("non-finite error at ({}, {})", window[i], window[j])));
            }
            worst = worst.max(err);
            checked += 1;
        }
    }
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    Ok(ConvergenceRow {
        n,
        alpha,
        regime,
        window: format!("t in [{lo}, {hi}], {} points", window.len()),
        sup_error: worst,
        points_checked: checked,
    })
}

/// Kernel convergence over a ladder of N, computed in parallel.
pub fn convergence_ladder(regime: Regime, ns: &[usize], alpha: f64, window: &[f64]) -> Result<Vec<ConvergenceRow>> {
    ns.par_iter().map(|&n| kernel_convergence(regime, n, alpha, window)).collect()
}

/// Entanglement entropy statistics of trace-one spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageReport {
    pub draws: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `ln N - N / (2M)`.
    pub approximation: f64,
    /// Exact average for integer `M`, when available.
    pub exact: Option<f64>,
}

/// Exact average entropy `sum_{k=M+1}^{MN} 1/k - (N-1)/(2M)`, `N <= M`.
pub fn page_exact(n: usize, m: usize) -> Result<f64> {
    if n == 0 || m < n {
        return Err(domain("page_exact", format!("need 1 <= N <= M, got N={n}, M={m}")));
    }
    let s: CompensatedSum = (m + 1..=m * n).map(|k| 1.0 / k as f64).collect();
    Ok(s.value() - (n as f64 - 1.0) / (2.0 * m as f64))
}

fn page_report(spec: &EnsembleSpec, draws: usize, sum: f64, sum_sq: f64) -> PageReport {
    let nd = draws as f64;
    let mean = sum / nd;
    let var = if draws > 1 { ((sum_sq - nd * mean * mean) / (nd - 1.0)).max(0.0) } else { 0.0 };
    let (n, m) = (spec.n, spec.m);
    let exact = if m.fract() == 0.0 && m >= n as f64 { page_exact(n, m as usize).ok() } else { None };
    PageReport {
        draws,
        mean,
        std_error: (var / nd).sqrt(),
        approximation: (n as f64).ln() - n as f64 / (2.0 * m),
        exact,
    }
}

fn check_trace_one(spec: &EnsembleSpec) -> Result<()> {
    match spec.constraint {
        Constraint::Fixed { trace } if trace == 1.0 => Ok(()),
        c => Err(contract("page_average", format!("needs fixed trace 1, got {c:?}"))),
    }
}

/// Average entropy over given spectra, which must share one trace-one spec.
pub fn page_average(samples: &[Spectrum]) -> Result<PageReport> {
    let first = samples.first().ok_or_else(|| contract("page_average", "empty sample set"))?;
    check_trace_one(&first.spec)?;
    if samples.iter().any(|s| s.spec != first.spec) {
        return Err(contract("page_average", "mixed ensemble specs"));
    }
    let mut s = CompensatedSum::new();
    let mut s2 = CompensatedSum::new();
    for sp in samples {
        let e = entropy_of(&sp.values);
        s.add(e);
        s2.add(e * e);
    }
    Ok(page_report(&first.spec, samples.len(), s.value(), s2.value()))
}

/// Average entropy of `draws` fresh spectra, thread-count independent.
pub fn page_average_sampled(spec: &EnsembleSpec, seed: u64, draws: usize) -> Result<PageReport> {
    check_trace_one(spec)?;
    if draws == 0 {
        return Err(contract("page_average", "empty sample set"));
    }
    let blocks = sample_blocks(spec, seed, draws, || (CompensatedSum::new(), CompensatedSum::new()), |acc, sp| {
        let e = entropy_of(&sp.values);
        acc.0.add(e);
        acc.1.add(e * e);
    })?;
    let mut s = CompensatedSum::new();
    let mut s2 = CompensatedSum::new();
    for (a, b) in blocks {
        s.add(a.value());
        s2.add(b.value());
    }
    Ok(page_report(spec, draws, s.value(), s2.value()))
}
