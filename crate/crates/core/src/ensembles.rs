//! Exact samplers for the Laguerre unitary ensemble and its fixed-trace and
//! bounded-trace restrictions, plus per-sample observables.
//!
//! Every draw is a pure function of `(spec, seed, stream)`: the generator is
//! ChaCha8 keyed by the master seed with the draw index as its stream id, so
//! batches give identical results for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{contract, domain, Result};
use crate::specfun::CompensatedSum;

pub use crate::linalg::tridiag_eigenvalues;

/// Trace constraint of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// Unconstrained LUE with weight `x^alpha e^{-x/s}`.
    Free { scale: f64 },
    /// Trace fixed to `r`.
    Fixed { trace: f64 },
    /// Trace at most `r`.
    Bounded { trace: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    /// `M`, possibly non-integer; `alpha = M - N`.
    pub m: f64,
    pub constraint: Constraint,
}

impl EnsembleSpec {
    pub fn new(n: usize, m: f64, constraint: Constraint) -> Result<Self> {
        if n == 0 {
            return Err(domain("EnsembleSpec", "N must be positive"));
        }
        if !(m - n as f64 > -1.0) || !m.is_finite() {
            return Err(domain("EnsembleSpec", format!("alpha = M - N = {} must exceed -1", m - n as f64)));
        }
        let p = match constraint {
            Constraint::Free { scale } => scale,
            Constraint::Fixed { trace } | Constraint::Bounded { trace } => trace,
        };
        if !(p > 0.0 && p.is_finite()) {
            return Err(domain("EnsembleSpec", format!("scale or trace {p} must be positive")));
        }
        Ok(Self { n, m, constraint })
    }

    pub fn with_alpha(n: usize, alpha: f64, constraint: Constraint) -> Result<Self> {
        Self::new(n, n as f64 + alpha, constraint)
    }

    pub fn alpha(&self) -> f64 {
        self.m - self.n as f64
    }

    /// `N (N + alpha)`, the shape of the trace law.
    pub fn n_alpha(&self) -> f64 {
        self.n as f64 * self.m
    }
}

/// One sampled eigenvalue configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending, nonnegative.
    pub values: Vec<f64>,
    pub spec: EnsembleSpec,
    pub seed: u64,
    pub stream: u64,
}

impl Spectrum {
    pub fn trace(&self) -> f64 {
        compensated_sum(&self.values)
    }
}

fn compensated_sum(v: &[f64]) -> f64 {
    v.iter().copied().collect::<CompensatedSum>().value()
}

/// Reusable sampler holding the chi-square shapes of the bidiagonal model.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: EnsembleSpec,
    diag: Vec<Gamma<f64>>,
    sub: Vec<Gamma<f64>>,
}

impl Sampler {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        let spec = EnsembleSpec::new(spec.n, spec.m, spec.constraint)?;
        let n = spec.n;
        let gamma = |shape: f64| {
            Gamma::new(shape, 1.0).map_err(|e| domain("Sampler", format!("gamma shape {shape}: {e}")))
        };
        // d_i^2 ~ Gamma(M - i + 1), e_i^2 ~ Gamma(N - i), i counted from 1.
        let diag = (1..=n).map(|i| gamma(spec.m - i as f64 + 1.0)).collect::<Result<Vec<_>>>()?;
        let sub = (1..n).map(|i| gamma((n - i) as f64)).collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, diag, sub })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    /// Draw number `stream` under master `seed`.
    pub fn draw(&self, seed: u64, stream: u64) -> Result<Spectrum> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let values = match self.spec.constraint {
            Constraint::Free { scale } => {
                let mut v = self.unit_lue(&mut rng)?;
                for x in &mut v {
                    *x *= scale;
                }
                v
            }
            Constraint::Fixed { trace } => self.fixed(&mut rng, trace)?,
            Constraint::Bounded { trace } => {
                let mut v = self.fixed(&mut rng, 1.0)?;
                let u: f64 = rng.random::<f64>().powf(self.spec.n_alpha().recip());
                for x in &mut v {
                    *x *= u * trace;
                }
                cap_trace(&mut v, trace);
                v
            }
        };
        Ok(Spectrum { values, spec: self.spec, seed, stream })
    }

    // Eigenvalues of B B^T for the lower-bidiagonal Laguerre model at unit scale.
    fn unit_lue(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let n = self.spec.n;
        let d2: Vec<f64> = self.diag.iter().map(|g| g.sample(rng)).collect();
        let e2: Vec<f64> = self.sub.iter().map(|g| g.sample(rng)).collect();
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            diag.push(d2[i] + if i > 0 { e2[i - 1] } else { 0.0 });
            if i + 1 < n {
                off.push((d2[i] * e2[i]).sqrt());
            }
        }
        let mut ev = tridiag_eigenvalues(&diag, &off)?;
        for x in &mut ev {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        Ok(ev)
    }

    fn fixed(&self, rng: &mut ChaCha8Rng, trace: f64) -> Result<Vec<f64>> {
        if self.spec.n == 1 {
            // Consume the same variates as the general path for stream parity.
            let _ = self.unit_lue(rng)?;
            return Ok(vec![trace]);
        }
        loop {
            let mut v = self.unit_lue(rng)?;
            let total = compensated_sum(&v);
            if total > 0.0 {
                let f = trace / total;
                for x in &mut v {
                    *x *= f;
                }
                return Ok(v);
            }
        }
    }
}

fn cap_trace(v: &mut [f64], trace: f64) {
    let mut total = compensated_sum(v);
    while total > trace {
        let f = (trace / total) * (1.0 - f64::EPSILON);
        for x in v.iter_mut() {
            *x *= f;
        }
        total = compensated_sum(v);
    }
}

fn check_constraint(spec: &EnsembleSpec, want: &str) -> Result<()> {
    let ok = matches!(
        (spec.constraint, want),
        (Constraint::Free { .. }, "free") | (Constraint::Fixed { .. }, "fixed") | (Constraint::Bounded { .. }, "bounded")
    );
    if ok {
        Ok(())
    } else {
        Err(contract("sampler", format!("spec {:?} is not a {want}-trace ensemble", spec.constraint)))
    }
}

pub fn sample_lue(spec: &EnsembleSpec, seed: u64) -> Result<Spectrum> {
    check_constraint(spec, "free")?;
    Sampler::new(*spec)?.draw(seed, 0)
}

pub fn sample_ftlue(spec: &EnsembleSpec, seed: u64) -> Result<Spectrum> {
    check_constraint(spec, "fixed")?;
    Sampler::new(*spec)?.draw(seed, 0)
}

pub fn sample_btlue(spec: &EnsembleSpec, seed: u64) -> Result<Spectrum> {
    check_constraint(spec, "bounded")?;
    Sampler::new(*spec)?.draw(seed, 0)
}

/// Draws per block in [`sample_blocks`]; block boundaries never depend on
/// the thread count.
pub const BLOCK: usize = 2048;

/// Fold `draws` spectra into per-block accumulators, in parallel.
///
/// Block `b` visits draws `b * BLOCK ..` in order, and the accumulators are
/// returned in block order, so any sequential merge is thread-independent.
pub fn sample_blocks<A, M, F>(spec: &EnsembleSpec, seed: u64, draws: usize, make: M, visit: F) -> Result<Vec<A>>
where
    A: Send,
    M: Fn() -> A + Sync,
    F: Fn(&mut A, &Spectrum) + Sync,
{
    let sampler = Sampler::new(*spec)?;
    let blocks = draws.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = make();
            let end = ((b + 1) * BLOCK).min(draws);
            for i in b * BLOCK..end {
                let sp = sampler.draw(seed, i as u64)?;
                visit(&mut acc, &sp);
            }
            Ok(acc)
        })
        .collect()
}

/// All `draws` spectra, in stream order.
pub fn sample_batch(spec: &EnsembleSpec, seed: u64, draws: usize) -> Result<Vec<Spectrum>> {
    let sampler = Sampler::new(*spec)?;
    (0..draws as u64).into_par_iter().map(|i| sampler.draw(seed, i)).collect()
}

/// Von Neumann entropy `-sum x ln x` of a trace-one spectrum.
pub fn entropy(sp: &Spectrum) -> Result<f64> {
    match sp.spec.constraint {
        Constraint::Fixed { trace } if trace == 1.0 => Ok(entropy_of(&sp.values)),
        c => Err(contract("entropy", format!("needs a fixed trace of 1, got {c:?}"))),
    }
}

/// `-sum x ln x` over the given values, with `0 ln 0 = 0`.
pub fn entropy_of(values: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for &x in values {
        if x > 0.0 {
            s.add(-x * x.ln());
        }
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(n: usize, alpha: f64, c: Constraint) -> EnsembleSpec {
        EnsembleSpec::with_alpha(n, alpha, c).unwrap()
    }

    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn tridiag_examples() {
        assert_eq!(tridiag_eigenvalues(&[2.0], &[]).unwrap(), vec![2.0]);
        let ev = tridiag_eigenvalues(&[0.0, 0.0], &[1.0]).unwrap();
        assert_relative_eq!(ev[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-15);
        let ev = tridiag_eigenvalues(&[2.0; 3], &[1.0; 2]).unwrap();
        let s = 2f64.sqrt();
        for (a, b) in ev.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(3, 1.5, Constraint::Free { scale: 1.0 }).is_err());
        assert!(EnsembleSpec::new(3, 3.0, Constraint::Fixed { trace: 0.0 }).is_err());
        assert!(EnsembleSpec::new(0, 3.0, Constraint::Fixed { trace: 1.0 }).is_err());
        assert!(EnsembleSpec::new(3, 2.5, Constraint::Bounded { trace: 1.0 }).is_ok());
    }

    #[test]
    fn lue_first_moments() {
        let s1 = spec(1, 0.0, Constraint::Free { scale: 1.0 });
        let v: Vec<f64> = sample_batch(&s1, 7, 100_000).unwrap().iter().map(|s| s.values[0]).collect();
        let (m, se) = mean_and_se(&v);
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");

        let s2 = spec(2, 0.0, Constraint::Free { scale: 1.0 });
        let v: Vec<f64> = sample_batch(&s2, 8, 100_000).unwrap().iter().map(|s| s.trace()).collect();
        let (m, se) = mean_and_se(&v);
        assert!((m - 4.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn determinism() {
        for c in [Constraint::Free { scale: 0.3 }, Constraint::Fixed { trace: 1.0 }, Constraint::Bounded { trace: 2.0 }] {
            let sp = spec(6, 0.5, c);
            let a = Sampler::new(sp).unwrap().draw(99, 5).unwrap();
            let b = Sampler::new(sp).unwrap().draw(99, 5).unwrap();
            assert_eq!(a, b);
            let c = Sampler::new(sp).unwrap().draw(99, 6).unwrap();
            assert_ne!(a.values, c.values);
        }
        let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
        let sp = spec(5, 1.0, Constraint::Fixed { trace: 1.0 });
        let a = pool(1).install(|| sample_batch(&sp, 3, 5000).unwrap());
        let b = pool(4).install(|| sample_batch(&sp, 3, 5000).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn ftlue_trace_and_sorting() {
        let sp = spec(9, 2.0, Constraint::Fixed { trace: 3.5 });
        for s in sample_batch(&sp, 1, 2000).unwrap() {
            assert!((s.trace() - 3.5).abs() <= 1e-12 * 3.5);
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.values[0] >= 0.0);
        }
        let one = spec(1, 0.7, Constraint::Fixed { trace: 2.5 });
        assert_eq!(sample_ftlue(&one, 4).unwrap().values, vec![2.5]);
    }

    #[test]
    fn ftlue_two_by_two_marginal() {
        // Pooled eigenvalue density 3(2x-1)^2 on [0,1].
        let sp = spec(2, 0.0, Constraint::Fixed { trace: 1.0 });
        let acc = sample_blocks(&sp, 11, 1_000_000, Vec::new, |v: &mut Vec<f64>, s| v.push(s.values[0])).unwrap();
        let xs: Vec<f64> = acc.into_iter().flatten().collect();
        // the smaller eigenvalue has density 6(2x-1)^2 on [0, 1/2]
        let d = ks(xs, |x| ((2.0 * x - 1.0).powi(3) + 1.0).clamp(0.0, 1.0));
        assert!(d < 0.005, "KS {d}");
    }

    #[test]
    fn ftlue_global_law() {
        let n = 64;
        let sp = spec(n, 0.0, Constraint::Fixed { trace: n as f64 / 4.0 });
        let xs: Vec<f64> = sample_batch(&sp, 5, 100).unwrap().into_iter().flat_map(|s| s.values).collect();
        let d = ks(xs, crate::laguerre::mp_cdf);
        assert!(d < 0.03, "KS {d}");
    }

    #[test]
    fn btlue_laws() {
        let one = spec(1, 0.0, Constraint::Bounded { trace: 1.0 });
        let xs: Vec<f64> = sample_batch(&one, 2, 20_000).unwrap().into_iter().map(|s| s.values[0]).collect();
        assert!(ks(xs, |x| x.clamp(0.0, 1.0)) < 0.015);

        let sp = spec(4, 0.0, Constraint::Bounded { trace: 1.0 });
        let batch = sample_batch(&sp, 3, 100_000).unwrap();
        let t: Vec<f64> = batch.iter().map(|s| s.trace()).collect();
        assert!(batch.iter().all(|s| s.trace() <= 1.0));
        let (m, se) = mean_and_se(&t);
        assert!((m - 16.0 / 17.0).abs() < 3.0 * se);
        // trace/r has CDF u^{N_alpha}; 1e-3 two-sided critical value.
        let crit = ((2.0f64 / 1e-3).ln() / 2.0).sqrt() / (t.len() as f64).sqrt();
        assert!(ks(t, |u| u.clamp(0.0, 1.0).powf(16.0)) < crit);
    }

    #[test]
    fn btlue_matches_ftlue_globally() {
        let n = 64;
        let r = n as f64 / 4.0;
        let mut b: Vec<f64> = sample_batch(&spec(n, 0.0, Constraint::Bounded { trace: r }), 21, 100)
            .unwrap()
            .into_iter()
            .flat_map(|s| s.values)
            .collect();
        let mut f: Vec<f64> = sample_batch(&spec(n, 0.0, Constraint::Fixed { trace: r }), 22, 100)
            .unwrap()
            .into_iter()
            .flat_map(|s| s.values)
            .collect();
        b.sort_by(f64::total_cmp);
        f.sort_by(f64::total_cmp);
        let ecdf = |v: &[f64], x: f64| v.partition_point(|y| *y <= x) as f64 / v.len() as f64;
        let d = b.iter().chain(&f).map(|&x| (ecdf(&b, x) - ecdf(&f, x)).abs()).fold(0.0, f64::max);
        assert!(d < 0.03, "two-sample KS {d}");
    }

    #[test]
    fn scale_covariance() {
        let a = Sampler::new(spec(7, 1.0, Constraint::Free { scale: 0.5 })).unwrap();
        let b = Sampler::new(spec(7, 1.0, Constraint::Free { scale: 1.5 })).unwrap();
        for i in 0..200 {
            let x = a.draw(4, i).unwrap();
            let y = b.draw(4, i).unwrap();
            for (u, v) in x.values.iter().zip(&y.values) {
                assert!((3.0 * u - v).abs() <= 1e-12 * v.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn entropy_examples() {
        let sp = spec(4, 0.0, Constraint::Fixed { trace: 1.0 });
        let pure = Spectrum { values: vec![0.0, 0.0, 0.0, 1.0], spec: sp, seed: 0, stream: 0 };
        assert_eq!(entropy(&pure).unwrap(), 0.0);
        let mixed = Spectrum { values: vec![0.25; 4], ..pure.clone() };
        assert_relative_eq!(entropy(&mixed).unwrap(), 4f64.ln(), max_relative = 1e-15);
        let free = Spectrum { spec: spec(4, 0.0, Constraint::Free { scale: 1.0 }), ..pure };
        assert!(entropy(&free).is_err());
    }
}
