//! Subcommand semantics on validated settings.

use std::path::PathBuf;

use schmidt_core::constrained::{ConstrainedDensity, Route, MAX_FOURIER_N};
use schmidt_core::ensembles::{entropy_of, sample_batch, Constraint, EnsembleSpec};
use schmidt_core::laguerre::{kernel_cd_real, mp_density, KernelContext};
use schmidt_core::stats::{convergence_ladder, default_window, page_average_sampled, Regime};
use schmidt_core::verify::{run_criterion, CRITERIA};

use crate::config::{Grid, Settings};
use crate::table::{Cell, Format, Metadata, ResultTable};
use crate::CliError;

pub const COMMANDS: &[&str] = &["sample", "density", "kernel", "converge", "verify", "entropy"];

const ENSEMBLE: &[&str] = &["n", "m", "alpha", "constraint", "scale", "trace"];
const OUTPUT: &[&str] = &["out", "format", "command"];

/// A finished run: the table plus, for `verify`, the failures to report.
pub struct Completed {
    pub table: ResultTable,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub failure: Option<String>,
}

fn allowed(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

pub fn run(command: &str, s: &Settings) -> Result<Completed, CliError> {
    let out = s.raw("out").filter(|p| *p != "-").map(PathBuf::from);
    let format = s.get::<Format>("format")?.unwrap_or(Format::Csv);
    let mut failure = None;
    let table = match command {
        "sample" => sample(s)?,
        "density" => density(s)?,
        "kernel" => kernel(s)?,
        "converge" => converge(s)?,
        "verify" => {
            let (t, f) = verify(s)?;
            failure = f;
            t
        }
        "entropy" => entropy(s)?,
        other => {
            return Err(CliError::config("command", format!("unknown command {other:?}; expected one of {COMMANDS:?}")))
        }
    };
    Ok(Completed { table, out, format, failure })
}

fn metadata(command: &str, s: &Settings, seed: Option<u64>) -> Metadata {
    Metadata { command: s.echo(command), seed, version: env!("CARGO_PKG_VERSION"), notes: Vec::new() }
}

fn ensemble(s: &Settings) -> Result<EnsembleSpec, CliError> {
    let n = s.positive_int("n")?.ok_or_else(|| CliError::config("n", "required"))?;
    let alpha = match (s.real("m", None)?, s.real("alpha", Some(-1.0))?) {
        (Some(_), Some(_)) => return Err(CliError::config("alpha", "give either m or alpha, not both")),
        (Some(m), None) => {
            if m - n as f64 <= -1.0 {
                return Err(CliError::config("m", format!("m - n must exceed -1, got {}", m - n as f64)));
            }
            m - n as f64
        }
        (None, a) => a.unwrap_or(0.0),
    };
    let kind = s.raw("constraint").unwrap_or("free");
    let scale = s.real("scale", Some(0.0))?;
    let trace = s.real("trace", Some(0.0))?;
    let constraint = match kind {
        "free" => {
            if trace.is_some() {
                return Err(CliError::config("trace", "only applies to fixed or bounded constraints"));
            }
            Constraint::Free { scale: scale.unwrap_or(1.0) }
        }
        "fixed" | "bounded" => {
            if scale.is_some() {
                return Err(CliError::config("scale", "only applies to the free ensemble"));
            }
            let trace = trace.unwrap_or(1.0);
            if kind == "fixed" { Constraint::Fixed { trace } } else { Constraint::Bounded { trace } }
        }
        other => return Err(CliError::config("constraint", format!("expected free, fixed or bounded, got {other:?}"))),
    };
    Ok(EnsembleSpec::with_alpha(n, alpha, constraint)?)
}

fn seed(s: &Settings) -> Result<u64, CliError> {
    s.get::<u64>("seed")?.ok_or_else(|| CliError::config("seed", "required for sample-based commands"))
}

fn fmt_real(v: f64) -> Cell {
    Cell::Real(v)
}

fn sample(s: &Settings) -> Result<ResultTable, CliError> {
    s.restrict("sample", &allowed(&[ENSEMBLE, &["seed", "draws"], OUTPUT]))?;
    let spec = ensemble(s)?;
    let seed = seed(s)?;
    let draws = s.positive_int("draws")?.ok_or_else(|| CliError::config("draws", "required"))?;
    let mut columns: Vec<String> = (1..=spec.n).map(|i| format!("x_{i}")).collect();
    columns.push("trace".into());
    columns.push("entropy".into());
    let mut meta = metadata("sample", s, Some(seed));
    meta.notes.push("entropy is -sum p ln p of the spectrum divided by its trace".into());
    let mut t = ResultTable::new(meta, columns);
    for sp in sample_batch(&spec, seed, draws)? {
        let tr = sp.trace();
        let p: Vec<f64> = sp.values.iter().map(|x| x / tr).collect();
        let mut row: Vec<Cell> = sp.values.iter().map(|&x| fmt_real(x)).collect();
        row.push(fmt_real(tr));
        row.push(fmt_real(entropy_of(&p)));
        t.push(row);
    }
    Ok(t)
}

// One-point density predicted by the global law: N psi(x / c) / c, where c
// maps the unit-edge law onto this ensemble's spectrum.
fn mp_prediction(spec: &EnsembleSpec, x: f64) -> f64 {
    let nf = spec.n as f64;
    let c = match spec.constraint {
        Constraint::Free { scale } => 4.0 * nf * scale,
        Constraint::Fixed { trace } | Constraint::Bounded { trace } => 4.0 * trace / (nf + spec.alpha()),
    };
    nf * mp_density(x / c) / c
}

fn density(s: &Settings) -> Result<ResultTable, CliError> {
    s.restrict("density", &allowed(&[ENSEMBLE, &["seed", "draws", "grid"], OUTPUT]))?;
    let spec = ensemble(s)?;
    let grid = Grid::from_settings(s)?.ok_or_else(|| CliError::config("grid", "required"))?.values();
    let draws = s.positive_int("draws")?;
    let seed = match draws {
        Some(_) => Some(seed(s)?),
        None => s.get::<u64>("seed")?,
    };
    let mut columns = vec!["x".to_string()];
    let mut series: Vec<Vec<f64>> = Vec::new();
    match spec.constraint {
        Constraint::Fixed { .. } => {
            columns.push("exact_series".into());
            series.push(ConstrainedDensity::exact(&spec, &grid, Route::Series)?.values);
            if spec.n <= MAX_FOURIER_N {
                columns.push("exact_fourier".into());
                series.push(ConstrainedDensity::exact(&spec, &grid, Route::Fourier)?.values);
            }
        }
        Constraint::Bounded { .. } => {
            columns.push("exact_radial".into());
            series.push(ConstrainedDensity::exact(&spec, &grid, Route::Radial)?.values);
        }
        Constraint::Free { scale } => {
            columns.push("exact_kernel".into());
            let ctx = KernelContext::with_real_scale(spec.n, spec.alpha(), scale)?;
            let v = grid
                .iter()
                .map(|&x| if x < 0.0 { Ok(0.0) } else { kernel_cd_real(&ctx, x, x).map(|k| k.re) })
                .collect::<Result<Vec<f64>, _>>()?;
            series.push(v);
        }
    }
    if let (Some(d), Some(seed)) = (draws, seed) {
        columns.push("monte_carlo".into());
        series.push(ConstrainedDensity::monte_carlo(&spec, &grid, seed, d)?.values);
    }
    columns.push("mp_density".into());
    series.push(grid.iter().map(|&x| mp_prediction(&spec, x)).collect());
    let mut meta = metadata("density", s, seed);
    if columns.iter().any(|c| c == "monte_carlo") {
        meta.notes.push("monte_carlo averages over the grid cell centred on x, clipped to the support".into());
    }
    if columns.iter().any(|c| c == "exact_fourier") {
        meta.notes.push("exact_fourier repeats the series value at x <= 0 and x >= r, where inversion is undefined".into());
    }
    let mut t = ResultTable::new(meta, columns);
    for (i, &x) in grid.iter().enumerate() {
        let mut row = vec![fmt_real(x)];
        row.extend(series.iter().map(|c| fmt_real(c[i])));
        t.push(row);
    }
    Ok(t)
}

fn kernel(s: &Settings) -> Result<ResultTable, CliError> {
    s.restrict("kernel", &allowed(&[&["n", "m", "alpha", "scale", "grid", "y"], OUTPUT]))?;
    let spec = ensemble(s)?;
    let Constraint::Free { scale } = spec.constraint else { unreachable!("kernel accepts no trace") };
    let grid = Grid::from_settings(s)?.ok_or_else(|| CliError::config("grid", "required"))?.values();
    let y = s.real("y", None)?;
    let ctx = KernelContext::with_real_scale(spec.n, spec.alpha(), scale)?;
    let mut t = ResultTable::new(metadata("kernel", s, None), vec!["x".into(), "y".into(), "kernel".into()]);
    for x in grid {
        let yy = y.unwrap_or(x);
        if x < 0.0 || yy < 0.0 {
            return Err(CliError::config(if yy < 0.0 { "y" } else { "grid" }, "kernel arguments must be nonnegative"));
        }
        t.push(vec![fmt_real(x), fmt_real(yy), fmt_real(kernel_cd_real(&ctx, x, yy)?.re)]);
    }
    Ok(t)
}

fn converge(s: &Settings) -> Result<ResultTable, CliError> {
    s.restrict("converge", &allowed(&[&["regime", "u", "alpha", "ladder", "grid"], OUTPUT]))?;
    let alpha = s.real("alpha", Some(-1.0))?.unwrap_or(0.0);
    let regime = match s.raw("regime") {
        Some("bulk") => Regime::Bulk(s.real("u", None)?.ok_or_else(|| CliError::config("u", "required for bulk"))?),
        Some("soft") => Regime::Soft,
        Some("hard") => Regime::Hard,
        Some(other) => return Err(CliError::config("regime", format!("expected bulk, soft or hard, got {other:?}"))),
        None => return Err(CliError::config("regime", "required")),
    };
    if !matches!(regime, Regime::Bulk(_)) && s.raw("u").is_some() {
        return Err(CliError::config("u", "only applies to the bulk regime"));
    }
    if let Regime::Bulk(u) = regime {
        if !(u > 0.0 && u < 1.0) {
            return Err(CliError::config("u", format!("must lie in (0, 1), got {u}")));
        }
    }
    let ladder: Vec<usize> = s.list("ladder")?.unwrap_or_else(|| vec![50, 100, 200]);
    if ladder.iter().any(|&n| n == 0) {
        return Err(CliError::config("ladder", "entries must be positive"));
    }
    let window = match Grid::from_settings(s)? {
        Some(g) => g.values(),
        None => default_window(regime),
    };
    let rows = convergence_ladder(regime, &ladder, alpha, &window)?;
    let mut meta = metadata("converge", s, None);
    meta.notes.push(format!("regime {regime}, alpha {alpha}"));
    if let Some(r) = rows.first() {
        meta.notes.push(format!("window {}", r.window));
    }
    let mut t = ResultTable::new(meta, vec!["n".into(), "sup_error".into(), "points_checked".into()]);
    for r in rows {
        t.push(vec![Cell::Int(r.n as i64), fmt_real(r.sup_error), Cell::Int(r.points_checked as i64)]);
    }
    Ok(t)
}

fn verify(s: &Settings) -> Result<(ResultTable, Option<String>), CliError> {
    s.restrict("verify", &allowed(&[&["criteria"], OUTPUT]))?;
    let ids: Vec<u8> = s.list("criteria")?.unwrap_or_else(|| (1..=CRITERIA).collect());
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA) {
        return Err(CliError::config("criteria", format!("no criterion {bad}; valid ids are 1..={CRITERIA}")));
    }
    let mut t = ResultTable::new(metadata("verify", s, None), vec!["criterion".into(), "passed".into()]);
    let mut failed = Vec::new();
    for id in ids {
        let r = run_criterion(id);
        eprintln!("[{}] {:>2} {} ({:.1}s): {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.title, r.seconds, r.detail);
        if !r.passed {
            failed.push(format!("criterion {id} ({})", r.title));
        }
        t.push(vec![Cell::Int(id as i64), Cell::Int(r.passed as i64)]);
    }
    let failure = (!failed.is_empty()).then(|| format!("failed: {}", failed.join(", ")));
    Ok((t, failure))
}

fn entropy(s: &Settings) -> Result<ResultTable, CliError> {
    s.restrict("entropy", &allowed(&[&["n", "m", "alpha", "seed", "draws"], OUTPUT]))?;
    let free = ensemble(s)?;
    let spec = EnsembleSpec::new(free.n, free.m, Constraint::Fixed { trace: 1.0 })?;
    let seed = seed(s)?;
    let draws = s.positive_int("draws")?.ok_or_else(|| CliError::config("draws", "required"))?;
    let r = page_average_sampled(&spec, seed, draws)?;
    let mut columns: Vec<String> =
        ["n", "m", "draws", "mean", "std_error", "approximation"].iter().map(|c| c.to_string()).collect();
    let mut row = vec![
        Cell::Int(spec.n as i64),
        fmt_real(spec.m),
        Cell::Int(draws as i64),
        fmt_real(r.mean),
        fmt_real(r.std_error),
        fmt_real(r.approximation),
    ];
    if let Some(e) = r.exact {
        columns.push("exact".into());
        row.push(fmt_real(e));
    }
    let mut t = ResultTable::new(metadata("entropy", s, Some(seed)), columns);
    t.push(row);
    Ok(t)
}
