//! Regime scans over `t0`, gain maximization, Monte-Carlo RMSE baselines and
//! figure-reproduction data.
//!
//! Scans fix either the length scale (`x0` or `delta0`) or the prior width `W`
//! and sweep `t0 = W / x0`. Grid points are evaluated in parallel and written
//! back in grid order, so output is identical whatever the thread count.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    appendix_bound, constant_a, constant_a_prime, hpi_limit_from_overlap, main_lower_bound,
    uniform_closed_form, variance_bound, BoundKind, BoundResult,
};
use crate::error::{domain, Error, Result};
use crate::priors::{PriorDistribution, PriorShape};
use crate::quadrature::{golden_section_max, QuadratureConfig};

/// Which side of `t0 = W / length` is held fixed during a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// `x0` (or `delta0`) fixed; `W = t0 * length`.
    FixedLength(f64),
    /// `W` fixed; `length = W / t0`.
    FixedWidth(f64),
}

impl ScanAxis {
    fn validate(self) -> Result<()> {
        let v = match self {
            ScanAxis::FixedLength(v) | ScanAxis::FixedWidth(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            domain(format!("fixed scan parameter must be positive, got {v}"))
        }
    }

    /// `(W, length)` at this `t0`.
    pub fn resolve(self, t0: f64) -> (f64, f64) {
        match self {
            ScanAxis::FixedLength(l) => (t0 * l, l),
            ScanAxis::FixedWidth(w) => (w, w / t0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t0: f64,
    pub value: f64,
    pub err: f64,
    /// Prior standard deviation `DeltaX`.
    pub dx: f64,
    /// `DeltaX / value`.
    pub gain: f64,
}

/// Asymptotes of a scan as coefficients: `lpi = lpi_per_length * length`,
/// `hpi = hpi_per_width * W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotes {
    pub lpi_per_length: f64,
    pub hpi_per_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub prior: PriorShape,
    pub kind: BoundKind,
    pub axis: ScanAxis,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub asymptotes: Asymptotes,
    pub metadata: ScanMetadata,
}

/// Decimal rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// SHA-256 of the JSON form of a quadrature configuration.
pub fn config_hash(cfg: &QuadratureConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl ScanResult {
    pub const CSV_HEADER: [&'static str; 5] = ["t0", "value", "err", "dx", "gain"];

    /// `LPI` value at `t0` for this scan's axis.
    pub fn lpi_at(&self, t0: f64) -> f64 {
        let (_, length) = self.metadata.axis.resolve(t0);
        self.asymptotes.lpi_per_length * length
    }

    /// `HPI` value at `t0` for this scan's axis.
    pub fn hpi_at(&self, t0: f64) -> f64 {
        let (w, _) = self.metadata.axis.resolve(t0);
        self.asymptotes.hpi_per_width * w
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([r.t0, r.value, r.err, r.dx, r.gain].map(fmt_f64))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
        return domain(format!("invalid log grid [{lo}, {hi}] with {n} points"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || n == 0 {
        return domain(format!("invalid grid [{lo}, {hi}] with {n} points"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn evaluate_kind(
    kind: BoundKind,
    prior: &PriorDistribution,
    length: f64,
    cfg: &QuadratureConfig,
) -> Result<BoundResult> {
    // H (or dH) giving the requested x0 (or delta0)
    let scale = PI / (2.0 * length);
    match kind {
        BoundKind::MainQsl => main_lower_bound(prior, scale, cfg),
        BoundKind::AppendixQsl => appendix_bound(prior, scale, cfg),
        BoundKind::VarianceBhatta => variance_bound(prior, scale, cfg),
        BoundKind::UniformClosedForm => uniform_closed_form(prior.width() / length, scale, cfg),
        other => Err(Error::Unsupported(format!(
            "bound '{other}' cannot be scanned over t0"
        ))),
    }
}

fn check_scannable(shape: PriorShape, kind: BoundKind) -> Result<()> {
    match kind {
        BoundKind::MainQsl | BoundKind::AppendixQsl | BoundKind::VarianceBhatta => Ok(()),
        BoundKind::UniformClosedForm if shape == PriorShape::Uniform => Ok(()),
        BoundKind::UniformClosedForm => Err(Error::Unsupported(format!(
            "closed form exists only for the uniform prior, got {shape}"
        ))),
        other => Err(Error::Unsupported(format!(
            "bound '{other}' cannot be scanned over t0"
        ))),
    }
}

/// Bound for `shape` at one `t0`.
pub fn bound_at(
    shape: PriorShape,
    kind: BoundKind,
    t0: f64,
    axis: ScanAxis,
    cfg: &QuadratureConfig,
) -> Result<BoundResult> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return domain(format!("t0 must be positive, got {t0}"));
    }
    let (w, length) = axis.resolve(t0);
    evaluate_kind(kind, &shape.with_width(w)?, length, cfg)
}

/// Large-`t0` constant per unit length: `sqrt(A/2)`, or `sqrt(A'/2)` for the variance bound.
pub fn lpi_coefficient(kind: BoundKind, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(match kind {
        BoundKind::VarianceBhatta => (constant_a_prime() / 2.0).sqrt(),
        _ => (constant_a(cfg)?.value / 2.0).sqrt(),
    })
}

/// Evaluate `kind` for `shape` at every `t0` of the grid.
pub fn scan_t0(
    shape: PriorShape,
    kind: BoundKind,
    grid: &[f64],
    axis: ScanAxis,
    cfg: &QuadratureConfig,
) -> Result<ScanResult> {
    cfg.validate()?;
    axis.validate()?;
    check_scannable(shape, kind)?;
    if grid.is_empty() {
        return domain("t0 grid is empty");
    }
    if let Some(bad) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return domain(format!("t0 grid values must be positive, got {bad}"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let rows = grid
        .par_iter()
        .map(|&t0| {
            let r = bound_at(shape, kind, t0, axis, cfg)?;
            let (w, _) = axis.resolve(t0);
            let dx = shape.std_dev_per_width() * w;
            Ok(ScanRow {
                t0,
                value: r.value,
                err: r.err_estimate,
                dx,
                gain: if r.value > 0.0 {
                    dx / r.value
                } else {
                    f64::INFINITY
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let asymptotes = Asymptotes {
        lpi_per_length: lpi_coefficient(kind, cfg)?,
        hpi_per_width: hpi_limit_from_overlap(&shape.with_width(1.0)?, cfg)?.value,
    };
    Ok(ScanResult {
        rows,
        asymptotes,
        metadata: ScanMetadata {
            prior: shape,
            kind,
            axis,
            config_hash: config_hash(cfg),
        },
    })
}

/// Certified gain over the better of the two measurement-free benchmarks:
/// `min(DeltaX, LPI) / bound`.
///
/// `DeltaX` is what guessing from the prior achieves and `LPI` is the
/// Heisenberg-scaling benchmark; `DeltaX / bound` alone grows without limit
/// with `t0` because the bound saturates at `LPI`. Evaluated with `x0 = 1`
/// (the ratio depends on `t0` only).
pub fn benchmark_gain(
    shape: PriorShape,
    kind: BoundKind,
    t0: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let axis = ScanAxis::FixedLength(1.0);
    let r = bound_at(shape, kind, t0, axis, cfg)?;
    let dx = shape.std_dev_per_width() * t0;
    let lpi = lpi_coefficient(kind, cfg)?;
    Ok(dx.min(lpi) / r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxGain {
    pub gain: f64,
    pub t0: f64,
    /// The objective was flat; `t0` is the interval midpoint.
    pub flat: bool,
}

/// Golden-section maximization of [`benchmark_gain`] over `interval`, to `1e-5` in `t0`.
pub fn max_gain(
    shape: PriorShape,
    kind: BoundKind,
    interval: (f64, f64),
    cfg: &QuadratureConfig,
) -> Result<MaxGain> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && lo < hi && hi <= 10.0) {
        return domain(format!(
            "search interval must lie within (0, 10], got [{lo}, {hi}]"
        ));
    }
    check_scannable(shape, kind)?;
    let m = golden_section_max(|t0| benchmark_gain(shape, kind, t0, cfg), lo, hi, 1e-5)?;
    Ok(MaxGain {
        gain: m.value,
        t0: m.x,
        flat: m.flat,
    })
}

/// Estimator `y -> X(y)` for the no-measurement baselines; the outcome channel
/// is the identity, `y = x`.
pub enum EstimatorSpec {
    /// Always answers the prior mean; RMSE equals `DeltaX`.
    ConstantMean,
    /// Answers an independent draw from the prior; RMSE equals `sqrt(2) DeltaX`.
    RandomGuessFromPrior,
    Custom(Box<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::ConstantMean => f.write_str("ConstantMean"),
            EstimatorSpec::RandomGuessFromPrior => f.write_str("RandomGuessFromPrior"),
            EstimatorSpec::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseEstimate {
    pub rmse: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of `sqrt(E[(X - x)^2])` with `x ~ p(x)`.
pub fn weighted_rmse<R: Rng + ?Sized>(
    prior: &PriorDistribution,
    estimator: &EstimatorSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<RmseEstimate> {
    if n_samples < 1000 {
        return domain(format!("need at least 1000 samples, got {n_samples}"));
    }
    let mean = prior.mean();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let x = prior.sample(rng);
        let guess = match estimator {
            EstimatorSpec::ConstantMean => mean,
            EstimatorSpec::RandomGuessFromPrior => prior.sample(rng),
            EstimatorSpec::Custom(f) => f(x),
        };
        let e = (guess - x) * (guess - x);
        sum += e;
        sum_sq += e * e;
    }
    let n = n_samples as f64;
    let mse = sum / n;
    let var = (sum_sq / n - mse * mse).max(0.0) * n / (n - 1.0);
    let rmse = mse.sqrt();
    let stderr = if rmse > 0.0 {
        (var / n).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    Ok(RmseEstimate { rmse, stderr })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1,
    Fig2a,
    Fig2b,
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" => Ok(FigureId::Fig1),
            "fig2a" => Ok(FigureId::Fig2a),
            "fig2b" => Ok(FigureId::Fig2b),
            other => Err(Error::Domain(format!("unknown figure '{other}'"))),
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
        })
    }
}

/// One column per curve, `x0 = 1`, plus a max-gain marker row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub id: FigureId,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// The marker in the same columns as `rows`.
    pub marker: Vec<f64>,
    pub max_gain: MaxGain,
}

/// Default `t0` grid for figures and scans.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 200).expect("static grid")
}

impl FigureId {
    fn shape(self) -> PriorShape {
        match self {
            FigureId::Fig1 => PriorShape::Uniform,
            FigureId::Fig2a => PriorShape::Gaussian,
            FigureId::Fig2b => PriorShape::Bimodal,
        }
    }

    pub fn columns(self) -> Vec<String> {
        let cols: &[&str] = match self {
            FigureId::Fig1 => &["t0", "bound", "prior_stddev", "lpi_benchmark"],
            FigureId::Fig2a => &[
                "t0",
                "bound",
                "appendix_bound",
                "prior_stddev",
                "lpi_benchmark",
            ],
            FigureId::Fig2b => &[
                "t0",
                "bound",
                "prior_stddev",
                "hpi_asymptote",
                "lpi_benchmark",
            ],
        };
        cols.iter().map(|c| c.to_string()).collect()
    }
}

fn figure_row(
    id: FigureId,
    t0: f64,
    lpi: f64,
    hpi_per_width: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let shape = id.shape();
    let axis = ScanAxis::FixedLength(1.0);
    let main = bound_at(shape, BoundKind::MainQsl, t0, axis, cfg)?.value;
    let dx = shape.std_dev_per_width() * t0;
    Ok(match id {
        FigureId::Fig1 => vec![t0, main, dx, lpi],
        FigureId::Fig2a => {
            let app = bound_at(shape, BoundKind::AppendixQsl, t0, axis, cfg)?.value;
            vec![t0, main, app, dx, lpi]
        }
        FigureId::Fig2b => vec![t0, main, dx, hpi_per_width * t0, lpi],
    })
}

/// Curves on an explicit grid.
pub fn figure_data_on(id: FigureId, grid: &[f64], cfg: &QuadratureConfig) -> Result<FigureData> {
    cfg.validate()?;
    let shape = id.shape();
    let lpi = lpi_coefficient(BoundKind::MainQsl, cfg)?;
    let hpi = hpi_limit_from_overlap(&shape.with_width(1.0)?, cfg)?.value;
    let rows = grid
        .par_iter()
        .map(|&t0| figure_row(id, t0, lpi, hpi, cfg))
        .collect::<Result<Vec<_>>>()?;
    let best = max_gain(shape, BoundKind::MainQsl, (0.01, 5.0), cfg)?;
    let marker = figure_row(id, best.t0, lpi, hpi, cfg)?;
    Ok(FigureData {
        id,
        columns: id.columns(),
        rows,
        marker,
        max_gain: best,
    })
}

/// Curves on the default 200-point grid over `[1e-2, 1e2]`.
pub fn figure_data(id: FigureId, cfg: &QuadratureConfig) -> Result<FigureData> {
    figure_data_on(id, &default_grid(), cfg)
}

impl FigureData {
    /// CSV with a leading `series` column: `curve` rows, then one `max_gain` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["series".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec!["curve".to_string()];
            rec.extend(row.iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        let mut rec = vec!["max_gain".to_string()];
        rec.extend(self.marker.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
