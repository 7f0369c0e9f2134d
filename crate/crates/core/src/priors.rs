//! Prior densities and the overlap function `E(z) = int min[p(x), p(x+z)] dx`.
//!
//! Every prior carries a width `W` that sets its uncertainty scale:
//!
//! | family          | `W`                         |
//! |-----------------|-----------------------------|
//! | uniform         | support width               |
//! | gaussian        | standard deviation          |
//! | bimodal blocks  | construction width          |
//! | triangular      | support width `b - a`       |
//! | tabulated       | standard deviation          |
//!
//! The two-block bimodal prior has blocks of width `W/2` and height `1/W`
//! centred at `+-W/2`, i.e. support `[-3W/4, -W/4] U [W/4, 3W/4]`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{domain, Error, Result};
use crate::quadrature::{find_root_bisect, integrate, Integral, QuadratureConfig};
use crate::table::read_two_columns;

/// Piecewise-linear density through `(x_i, p_i)`, zero outside `[x_0, x_n]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedDensity {
    x: Vec<f64>,
    p: Vec<f64>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl TabulatedDensity {
    /// Validates and renormalizes to unit mass.
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if x.len() != p.len() || x.len() < 2 {
            return Err(Error::InvalidData(
                "tabulated prior needs at least two (x, density) rows".into(),
            ));
        }
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "tabulated prior has non-finite entries".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(
                "tabulated prior x values must be strictly increasing".into(),
            ));
        }
        if p.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidData(
                "tabulated density must be nonnegative".into(),
            ));
        }
        let mass: f64 = x
            .windows(2)
            .zip(p.windows(2))
            .map(|(xs, ps)| 0.5 * (ps[0] + ps[1]) * (xs[1] - xs[0]))
            .sum();
        if !(mass > 0.0) {
            return Err(Error::Domain("tabulated density has zero mass".into()));
        }
        let p: Vec<f64> = p.into_iter().map(|v| v / mass).collect();
        let mut t = Self {
            x,
            p,
            cum: Vec::new(),
        };
        t.rebuild_cumulative();
        Ok(t)
    }

    fn rebuild_cumulative(&mut self) {
        let mut cum = Vec::with_capacity(self.x.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for i in 0..self.x.len() - 1 {
            acc += 0.5 * (self.p[i] + self.p[i + 1]) * (self.x[i + 1] - self.x[i]);
            cum.push(acc);
        }
        self.cum = cum;
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn densities(&self) -> &[f64] {
        &self.p
    }

    fn segment(&self, x: f64) -> usize {
        (self.x.partition_point(|&node| node <= x).max(1) - 1).min(self.x.len() - 2)
    }

    fn pdf(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x < self.x[0] || x > self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(x);
        let w = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.p[i] + w * (self.p[i + 1] - self.p[i])
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return 0.0;
        }
        if x >= self.x[n - 1] {
            return 1.0;
        }
        let i = self.segment(x);
        let d = x - self.x[i];
        let slope = (self.p[i + 1] - self.p[i]) / (self.x[i + 1] - self.x[i]);
        (self.cum[i] + self.p[i] * d + 0.5 * slope * d * d).clamp(0.0, 1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        let n = self.x.len();
        let i = (self.cum.partition_point(|&c| c <= u).max(1) - 1).min(n - 2);
        let r = (u - self.cum[i]).max(0.0);
        let p0 = self.p[i];
        let slope = (self.p[i + 1] - p0) / (self.x[i + 1] - self.x[i]);
        // root of p0 d + slope d^2 / 2 = r in the cancellation-free form
        let disc = (p0 * p0 + 2.0 * slope * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let d = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.x[i] + d).clamp(self.x[i], self.x[i + 1])
    }

    /// Index of the maximum and whether the density rises then falls around it.
    fn peak(&self) -> (usize, bool) {
        let mut top = 0;
        for (i, &v) in self.p.iter().enumerate() {
            if v > self.p[top] {
                top = i;
            }
        }
        let rises = self.p[..=top].windows(2).all(|w| w[1] >= w[0]);
        let falls = self.p[top..].windows(2).all(|w| w[1] <= w[0]);
        (top, rises && falls)
    }

    fn peak_is_plateau(&self) -> bool {
        let (top, _) = self.peak();
        let v = self.p[top];
        (top > 0 && self.p[top - 1] == v) || (top + 1 < self.p.len() && self.p[top + 1] == v)
    }
}

/// Shape parameters of a prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorFamily {
    Uniform { center: f64, width: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    BimodalTwoBlock { width: f64 },
    TriangularAsymmetric { lower: f64, upper: f64, mode: f64 },
    Tabulated(TabulatedDensity),
}

impl PriorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PriorFamily::Uniform { .. } => "uniform",
            PriorFamily::Gaussian { .. } => "gaussian",
            PriorFamily::BimodalTwoBlock { .. } => "bimodal",
            PriorFamily::TriangularAsymmetric { .. } => "triangular",
            PriorFamily::Tabulated(_) => "tabulated",
        }
    }
}

/// Mean, variance and standard deviation of a prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
}

/// An immutable, normalized prior density `p(x)` on the real line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorDistribution {
    family: PriorFamily,
    width: f64,
    mean: f64,
    variance: f64,
    single_mode: bool,
    breakpoints: Vec<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {v}"))
    }
}

impl PriorDistribution {
    pub fn uniform(center: f64, width: f64) -> Result<Self> {
        finite("center", center)?;
        positive("width W", width)?;
        Ok(Self {
            family: PriorFamily::Uniform { center, width },
            width,
            mean: center,
            variance: width * width / 12.0,
            single_mode: true,
            breakpoints: vec![center - 0.5 * width, center + 0.5 * width],
        })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("standard deviation", std_dev)?;
        Ok(Self {
            family: PriorFamily::Gaussian { mean, std_dev },
            width: std_dev,
            mean,
            variance: std_dev * std_dev,
            single_mode: true,
            breakpoints: vec![mean],
        })
    }

    pub fn bimodal_two_block(width: f64) -> Result<Self> {
        positive("width W", width)?;
        let q = 0.25 * width;
        Ok(Self {
            family: PriorFamily::BimodalTwoBlock { width },
            width,
            mean: 0.0,
            variance: 13.0 * width * width / 48.0,
            single_mode: false,
            breakpoints: vec![-3.0 * q, -q, q, 3.0 * q],
        })
    }

    pub fn triangular(lower: f64, upper: f64, mode: f64) -> Result<Self> {
        finite("lower", lower)?;
        finite("upper", upper)?;
        finite("mode", mode)?;
        if !(lower < mode && mode < upper) {
            return domain(format!(
                "triangular prior needs lower < mode < upper, got {lower}, {mode}, {upper}"
            ));
        }
        let (a, b, m) = (lower, upper, mode);
        Ok(Self {
            family: PriorFamily::TriangularAsymmetric { lower, upper, mode },
            width: b - a,
            mean: (a + b + m) / 3.0,
            variance: (a * a + b * b + m * m - a * b - a * m - b * m) / 18.0,
            single_mode: true,
            breakpoints: vec![a, m, b],
        })
    }

    pub fn tabulated(x: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let table = TabulatedDensity::new(x, density)?;
        let (_, unimodal) = table.peak();
        let breakpoints = table.x.clone();
        let cfg = QuadratureConfig::default().with_breakpoints(breakpoints.clone());
        let (lo, hi) = (table.x[0], table.x[table.x.len() - 1]);
        let mean = integrate(|x| x * table.pdf(x), lo, hi, &cfg)?.value;
        let variance = integrate(|x| (x - mean).powi(2) * table.pdf(x), lo, hi, &cfg)?
            .value
            .max(0.0);
        if !(variance > 0.0) {
            return domain("tabulated prior has zero variance");
        }
        Ok(Self {
            family: PriorFamily::Tabulated(table),
            width: variance.sqrt(),
            mean,
            variance,
            single_mode: unimodal,
            breakpoints,
        })
    }

    /// Two-column `x,density` CSV, header optional, strictly increasing `x`.
    pub fn tabulated_from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let (x, p) = read_two_columns(reader)?;
        Self::tabulated(x, p)
    }

    pub fn tabulated_from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::tabulated_from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn family(&self) -> &PriorFamily {
        &self.family
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// True when the density has a single local maximum (a flat top counts as one).
    pub fn is_single_mode(&self) -> bool {
        self.single_mode
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.mean,
            variance: self.variance,
            std_dev: self.std_dev(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.family {
            PriorFamily::Uniform { center, width } => {
                if (x - center).abs() <= 0.5 * width {
                    1.0 / width
                } else {
                    0.0
                }
            }
            PriorFamily::Gaussian { mean, std_dev } => {
                let u = (x - mean) / std_dev;
                (-0.5 * u * u).exp() / (std_dev * (2.0 * PI).sqrt())
            }
            PriorFamily::BimodalTwoBlock { width } => {
                let r = x.abs();
                if r >= 0.25 * width && r <= 0.75 * width {
                    1.0 / width
                } else {
                    0.0
                }
            }
            PriorFamily::TriangularAsymmetric {
                lower: a,
                upper: b,
                mode: m,
            } => {
                let (a, b, m) = (*a, *b, *m);
                if x <= a || x >= b {
                    0.0
                } else if x <= m {
                    2.0 * (x - a) / ((b - a) * (m - a))
                } else {
                    2.0 * (b - x) / ((b - a) * (b - m))
                }
            }
            PriorFamily::Tabulated(t) => t.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.family {
            PriorFamily::Uniform { center, width } => ((x - center) / width + 0.5).clamp(0.0, 1.0),
            PriorFamily::Gaussian { mean, std_dev } => 0.5 * erfc(-(x - mean) / (std_dev * SQRT_2)),
            PriorFamily::BimodalTwoBlock { width } => {
                let w = *width;
                let block = |lo: f64, v: f64| ((v - lo) / w).clamp(0.0, 0.5);
                block(-0.75 * w, x) + block(0.25 * w, x)
            }
            PriorFamily::TriangularAsymmetric {
                lower: a,
                upper: b,
                mode: m,
            } => {
                let (a, b, m) = (*a, *b, *m);
                if x <= a {
                    0.0
                } else if x >= b {
                    1.0
                } else if x <= m {
                    (x - a).powi(2) / ((b - a) * (m - a))
                } else {
                    1.0 - (b - x).powi(2) / ((b - a) * (b - m))
                }
            }
            PriorFamily::Tabulated(t) => t.cdf(x),
        }
    }

    /// Density and cumulative probability at `x`.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        finite("x", x)?;
        Ok((self.pdf(x), self.cdf(x)))
    }

    /// Inverse cdf for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("quantile level must lie in (0, 1), got {u}"));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        match &self.family {
            PriorFamily::Uniform { center, width } => center + (u - 0.5) * width,
            PriorFamily::Gaussian { mean, std_dev } => mean - std_dev * SQRT_2 * erfc_inv(2.0 * u),
            PriorFamily::BimodalTwoBlock { width } => {
                if u < 0.5 {
                    -0.75 * width + u * width
                } else {
                    0.25 * width + (u - 0.5) * width
                }
            }
            PriorFamily::TriangularAsymmetric {
                lower: a,
                upper: b,
                mode: m,
            } => {
                let (a, b, m) = (*a, *b, *m);
                if u < (m - a) / (b - a) {
                    a + (u * (b - a) * (m - a)).sqrt()
                } else {
                    b - ((1.0 - u) * (b - a) * (b - m)).sqrt()
                }
            }
            PriorFamily::Tabulated(t) => t.quantile(u),
        }
    }

    /// Draws one variate by inverse-cdf sampling from the caller's generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile_unchecked(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    /// Interval holding the whole mass, or `mean +- cutoff * std_dev` for the Gaussian.
    pub fn support(&self, cfg: &QuadratureConfig) -> (f64, f64) {
        match &self.family {
            PriorFamily::Uniform { center, width } => (center - 0.5 * width, center + 0.5 * width),
            PriorFamily::Gaussian { mean, std_dev } => {
                let r = cfg.improper_cutoff_sigmas * std_dev;
                (mean - r, mean + r)
            }
            PriorFamily::BimodalTwoBlock { width } => (-0.75 * width, 0.75 * width),
            PriorFamily::TriangularAsymmetric { lower, upper, .. } => (*lower, *upper),
            PriorFamily::Tabulated(t) => (t.x[0], t.x[t.x.len() - 1]),
        }
    }

    /// Separation beyond which `E(z)` vanishes (to within the truncation).
    pub fn overlap_reach(&self, cfg: &QuadratureConfig) -> f64 {
        let (lo, hi) = self.support(cfg);
        hi - lo
    }

    /// Separations at which `E(z)` is not smooth, plus scale hints for smooth
    /// families. Used to split integrals over `z`.
    pub fn overlap_kinks(&self, cfg: &QuadratureConfig) -> Vec<f64> {
        let mut k = match &self.family {
            PriorFamily::Uniform { width, .. } => vec![*width],
            PriorFamily::Gaussian { std_dev, .. } => [0.5, 1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|c| c * std_dev)
                .collect(),
            PriorFamily::BimodalTwoBlock { width } => vec![0.5 * width, *width, 1.5 * width],
            PriorFamily::TriangularAsymmetric {
                lower: a,
                upper: b,
                mode: m,
            } => vec![m - a, b - m],
            PriorFamily::Tabulated(_) => Vec::new(),
        };
        k.push(self.overlap_reach(cfg));
        k
    }

    /// Location of the maximum for single-mode priors (centre of a flat top).
    pub fn mode(&self) -> Option<f64> {
        if !self.single_mode {
            return None;
        }
        match &self.family {
            PriorFamily::Uniform { center, .. } => Some(*center),
            PriorFamily::Gaussian { mean, .. } => Some(*mean),
            PriorFamily::TriangularAsymmetric { mode, .. } => Some(*mode),
            PriorFamily::BimodalTwoBlock { .. } => None,
            PriorFamily::Tabulated(t) => {
                let (top, _) = t.peak();
                let v = t.p[top];
                let last = (top..t.p.len())
                    .take_while(|&i| t.p[i] == v)
                    .last()
                    .unwrap_or(top);
                Some(0.5 * (t.x[top] + t.x[last]))
            }
        }
    }

    fn has_flat_top(&self) -> bool {
        match &self.family {
            PriorFamily::Uniform { .. } => true,
            PriorFamily::Tabulated(t) => t.peak_is_plateau(),
            _ => false,
        }
    }

    /// Whether [`overlap`](Self::overlap) is exact rather than a quadrature.
    pub fn has_closed_form_overlap(&self) -> bool {
        matches!(
            self.family,
            PriorFamily::Uniform { .. }
                | PriorFamily::Gaussian { .. }
                | PriorFamily::BimodalTwoBlock { .. }
        )
    }

    /// `E(z)`, using closed forms for the uniform, Gaussian and bimodal
    /// families and quadrature otherwise.
    pub fn overlap(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
        if !(z >= 0.0 && z.is_finite()) {
            return domain(format!("separation z must be finite and >= 0, got {z}"));
        }
        if z == 0.0 {
            return Ok(1.0);
        }
        let e = match &self.family {
            PriorFamily::Uniform { width, .. } => (1.0 - z / width).max(0.0),
            PriorFamily::Gaussian { std_dev, .. } => erfc(z / (2.0 * SQRT_2 * std_dev)),
            PriorFamily::BimodalTwoBlock { width } => {
                let w = *width;
                (2.0 * (0.5 * w - z).max(0.0) + (0.5 * w - (z - w).abs()).max(0.0)) / w
            }
            _ => self.overlap_by_quadrature(z, cfg)?.value,
        };
        Ok(e.clamp(0.0, 1.0))
    }

    /// `E(z)` by direct quadrature of `min[p(x), p(x+z)]`, for any family.
    pub fn overlap_by_quadrature(&self, z: f64, cfg: &QuadratureConfig) -> Result<Integral> {
        if !(z >= 0.0 && z.is_finite()) {
            return domain(format!("separation z must be finite and >= 0, got {z}"));
        }
        let (lo, hi) = self.support(cfg);
        if z >= hi - lo {
            return Ok(Integral {
                value: 0.0,
                err_estimate: 0.0,
            });
        }
        let mut cuts: Vec<f64> = self.breakpoints.clone();
        cuts.extend(self.breakpoints.iter().map(|b| b - z));
        let cfg = cfg.with_breakpoints(cuts);
        integrate(|x| self.pdf(x).min(self.pdf(x + z)), lo, hi - z, &cfg)
    }

    /// The unique `y0` with `p(y0) = p(y0 + z)` for a single-mode prior.
    pub fn crossing_point(&self, z: f64) -> Result<f64> {
        if !self.single_mode {
            return Err(Error::Unsupported(format!(
                "crossing point needs a single-mode prior, {} is multi-modal",
                self.name()
            )));
        }
        if self.has_flat_top() {
            return Err(Error::Unsupported(format!(
                "crossing point is not unique for the flat-topped {} prior",
                self.name()
            )));
        }
        if !(z > 0.0 && z.is_finite()) {
            return domain(format!("separation z must be positive, got {z}"));
        }
        let m = self.mode().expect("single-mode prior has a mode");
        // p rises up to m and falls after it, so p(y) - p(y+z) changes sign on [m - z, m].
        let tol = 4.0 * f64::EPSILON * (m.abs() + z);
        find_root_bisect(|y| self.pdf(y) - self.pdf(y + z), m - z, m, tol)
    }

    /// `E(z) = 1 - [cdf(y_m + z/2) - cdf(y_m - z/2)]` with `y_m = y0 + z/2`.
    pub fn overlap_single_mode(&self, z: f64) -> Result<f64> {
        if z == 0.0 && self.single_mode {
            return Ok(1.0);
        }
        let y0 = self.crossing_point(z)?;
        let ym = y0 + 0.5 * z;
        Ok((1.0 - (self.cdf(ym + 0.5 * z) - self.cdf(ym - 0.5 * z))).clamp(0.0, 1.0))
    }

    /// The same family rescaled to width `w` about the same centre.
    pub fn with_width(&self, w: f64) -> Result<Self> {
        positive("width W", w)?;
        match &self.family {
            PriorFamily::Uniform { center, .. } => Self::uniform(*center, w),
            PriorFamily::Gaussian { mean, .. } => Self::gaussian(*mean, w),
            PriorFamily::BimodalTwoBlock { .. } => Self::bimodal_two_block(w),
            PriorFamily::TriangularAsymmetric { lower, upper, mode } => {
                let s = w / (upper - lower);
                Self::triangular(*lower * s, *upper * s, *mode * s)
            }
            PriorFamily::Tabulated(t) => {
                let s = w / self.width;
                Self::tabulated(
                    t.x.iter()
                        .map(|x| self.mean + (x - self.mean) * s)
                        .collect(),
                    t.p.clone(),
                )
            }
        }
    }
}

/// The width-parameterized families used for regime scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorShape {
    Uniform,
    Gaussian,
    Bimodal,
}

impl PriorShape {
    pub fn with_width(self, w: f64) -> Result<PriorDistribution> {
        match self {
            PriorShape::Uniform => PriorDistribution::uniform(0.0, w),
            PriorShape::Gaussian => PriorDistribution::gaussian(0.0, w),
            PriorShape::Bimodal => PriorDistribution::bimodal_two_block(w),
        }
    }

    /// `DeltaX / W` for this shape.
    pub fn std_dev_per_width(self) -> f64 {
        match self {
            PriorShape::Uniform => 1.0 / 12f64.sqrt(),
            PriorShape::Gaussian => 1.0,
            PriorShape::Bimodal => (13.0f64 / 48.0).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PriorShape::Uniform => "uniform",
            PriorShape::Gaussian => "gaussian",
            PriorShape::Bimodal => "bimodal",
        }
    }
}

impl fmt::Display for PriorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PriorShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(PriorShape::Uniform),
            "gaussian" | "normal" => Ok(PriorShape::Gaussian),
            "bimodal" | "bimodal-two-block" => Ok(PriorShape::Bimodal),
            other => Err(Error::Domain(format!("unknown prior shape '{other}'"))),
        }
    }
}
