//! Adaptive Gauss-Kronrod integration, bisection and golden-section search.
//!
//! Every bound in this crate reduces to one- or two-dimensional integrals over
//! bounded intervals. The integrator here is a global adaptive 10/21-point
//! Gauss-Kronrod scheme: the panel with the largest error estimate is bisected
//! until the summed estimate drops below `max(abs_tol, rel_tol * |value|)`.
//! Panels are processed in a fixed order, so identical inputs always give
//! bit-identical outputs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Points where the integrand is split before any adaptive refinement.
    pub breakpoints: Vec<f64>,
    /// Truncation radius for infinite-support priors, in units of the prior scale.
    pub improper_cutoff_sigmas: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            breakpoints: Vec::new(),
            improper_cutoff_sigmas: 12.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return domain(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return domain(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if self.max_subdivisions == 0 {
            return domain("max_subdivisions must be at least 1");
        }
        if !(self.improper_cutoff_sigmas >= 6.0 && self.improper_cutoff_sigmas.is_finite()) {
            return domain(format!(
                "improper_cutoff_sigmas must be >= 6, got {}",
                self.improper_cutoff_sigmas
            ));
        }
        if self.breakpoints.iter().any(|b| !b.is_finite()) {
            return domain("breakpoints must be finite");
        }
        Ok(())
    }

    /// Same settings with `breakpoints` replaced.
    pub fn with_breakpoints(&self, breakpoints: Vec<f64>) -> Self {
        Self {
            breakpoints,
            ..self.clone()
        }
    }

    /// Tolerances divided by `factor`, breakpoints cleared.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            breakpoints: Vec::new(),
            ..self.clone()
        }
    }

    /// Same settings with the absolute tolerance multiplied by `scale`.
    ///
    /// Integrals whose natural magnitude is far below one (e.g. over a window
    /// of width `t0 << 1`) need the absolute tolerance rescaled, otherwise a
    /// single panel always "converges".
    pub(crate) fn scaled_abs_tol(&self, scale: f64) -> Self {
        let scale = if scale > 0.0 && scale.is_finite() {
            scale.clamp(1e-280, 1.0)
        } else {
            1.0
        };
        Self {
            abs_tol: self.abs_tol * scale,
            ..self.clone()
        }
    }
}

/// Result of a quadrature: the value and an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub err_estimate: f64,
}

// Kronrod abscissae on [0, 1); the odd entries are the 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_090_784,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    splittable: bool,
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = res_kronrod.abs();
    let mut res_gauss = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let abs_half = half.abs();
    let value = res_kronrod * half;
    res_abs *= abs_half;
    res_asc *= abs_half;

    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    // NaN integrands must never look converged.
    if !value.is_finite() || !err.is_finite() {
        err = f64::INFINITY;
    }

    let mid = center;
    let splittable = mid > a && mid < b && (b - a) > 4.0 * f64::EPSILON * a.abs().max(b.abs());
    Panel {
        a,
        b,
        value,
        err,
        splittable,
    }
}

/// Integrate `f` over `[a, b]`.
///
/// The interval is first cut at every `cfg.breakpoints` entry that lies
/// strictly inside `(a, b)`. Fails with [`Error::NoConvergence`] (carrying the
/// best value and achieved error) when `cfg.max_subdivisions` panels are not
/// enough.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return domain(format!("integration limits must be finite, got [{a}, {b}]"));
    }
    if a > b {
        return domain(format!("lower limit {a} exceeds upper limit {b}"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            err_estimate: 0.0,
        });
    }

    let mut cuts: Vec<f64> = cfg
        .breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut panels: Vec<Panel> = edges
        .windows(2)
        .map(|w| gauss_kronrod_21(&f, w[0], w[1]))
        .collect();

    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let requested = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if err <= requested {
            return Ok(Integral {
                value,
                err_estimate: err,
            });
        }

        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .max_by(|(_, x), (_, y)| x.err.total_cmp(&y.err))
            .map(|(i, _)| i);

        let Some(i) = worst.filter(|_| panels.len() < cfg.max_subdivisions) else {
            return Err(Error::NoConvergence {
                value,
                achieved: err,
                requested,
            });
        };

        let Panel { a: lo, b: hi, .. } = panels[i];
        let mid = 0.5 * (lo + hi);
        panels[i] = gauss_kronrod_21(&f, lo, mid);
        panels.insert(i + 1, gauss_kronrod_21(&f, mid, hi));
    }
}

/// Bisection for a root of `g` on `[lo, hi]`, stopping once the bracket is narrower than `tol`.
pub fn find_root_bisect<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return domain(format!("invalid bracket [{lo}, {hi}]"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.is_nan() || g_hi.is_nan() || g_lo.signum() == g_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }

    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Location and value of a maximum found by [`golden_section_max`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// Set when the objective was numerically constant on the probe points;
    /// `x` is then the interval midpoint.
    pub flat: bool,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return domain(format!("invalid search interval [{lo}, {hi}]"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;

    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;

    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let probes = [f_lo, fc, fd, f_hi];
    let top = probes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bottom = probes.iter().copied().fold(f64::INFINITY, f64::min);
    if (top - bottom).abs() <= 1e-12 * top.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        return Ok(Maximum {
            x: mid,
            value: f(mid)?,
            flat: true,
        });
    }

    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok(Maximum {
        x,
        value: f(x)?,
        flat: false,
    })
}
