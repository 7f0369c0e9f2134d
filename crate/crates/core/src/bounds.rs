//! Ziv-Zakai lower bounds on the prior-weighted RMSE.
//!
//! All speed-limit bounds are evaluated in the scaled variable `t = z / x0` on
//! `[0, 1]`, with `x0 = pi / (2H)` (or `delta0 = pi / (2 dH)` for the variance
//! bound). The dimensionless prior width is `t0 = W / x0`; `t0 -> infinity` is
//! the low-prior-information regime and `t0 -> 0` the high-prior-information one.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::priors::{PriorDistribution, PriorFamily};
use crate::quadrature::{integrate, Integral, QuadratureConfig};
use crate::speedlimit::{
    alpha_inverse, fidelity_bhatta, heisenberg_length, zz_weight, FidelityModel,
};

/// The value `A ~ 0.042` printed alongside the low-prior-information limit.
///
/// With `alpha^-1(t) = cos^2(pi sqrt(t) / 2)` the integral evaluates to
/// `0.03936`; see [`constant_a`]. Only this computed value is used internally.
pub const A_PRINTED_REFERENCE: f64 = 0.042;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    DirectZz,
    MainQsl,
    AppendixQsl,
    VarianceBhatta,
    UniformClosedForm,
    LpiBenchmark,
    HpiLimit,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::DirectZz => "direct",
            BoundKind::MainQsl => "main",
            BoundKind::AppendixQsl => "appendix",
            BoundKind::VarianceBhatta => "variance",
            BoundKind::UniformClosedForm => "closed-form",
            BoundKind::LpiBenchmark => "lpi",
            BoundKind::HpiLimit => "hpi",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "direct" | "direct-zz" => BoundKind::DirectZz,
            "main" | "main-qsl" => BoundKind::MainQsl,
            "appendix" | "appendix-qsl" => BoundKind::AppendixQsl,
            "variance" | "variance-bhatta" => BoundKind::VarianceBhatta,
            "closed-form" | "uniform-closed-form" => BoundKind::UniformClosedForm,
            "lpi" | "lpi-benchmark" => BoundKind::LpiBenchmark,
            "hpi" | "hpi-limit" => BoundKind::HpiLimit,
            other => return Err(Error::Domain(format!("unknown bound kind '{other}'"))),
        })
    }
}

/// A lower bound on the weighted RMSE together with its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub kind: BoundKind,
    pub value: f64,
    pub err_estimate: f64,
    /// `W / x0` (or `W / delta0`), when the bound has a natural length scale.
    pub t0: Option<f64>,
    /// `x0` or `delta0`.
    pub length_scale: Option<f64>,
}

/// Everything needed to evaluate one bound.
#[derive(Debug, Clone)]
pub struct BoundRequest {
    pub kind: BoundKind,
    pub prior: PriorDistribution,
    /// `H` for the speed-limit bounds, `dH` for the variance bound.
    pub generator_scale: Option<f64>,
    /// Required for [`BoundKind::DirectZz`] only.
    pub fidelity: Option<FidelityModel>,
    pub quad: QuadratureConfig,
}

impl BoundRequest {
    pub fn evaluate(&self) -> Result<BoundResult> {
        let scale = || {
            self.generator_scale.ok_or_else(|| {
                Error::Domain(format!("bound '{}' needs a generator scale", self.kind))
            })
        };
        match self.kind {
            BoundKind::DirectZz => {
                let f = self
                    .fidelity
                    .as_ref()
                    .ok_or_else(|| Error::Domain("direct bound needs a fidelity model".into()))?;
                zz_bound_direct(&self.prior, f, &self.quad)
            }
            BoundKind::MainQsl => main_lower_bound(&self.prior, scale()?, &self.quad),
            BoundKind::AppendixQsl => appendix_bound(&self.prior, scale()?, &self.quad),
            BoundKind::VarianceBhatta => variance_bound(&self.prior, scale()?, &self.quad),
            BoundKind::UniformClosedForm => match self.prior.family() {
                PriorFamily::Uniform { width, .. } => {
                    let h = scale()?;
                    let t0 = width / heisenberg_length(h)?;
                    uniform_closed_form(t0, h, &self.quad)
                }
                _ => Err(Error::Unsupported(format!(
                    "closed form exists only for the uniform prior, got {}",
                    self.prior.name()
                ))),
            },
            BoundKind::LpiBenchmark => lpi_benchmark(scale()?, &self.quad),
            BoundKind::HpiLimit => Ok(BoundResult {
                kind: BoundKind::HpiLimit,
                value: hpi_limit_single_mode(&self.prior)?,
                err_estimate: 0.0,
                t0: None,
                length_scale: None,
            }),
        }
    }
}

/// Collects the first error raised inside an integrand closure.
#[derive(Default)]
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn guard(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    fn check(self) -> Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// `sqrt(c * I)` with its propagated error.
fn root_of(c: f64, integral: Integral) -> (f64, f64) {
    let v = (c * integral.value).max(0.0);
    let value = v.sqrt();
    let err = if value > 0.0 {
        c * integral.err_estimate / (2.0 * value)
    } else {
        (c * integral.err_estimate).sqrt()
    };
    (value, err)
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive, got {v}"))
    }
}

/// `1 - sqrt(1 - alpha^-1(t))`.
fn qsl_weight(t: f64) -> Result<f64> {
    Ok(zz_weight(alpha_inverse(t.clamp(0.0, 1.0))?))
}

/// Breakpoints in `t` for an integrand containing `E(length * t)`.
fn scaled_kinks(
    prior: &PriorDistribution,
    length: f64,
    t_max: f64,
    cfg: &QuadratureConfig,
) -> Vec<f64> {
    prior
        .overlap_kinks(cfg)
        .into_iter()
        .map(|z| z / length)
        .filter(|&t| t > 0.0 && t < t_max)
        .collect()
}

/// Inner-quadrature error allowance for `int_0^t_max t E(.) w(t) dt`, `w <= 1`.
fn inner_allowance(prior: &PriorDistribution, inner: &QuadratureConfig, t_max: f64) -> f64 {
    if prior.has_closed_form_overlap() {
        0.0
    } else {
        (inner.abs_tol + inner.rel_tol) * 0.5 * t_max * t_max
    }
}

/// `sqrt{ (length^2 / 2) int_0^1 t E(length t) w(t) dt }`.
fn scaled_zz_bound<W>(
    prior: &PriorDistribution,
    length: f64,
    weight: W,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)>
where
    W: Fn(f64) -> Result<f64>,
{
    let t_max = (prior.overlap_reach(cfg) / length).min(1.0);
    let inner = cfg.tightened(10.0);
    let outer = cfg
        .scaled_abs_tol(t_max * t_max)
        .with_breakpoints(scaled_kinks(prior, length, t_max, cfg));

    let slot = ErrorSlot::default();
    let mut integral = integrate(
        |t| {
            let e = slot.guard(prior.overlap(length * t, &inner));
            let w = slot.guard(weight(t));
            t * e * w
        },
        0.0,
        t_max,
        &outer,
    )?;
    slot.check()?;
    integral.err_estimate += inner_allowance(prior, &inner, t_max);
    Ok(root_of(0.5 * length * length, integral))
}

/// Ziv-Zakai bound with an arbitrary fidelity model:
/// `sqrt{ 1/2 int_0^inf z E(z) [1 - sqrt(1 - F(z))] dz }`.
pub fn zz_bound_direct(
    prior: &PriorDistribution,
    fidelity: &FidelityModel,
    cfg: &QuadratureConfig,
) -> Result<BoundResult> {
    fidelity.validate()?;
    let mut z_max = prior.overlap_reach(cfg);
    if let Some(z) = fidelity.zero_beyond() {
        z_max = z_max.min(z);
    }
    let mut cuts = prior.overlap_kinks(cfg);
    cuts.extend(fidelity.kinks());
    let inner = cfg.tightened(10.0);
    let outer = cfg.scaled_abs_tol(z_max * z_max).with_breakpoints(cuts);

    let slot = ErrorSlot::default();
    let mut integral = integrate(
        |z| {
            let e = slot.guard(prior.overlap(z, &inner));
            let f = slot.guard(fidelity.fidelity(z));
            z * e * zz_weight(f)
        },
        0.0,
        z_max,
        &outer,
    )?;
    slot.check()?;
    integral.err_estimate += inner_allowance(prior, &inner, z_max);
    let (value, err_estimate) = root_of(0.5, integral);

    let length = match fidelity {
        FidelityModel::QslNumberOperator { h_mean } => Some(PI / (2.0 * h_mean)),
        FidelityModel::BhattacharyyaVariance { h_std } => Some(PI / (2.0 * h_std)),
        _ => None,
    };
    Ok(BoundResult {
        kind: BoundKind::DirectZz,
        value,
        err_estimate,
        t0: length.map(|l| prior.width() / l),
        length_scale: length,
    })
}

/// Speed-limit bound `sqrt{ (x0^2/2) int_0^1 t E(x0 t) [1 - sqrt(1 - alpha^-1(t))] dt }`.
pub fn main_lower_bound(
    prior: &PriorDistribution,
    h_mean: f64,
    cfg: &QuadratureConfig,
) -> Result<BoundResult> {
    let x0 = heisenberg_length(h_mean)?;
    let (value, err_estimate) = scaled_zz_bound(prior, x0, qsl_weight, cfg)?;
    Ok(BoundResult {
        kind: BoundKind::MainQsl,
        value,
        err_estimate,
        t0: Some(prior.width() / x0),
        length_scale: Some(x0),
    })
}

/// Variance-based bound with `F >= cos^2(dH z)`:
/// `sqrt{ (delta0^2/2) int_0^1 t E(delta0 t) [1 - sin(pi t / 2)] dt }`.
pub fn variance_bound(
    prior: &PriorDistribution,
    h_std: f64,
    cfg: &QuadratureConfig,
) -> Result<BoundResult> {
    check_scale("generator spread dH", h_std)?;
    let delta0 = PI / (2.0 * h_std);
    let weight = |t: f64| Ok(zz_weight(fidelity_bhatta(delta0 * t, h_std)?));
    let (value, err_estimate) = scaled_zz_bound(prior, delta0, weight, cfg)?;
    Ok(BoundResult {
        kind: BoundKind::VarianceBhatta,
        value,
        err_estimate,
        t0: Some(prior.width() / delta0),
        length_scale: Some(delta0),
    })
}

/// `A(t0) = int_0^min(t0,1) t w(t) dt` and `B(t0)`, the same with `t^2`,
/// for the speed-limit weight `w`.
pub fn uniform_coefficients(t0: f64, cfg: &QuadratureConfig) -> Result<(Integral, Integral)> {
    check_scale("t0", t0)?;
    let m = t0.min(1.0);
    let c = cfg.scaled_abs_tol(m * m);
    let slot = ErrorSlot::default();
    let a = integrate(|t| t * slot.guard(qsl_weight(t)), 0.0, m, &c)?;
    let b = integrate(
        |t| t * t * slot.guard(qsl_weight(t)),
        0.0,
        m,
        &c.scaled_abs_tol(m),
    )?;
    slot.check()?;
    Ok((a, b))
}

/// Uniform-prior bound `x0 sqrt{ [A(t0) - B(t0)/t0] / 2 }`.
pub fn uniform_closed_form(t0: f64, h_mean: f64, cfg: &QuadratureConfig) -> Result<BoundResult> {
    let x0 = heisenberg_length(h_mean)?;
    let (a, b) = uniform_coefficients(t0, cfg)?;
    let diff = Integral {
        value: a.value - b.value / t0,
        err_estimate: a.err_estimate + b.err_estimate / t0,
    };
    let (value, err_estimate) = root_of(0.5 * x0 * x0, diff);
    Ok(BoundResult {
        kind: BoundKind::UniformClosedForm,
        value,
        err_estimate,
        t0: Some(t0),
        length_scale: Some(x0),
    })
}

/// `A = int_0^1 t [1 - sqrt(1 - alpha^-1(t))] dt`, the prior-independent
/// low-prior-information constant.
pub fn constant_a(cfg: &QuadratureConfig) -> Result<Integral> {
    let slot = ErrorSlot::default();
    let r = integrate(|t| t * slot.guard(qsl_weight(t)), 0.0, 1.0, cfg)?;
    slot.check()?;
    Ok(r)
}

/// `A' = 1/2 - 4/pi^2`, the variance-bound analogue of [`constant_a`].
pub fn constant_a_prime() -> f64 {
    0.5 - 4.0 / (PI * PI)
}

/// `A'` by quadrature of `int_0^1 t [1 - sin(t pi / 2)] dt`.
pub fn constant_a_prime_quadrature(cfg: &QuadratureConfig) -> Result<Integral> {
    integrate(|t| t * (1.0 - (0.5 * PI * t).sin()), 0.0, 1.0, cfg)
}

/// Prior-independent benchmark `x0 sqrt(A / 2)` with Heisenberg scaling in `H`.
pub fn lpi_benchmark(h_mean: f64, cfg: &QuadratureConfig) -> Result<BoundResult> {
    let x0 = heisenberg_length(h_mean)?;
    let a = constant_a(cfg)?;
    let (value, err_estimate) = root_of(0.5 * x0 * x0, a);
    Ok(BoundResult {
        kind: BoundKind::LpiBenchmark,
        value,
        err_estimate,
        t0: None,
        length_scale: Some(x0),
    })
}

/// `sqrt(DeltaX^2 + (y_m - mu)^2)` with `y_m` the mode: the small-`t0` limit
/// claimed for single-mode priors. Never below `DeltaX`.
pub fn hpi_limit_single_mode(prior: &PriorDistribution) -> Result<f64> {
    let mode = prior.mode().ok_or_else(|| {
        Error::Unsupported(format!(
            "high-prior-information limit needs a single-mode prior, {} is multi-modal",
            prior.name()
        ))
    })?;
    let offset = mode - prior.mean();
    Ok((prior.variance() + offset * offset).sqrt())
}

/// `sqrt{ 1/2 int_0^inf z E(z) dz }`: the `t0 -> 0` limit of the speed-limit
/// bound for any prior, since the fidelity weight tends to one there.
pub fn hpi_limit_from_overlap(
    prior: &PriorDistribution,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    let reach = prior.overlap_reach(cfg);
    let inner = cfg.tightened(10.0);
    let outer = cfg
        .scaled_abs_tol(reach * reach)
        .with_breakpoints(prior.overlap_kinks(cfg));
    let slot = ErrorSlot::default();
    let mut integral = integrate(
        |z| z * slot.guard(prior.overlap(z, &inner)),
        0.0,
        reach,
        &outer,
    )?;
    slot.check()?;
    integral.err_estimate += inner_allowance(prior, &inner, reach);
    let (value, err_estimate) = root_of(0.5, integral);
    Ok(Integral {
        value,
        err_estimate,
    })
}

/// Hypothesis-testing variant of the speed-limit bound:
///
/// `sqrt{ (x0^2/4) int_0^1 t int [p(x) + p(x+x0 t)]
///        [1 - sqrt(1 - 4 p(x) p(x+x0 t) / (p(x) + p(x+x0 t))^2 alpha^-1(t))] dx dt }`.
///
/// The inner integrand is zero wherever `p(x) + p(x+x0 t) = 0`.
pub fn appendix_bound(
    prior: &PriorDistribution,
    h_mean: f64,
    cfg: &QuadratureConfig,
) -> Result<BoundResult> {
    let x0 = heisenberg_length(h_mean)?;
    let (lo, hi) = prior.support(cfg);
    let reach = hi - lo;
    let t_max = (reach / x0).min(1.0);
    let inner_base = cfg.tightened(10.0);
    let outer = cfg
        .scaled_abs_tol(t_max * t_max)
        .with_breakpoints(scaled_kinks(prior, x0, t_max, cfg));

    let slot = ErrorSlot::default();
    let worst_inner = Cell::new(0.0f64);
    let inner = |t: f64| -> Result<f64> {
        let z = x0 * t;
        if z >= reach {
            return Ok(0.0);
        }
        let a = alpha_inverse(t.clamp(0.0, 1.0))?;
        let mut cuts = prior.breakpoints().to_vec();
        cuts.extend(prior.breakpoints().iter().map(|b| b - z));
        // Outside [lo, hi - z] one of the two densities vanishes, and so does the integrand.
        let r = integrate(
            |x| {
                let p = prior.pdf(x);
                let q = prior.pdf(x + z);
                let s = p + q;
                if s <= 0.0 {
                    return 0.0;
                }
                let ratio = (4.0 * p * q / (s * s)).min(1.0);
                s * (1.0 - (1.0 - ratio * a).max(0.0).sqrt())
            },
            lo,
            hi - z,
            &inner_base.with_breakpoints(cuts),
        )?;
        worst_inner.set(worst_inner.get().max(r.err_estimate));
        Ok(r.value)
    };

    let mut integral = integrate(|t| t * slot.guard(inner(t)), 0.0, t_max, &outer)?;
    slot.check()?;
    integral.err_estimate += worst_inner.get() * 0.5 * t_max * t_max;
    let (value, err_estimate) = root_of(0.25 * x0 * x0, integral);
    Ok(BoundResult {
        kind: BoundKind::AppendixQsl,
        value,
        err_estimate,
        t0: Some(prior.width() / x0),
        length_scale: Some(x0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speedlimit::FidelityTable;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    /// `H` giving `x0 = 1`.
    const H_UNIT: f64 = PI / 2.0;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    /// Composite Simpson on a uniform grid; independent of the adaptive engine.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn analytic_a() -> f64 {
        let a = PI / 2.0;
        0.5 - 2.0 * (3.0 / (a * a) - 6.0 / a.powi(4))
    }

    #[test]
    fn direct_with_unit_fidelity_equals_prior_std_dev() {
        let u = PriorDistribution::uniform(0.0, 1.0).unwrap();
        let f = FidelityModel::Custom(FidelityTable::constant_one());
        let r = zz_bound_direct(&u, &f, &cfg()).unwrap();
        assert!((r.value - 1.0 / 12f64.sqrt()).abs() < 1e-9, "{}", r.value);
        assert!((r.value - 0.288675).abs() < 1e-6);
    }

    #[test]
    fn direct_with_vanishing_fidelity_is_zero() {
        let u = PriorDistribution::uniform(0.0, 1.0).unwrap();
        let f =
            FidelityModel::Custom(FidelityTable::new(vec![0.0, 1e-12], vec![1.0, 0.0]).unwrap());
        let r = zz_bound_direct(&u, &f, &cfg()).unwrap();
        assert!(r.value < 1e-11, "{}", r.value);
    }

    #[test]
    fn direct_coherent_state_is_positive_and_below_unit_fidelity() {
        let u = PriorDistribution::uniform(0.0, PI).unwrap();
        let coh = zz_bound_direct(
            &u,
            &FidelityModel::CoherentStateExact { photons: 10.0 },
            &cfg(),
        )
        .unwrap();
        let one = zz_bound_direct(
            &u,
            &FidelityModel::Custom(FidelityTable::constant_one()),
            &cfg(),
        )
        .unwrap();
        assert!(coh.value > 0.0);
        assert!(coh.value <= one.value);
        assert!(coh.t0.is_none());
    }

    #[test]
    fn direct_qsl_model_matches_main_bound() {
        let g = PriorDistribution::gaussian(0.0, 0.4).unwrap();
        for &h in &[0.5, 1.0, 3.0] {
            let d = zz_bound_direct(&g, &FidelityModel::QslNumberOperator { h_mean: h }, &cfg())
                .unwrap();
            let m = main_lower_bound(&g, h, &cfg()).unwrap();
            assert!(
                rel(d.value, m.value) < 1e-7,
                "H={h}: {} vs {}",
                d.value,
                m.value
            );
            assert_eq!(d.length_scale, m.length_scale);
        }
    }

    #[test]
    fn larger_fidelity_never_lowers_the_bound() {
        let g = PriorDistribution::gaussian(0.0, 1.0).unwrap();
        // smaller H means a slower fidelity decay, pointwise larger F
        let mut last = f64::INFINITY;
        for &h in &[0.1, 0.2, 0.5, 1.0, 2.0, 5.0] {
            let v = zz_bound_direct(&g, &FidelityModel::QslNumberOperator { h_mean: h }, &cfg())
                .unwrap()
                .value;
            assert!(v <= last, "H={h}");
            last = v;
        }
    }

    #[test]
    fn main_bound_uniform_half_width_matches_simpson_oracle() {
        let u = PriorDistribution::uniform(0.0, 0.5).unwrap();
        let r = main_lower_bound(&u, H_UNIT, &cfg()).unwrap();
        assert!((r.t0.unwrap() - 0.5).abs() < 1e-15);
        assert!((r.length_scale.unwrap() - 1.0).abs() < 1e-15);
        // E(t) = 1 - t / 0.5 on [0, 0.5]; substitution t = u^2 removes the sqrt kink
        let w = |t: f64| 1.0 - (PI * t.sqrt() / 2.0).sin();
        let oracle = simpson(
            |u| 2.0 * u * u * u * (1.0 - u * u / 0.5) * w(u * u),
            0.0,
            0.5f64.sqrt(),
            20_000,
        );
        let expected = (0.5 * oracle).sqrt();
        assert!(
            (r.value - expected).abs() < 1e-9,
            "{} vs {}",
            r.value,
            expected
        );
        assert!((r.value - 0.081907).abs() < 1e-6);
    }

    #[test]
    fn main_bound_lpi_limit_for_uniform() {
        let a = constant_a(&cfg()).unwrap().value;
        let u = PriorDistribution::uniform(0.0, 1e3).unwrap();
        let r = main_lower_bound(&u, H_UNIT, &cfg()).unwrap();
        assert!(rel(r.value, (a / 2.0).sqrt()) < 5e-3);
    }

    #[test]
    fn main_bound_hpi_limit_for_uniform() {
        // the weight deviates from one like sqrt(t), so the limit is approached as sqrt(t0)
        for &(t0, tol) in &[(1e-8, 1e-4), (1e-6, 1e-3), (1e-4, 1e-2)] {
            let u = PriorDistribution::uniform(0.0, t0).unwrap();
            let r = main_lower_bound(&u, H_UNIT, &cfg()).unwrap();
            let dx = t0 / 12f64.sqrt();
            assert!(rel(r.value, dx) < tol, "t0={t0}: {}", r.value / dx);
            assert!(r.value <= dx);
        }
    }

    #[test]
    fn closed_form_examples() {
        let r = uniform_closed_form(0.5, H_UNIT, &cfg()).unwrap();
        assert!((r.value - 0.081907).abs() < 1e-6, "{}", r.value);
        let big = uniform_closed_form(1e9, H_UNIT, &cfg()).unwrap();
        assert!(rel(big.value, (analytic_a() / 2.0).sqrt()) < 1e-8);
        assert!((big.value - 0.1403).abs() < 1e-4);
        let tiny = uniform_closed_form(1e-8, H_UNIT, &cfg()).unwrap();
        assert!(rel(tiny.value, 1e-8 / 12f64.sqrt()) < 1e-4);
    }

    #[test]
    fn closed_form_coefficients_at_half() {
        let (a, b) = uniform_coefficients(0.5, &cfg()).unwrap();
        let w = |t: f64| 1.0 - (PI * t.sqrt() / 2.0).sin();
        let top = 0.5f64.sqrt();
        let a_ref = simpson(|u| 2.0 * u.powi(3) * w(u * u), 0.0, top, 20_000);
        let b_ref = simpson(|u| 2.0 * u.powi(5) * w(u * u), 0.0, top, 20_000);
        assert!((a.value - a_ref).abs() < 1e-11);
        assert!((b.value - b_ref).abs() < 1e-11);
        assert!((a.value - 0.029477).abs() < 1e-6);
        assert!((b.value - 0.008030).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_generic_uniform_bound() {
        for i in 0..20 {
            let t0 = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
            let u = PriorDistribution::uniform(0.0, t0).unwrap();
            let g = main_lower_bound(&u, H_UNIT, &cfg()).unwrap();
            let c = uniform_closed_form(t0, H_UNIT, &cfg()).unwrap();
            assert!(
                (g.value - c.value).abs() < 1e-6 * c.value.max(1e-3),
                "t0={t0}"
            );
        }
    }

    #[test]
    fn constant_a_matches_analytic_value() {
        let a = constant_a(&cfg()).unwrap();
        assert!((a.value - 0.03936).abs() < 5e-5);
        assert!((a.value - analytic_a()).abs() < 1e-10);
        let half = constant_a(&cfg().tightened(2.0)).unwrap();
        assert!((a.value - half.value).abs() < 5e-6);
        assert!((A_PRINTED_REFERENCE - a.value).abs() > 1e-3);
    }

    #[test]
    fn constant_a_prime_two_routes() {
        let exact = constant_a_prime();
        assert!((exact - 0.0947153).abs() < 1e-7);
        let q = constant_a_prime_quadrature(&cfg()).unwrap();
        assert!((q.value - exact).abs() < 1e-8);
    }

    #[test]
    fn lpi_benchmark_scaling() {
        let r = lpi_benchmark(H_UNIT, &cfg()).unwrap();
        assert!((r.value - 0.14029).abs() < 1e-4);
        let r2 = lpi_benchmark(2.0 * H_UNIT, &cfg()).unwrap();
        assert!((r2.value - 0.5 * r.value).abs() < 1e-14);
        let u = PriorDistribution::uniform(0.0, 1e4).unwrap();
        let m = main_lower_bound(&u, H_UNIT, &cfg()).unwrap();
        assert!(rel(m.value, r.value) < 1e-3);
    }

    #[test]
    fn hpi_limit_examples() {
        let g = PriorDistribution::gaussian(2.0, 0.3).unwrap();
        assert!((hpi_limit_single_mode(&g).unwrap() - 0.3).abs() < 1e-15);
        let u = PriorDistribution::uniform(1.0, 2.0).unwrap();
        assert!((hpi_limit_single_mode(&u).unwrap() - u.std_dev()).abs() < 1e-15);
        let (a, b, m) = (0.0, 1.0, 0.8);
        let t = PriorDistribution::triangular(a, b, m).unwrap();
        let mu = (a + b + m) / 3.0;
        let var = (a * a + b * b + m * m - a * b - a * m - b * m) / 18.0;
        let v = hpi_limit_single_mode(&t).unwrap();
        assert!((v - (var + (m - mu) * (m - mu)).sqrt()).abs() < 1e-14);
        assert!(v >= t.std_dev());
        let bi = PriorDistribution::bimodal_two_block(1.0).unwrap();
        assert!(matches!(
            hpi_limit_single_mode(&bi),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn hpi_limit_from_overlap_values() {
        let c = cfg();
        let b = PriorDistribution::bimodal_two_block(2.0).unwrap();
        let v = hpi_limit_from_overlap(&b, &c).unwrap().value;
        assert!((v - 2.0 * (7.0f64 / 48.0).sqrt()).abs() < 1e-9);
        let u = PriorDistribution::uniform(0.0, 1.0).unwrap();
        assert!((hpi_limit_from_overlap(&u, &c).unwrap().value - u.std_dev()).abs() < 1e-9);
        let g = PriorDistribution::gaussian(0.0, 0.5).unwrap();
        assert!((hpi_limit_from_overlap(&g, &c).unwrap().value - 0.5).abs() < 1e-8);
        // scipy reference for the asymmetric triangle; below DeltaX = 0.21602
        let t = PriorDistribution::triangular(0.0, 1.0, 0.8).unwrap();
        let v = hpi_limit_from_overlap(&t, &c).unwrap().value;
        assert!((v - 0.204_124_145_231_487_56).abs() < 1e-7, "{v}");
    }

    #[test]
    fn triangular_main_bound_tends_to_overlap_limit() {
        let t = PriorDistribution::triangular(0.0, 1.0, 0.8).unwrap();
        let limit = hpi_limit_from_overlap(&t, &cfg()).unwrap().value;
        let w = 1e-8;
        let small = t.with_width(w).unwrap();
        let r = main_lower_bound(&small, H_UNIT, &cfg()).unwrap();
        assert!(rel(r.value / w, limit) < 1e-3, "{}", r.value / w);
    }

    #[test]
    fn appendix_bound_uniform_equals_main() {
        for &w in &[0.1, 0.7, 3.0] {
            let u = PriorDistribution::uniform(0.0, w).unwrap();
            let a = appendix_bound(&u, H_UNIT, &cfg()).unwrap();
            let m = main_lower_bound(&u, H_UNIT, &cfg()).unwrap();
            assert!(
                rel(a.value, m.value) < 1e-6,
                "W={w}: {} vs {}",
                a.value,
                m.value
            );
        }
    }

    #[test]
    fn appendix_bound_lpi_and_dominance() {
        let lpi = lpi_benchmark(H_UNIT, &cfg()).unwrap().value;
        let u = PriorDistribution::uniform(0.0, 1e3).unwrap();
        let a = appendix_bound(&u, H_UNIT, &cfg()).unwrap();
        assert!(rel(a.value, lpi) < 5e-3);
        let g = PriorDistribution::gaussian(0.0, 1.0).unwrap();
        let a = appendix_bound(&g, H_UNIT, &cfg()).unwrap();
        let m = main_lower_bound(&g, H_UNIT, &cfg()).unwrap();
        assert!(a.value >= m.value - a.err_estimate - m.err_estimate);
        assert!(a.value > m.value);
    }

    #[test]
    fn variance_bound_asymptotes() {
        let ap = constant_a_prime();
        let delta0 = 1.0;
        let dh = PI / (2.0 * delta0);
        let u = PriorDistribution::uniform(0.0, 1e3 * delta0).unwrap();
        let r = variance_bound(&u, dh, &cfg()).unwrap();
        assert!(rel(r.value, delta0 * (ap / 2.0).sqrt()) < 5e-3);
        assert!(rel(r.value, 0.21762 * delta0) < 5e-3);
        let g = PriorDistribution::gaussian(0.0, 1e-3).unwrap();
        let r = variance_bound(&g, dh, &cfg()).unwrap();
        assert!(rel(r.value, 1e-3) < 5e-3, "{}", r.value / 1e-3);
    }

    #[test]
    fn variance_bound_scales_with_delta0() {
        let t0 = 1e3;
        let mut vals = Vec::new();
        for &delta0 in &[0.5, 1.0] {
            let u = PriorDistribution::uniform(0.0, t0 * delta0).unwrap();
            vals.push(
                variance_bound(&u, PI / (2.0 * delta0), &cfg())
                    .unwrap()
                    .value,
            );
        }
        assert!(rel(vals[1], 2.0 * vals[0]) < 1e-9);
    }

    #[test]
    fn request_dispatch() {
        let u = PriorDistribution::uniform(0.0, 0.5).unwrap();
        let mut req = BoundRequest {
            kind: BoundKind::UniformClosedForm,
            prior: u.clone(),
            generator_scale: Some(H_UNIT),
            fidelity: None,
            quad: cfg(),
        };
        let c = req.evaluate().unwrap();
        req.kind = BoundKind::MainQsl;
        let m = req.evaluate().unwrap();
        assert!((c.value - m.value).abs() < 1e-9);
        req.kind = BoundKind::DirectZz;
        assert!(matches!(req.evaluate(), Err(Error::Domain(_))));
        req.kind = BoundKind::MainQsl;
        req.generator_scale = Some(-1.0);
        assert!(matches!(req.evaluate(), Err(Error::Domain(_))));
        req.generator_scale = None;
        assert!(req.evaluate().is_err());
        let g = BoundRequest {
            kind: BoundKind::UniformClosedForm,
            prior: PriorDistribution::gaussian(0.0, 1.0).unwrap(),
            generator_scale: Some(1.0),
            fidelity: None,
            quad: cfg(),
        };
        assert!(matches!(g.evaluate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kind_parsing_round_trips() {
        for k in [
            BoundKind::DirectZz,
            BoundKind::MainQsl,
            BoundKind::AppendixQsl,
            BoundKind::VarianceBhatta,
            BoundKind::UniformClosedForm,
            BoundKind::LpiBenchmark,
            BoundKind::HpiLimit,
        ] {
            assert_eq!(k.name().parse::<BoundKind>().unwrap(), k);
        }
    }
}
