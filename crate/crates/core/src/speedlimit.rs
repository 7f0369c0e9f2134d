//! Fidelity lower bounds for states translated by a unitary generator.
//!
//! The quantum speed limit bounds how fast the fidelity between `rho_x` and
//! `rho_{x+z}` can decay. [`alpha_inverse`] is the closed-form approximation
//! `cos^2(pi sqrt(t) / 2)`, inverse of `alpha(eps) = 4 arccos^2(sqrt(eps)) / pi^2`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::table::read_two_columns;

/// `cos^2(pi sqrt(t) / 2)` on `[0, 1]`.
pub fn alpha_inverse(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!(
            "alpha_inverse argument must lie in [0, 1], got {t}"
        ));
    }
    let c = (0.5 * PI * t.sqrt()).cos();
    Ok((c * c).clamp(0.0, 1.0))
}

/// Heisenberg length `x0 = pi / (2 H)`.
pub fn heisenberg_length(h_mean: f64) -> Result<f64> {
    if !(h_mean > 0.0 && h_mean.is_finite()) {
        return domain(format!("generator scale must be positive, got {h_mean}"));
    }
    Ok(PI / (2.0 * h_mean))
}

fn check_separation(z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        domain(format!("separation z must be finite and >= 0, got {z}"))
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive, got {v}"))
    }
}

/// Speed-limit bound on the fidelity in terms of the mean generator `H` above its ground level.
pub fn fidelity_qsl(z: f64, h_mean: f64) -> Result<f64> {
    check_separation(z)?;
    check_scale("mean generator H", h_mean)?;
    let t = 2.0 * h_mean * z / PI;
    if t >= 1.0 {
        Ok(0.0)
    } else {
        alpha_inverse(t)
    }
}

/// Bhattacharyya-type bound `cos^2(dH z)`, zero once `dH z` passes `pi/2`.
pub fn fidelity_bhatta(z: f64, h_std: f64) -> Result<f64> {
    check_separation(z)?;
    check_scale("generator spread dH", h_std)?;
    let phase = h_std * z;
    if phase >= 0.5 * PI {
        Ok(0.0)
    } else {
        let c = phase.cos();
        Ok(c * c)
    }
}

/// Fidelity `exp(-2 N (1 - cos z))` of a coherent state with `N` mean photons
/// and its phase-rotated copy.
pub fn fidelity_coherent(z: f64, photons: f64) -> Result<f64> {
    check_separation(z)?;
    check_scale("mean photon number N", photons)?;
    Ok((-2.0 * photons * (1.0 - z.cos())).exp())
}

/// `1 - sqrt(1 - F)`: the weight a fidelity contributes to the Ziv-Zakai integrand.
pub fn zz_weight(fidelity: f64) -> f64 {
    1.0 - (1.0 - fidelity.clamp(0.0, 1.0)).sqrt()
}

/// Tabulated fidelity curve, linearly interpolated and held constant past the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityTable {
    z: Vec<f64>,
    f: Vec<f64>,
}

impl FidelityTable {
    /// Nodes must start at `z = 0` with `F = 1` and be strictly increasing.
    /// Values are clamped into `[0, 1]`.
    pub fn new(z: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if z.len() != f.len() || z.len() < 2 {
            return Err(Error::InvalidData(
                "fidelity table needs at least two (z, F) rows".into(),
            ));
        }
        if z.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "fidelity table has non-finite entries".into(),
            ));
        }
        if z[0] != 0.0 {
            return Err(Error::InvalidData(format!(
                "fidelity table must start at z = 0, starts at {}",
                z[0]
            )));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(
                "fidelity table z values must be strictly increasing".into(),
            ));
        }
        let f: Vec<f64> = f.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        if (f[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidData(format!(
                "fidelity at z = 0 must be 1, got {}",
                f[0]
            )));
        }
        Ok(Self { z, f })
    }

    /// `F = 1` for every separation.
    pub fn constant_one() -> Self {
        Self {
            z: vec![0.0, 1.0],
            f: vec![1.0, 1.0],
        }
    }

    /// Two-column `z,F` CSV with an optional header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let (z, f) = read_two_columns(reader)?;
        Self::new(z, f)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.z.len();
        if z >= self.z[n - 1] {
            return self.f[n - 1];
        }
        let i = self.z.partition_point(|&node| node <= z).max(1) - 1;
        let w = (z - self.z[i]) / (self.z[i + 1] - self.z[i]);
        self.f[i] + w * (self.f[i + 1] - self.f[i])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    pub fn tail_value(&self) -> f64 {
        self.f[self.f.len() - 1]
    }
}

/// A lower bound `z -> F(z)` on the fidelity between `rho_x` and `rho_{x+z}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FidelityModel {
    /// Speed-limit bound with mean generator `H` (already referenced to the ground level).
    QslNumberOperator {
        h_mean: f64,
    },
    /// `cos^2(dH z)` with generator standard deviation `dH`.
    BhattacharyyaVariance {
        h_std: f64,
    },
    /// Exact coherent-state overlap with mean photon number `N`.
    CoherentStateExact {
        photons: f64,
    },
    Custom(FidelityTable),
}

impl FidelityModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FidelityModel::QslNumberOperator { h_mean } => check_scale("mean generator H", h_mean),
            FidelityModel::BhattacharyyaVariance { h_std } => {
                check_scale("generator spread dH", h_std)
            }
            FidelityModel::CoherentStateExact { photons } => {
                check_scale("mean photon number N", photons)
            }
            FidelityModel::Custom(_) => Ok(()),
        }
    }

    pub fn fidelity(&self, z: f64) -> Result<f64> {
        match self {
            FidelityModel::QslNumberOperator { h_mean } => fidelity_qsl(z, *h_mean),
            FidelityModel::BhattacharyyaVariance { h_std } => fidelity_bhatta(z, *h_std),
            FidelityModel::CoherentStateExact { photons } => fidelity_coherent(z, *photons),
            FidelityModel::Custom(table) => {
                check_separation(z)?;
                Ok(table.eval(z))
            }
        }
    }

    /// Separation beyond which the model is identically zero, if any.
    pub fn zero_beyond(&self) -> Option<f64> {
        match self {
            FidelityModel::QslNumberOperator { h_mean } => Some(PI / (2.0 * h_mean)),
            FidelityModel::BhattacharyyaVariance { h_std } => Some(PI / (2.0 * h_std)),
            FidelityModel::CoherentStateExact { .. } => None,
            FidelityModel::Custom(t) => {
                (t.tail_value() == 0.0).then(|| t.nodes()[t.nodes().len() - 1])
            }
        }
    }

    /// Separations where the model has a kink.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            FidelityModel::Custom(t) => t.nodes().to_vec(),
            other => other.zero_beyond().into_iter().collect(),
        }
    }
}
