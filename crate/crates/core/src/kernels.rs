//! Spherical influence functions and their integrals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discretization::{NeighborSystem, PointCloud};
use crate::error::{Error, Result};
use crate::quadrature::default_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Unnormalized constant kernel, ψ = 1 inside the horizon.
    Constant,
    /// ψ = 3/(π δ³) (1 − r/δ).
    Linear,
    /// Cubic B-spline, ψ = 8/(π δ³) · w(r/δ).
    #[serde(rename = "cubic")]
    CubicBspline,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Constant => "constant",
            KernelKind::Linear => "linear",
            KernelKind::CubicBspline => "cubic",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "constant" => Some(KernelKind::Constant),
            "linear" => Some(KernelKind::Linear),
            "cubic" | "cubic_bspline" => Some(KernelKind::CubicBspline),
            _ => None,
        }
    }

    /// Points in ρ = r/δ where the profile changes polynomial branch.
    pub fn breakpoints(self) -> &'static [f64] {
        match self {
            KernelKind::CubicBspline => &[0.5],
            _ => &[],
        }
    }

    /// Dimensionless profile w(ρ) on ρ ∈ [0, 1]; zero beyond.
    pub fn profile(self, rho: f64) -> f64 {
        if rho > 1.0 {
            return 0.0;
        }
        match self {
            KernelKind::Constant => 1.0,
            KernelKind::Linear => 1.0 - rho,
            KernelKind::CubicBspline => {
                if rho <= 0.5 {
                    1.0 - 6.0 * rho * rho + 6.0 * rho * rho * rho
                } else {
                    let q = 1.0 - rho;
                    2.0 * q * q * q
                }
            }
        }
    }
}

/// A spherical kernel with its horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub horizon: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { kind, horizon })
    }

    /// Prefactor multiplying the dimensionless profile.
    pub fn scale(&self) -> f64 {
        let d3 = self.horizon * self.horizon * self.horizon;
        match self.kind {
            KernelKind::Constant => 1.0,
            KernelKind::Linear => 3.0 / (PI * d3),
            KernelKind::CubicBspline => 8.0 / (PI * d3),
        }
    }

    /// ψ(r) for a bond of length `r`; no domain check.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        self.scale() * self.kind.profile(r / self.horizon)
    }
}

/// Kernel value for a bond of the given reference length.
pub fn kernel_value(spec: &KernelSpec, bond_length: f64) -> Result<f64> {
    if !(bond_length > 0.0) {
        return Err(Error::Domain(format!(
            "bond length must be positive, got {bond_length}"
        )));
    }
    Ok(spec.eval(bond_length))
}

/// 4π ∫₀^δ ψ(r) r² dr.
pub fn continuum_kernel_integral(spec: &KernelSpec) -> f64 {
    let delta = spec.horizon;
    let bps: Vec<f64> = spec.kind.breakpoints().iter().map(|b| b * delta).collect();
    4.0 * PI * default_rule().integrate_piecewise(0.0, delta, &bps, |r| spec.eval(r) * r * r)
}

/// Per-point discrete kernel integrals ω₀(Xᵢ) = Σⱼ ψ(Ξᵢⱼ) Vⱼ.
#[derive(Debug, Clone)]
pub struct KernelIntegralField {
    pub values: Vec<f64>,
    pub isolated: Vec<bool>,
}

impl KernelIntegralField {
    pub fn n_isolated(&self) -> usize {
        self.isolated.iter().filter(|&&b| b).count()
    }
}

pub fn discrete_kernel_integrals(
    cloud: &PointCloud,
    neigh: &NeighborSystem,
    spec: &KernelSpec,
) -> KernelIntegralField {
    let n = cloud.len();
    let mut values = vec![0.0; n];
    let mut isolated = vec![false; n];
    for i in 0..n {
        let fam = neigh.family(i);
        if fam.is_empty() {
            isolated[i] = true;
            continue;
        }
        values[i] = fam
            .map(|b| spec.eval(neigh.bond_length(b)) * cloud.volumes[neigh.neighbor(b)])
            .sum();
    }
    KernelIntegralField { values, isolated }
}

/// Φ = ½(ψ(Ξ)/ω₀(i) + ψ(−Ξ)/ω₀(j)) for the bond between `i` and `j`.
pub fn averaged_bond_kernel(
    i: usize,
    j: usize,
    kernel: f64,
    omega: &KernelIntegralField,
) -> Result<f64> {
    let wi = omega.values[i];
    let wj = omega.values[j];
    if !(wi > 0.0) {
        return Err(Error::DegenerateFamily { point: i });
    }
    if !(wj > 0.0) {
        return Err(Error::DegenerateFamily { point: j });
    }
    Ok(0.5 * (kernel / wi + kernel / wj))
}

/// Averaged bond kernel for every stored bond, in bond order.
pub fn averaged_bond_kernels(
    neigh: &NeighborSystem,
    spec: &KernelSpec,
    omega: &KernelIntegralField,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(neigh.n_bonds());
    for i in 0..neigh.n_points() {
        for b in neigh.family(i) {
            let psi = spec.eval(neigh.bond_length(b));
            out.push(averaged_bond_kernel(i, neigh.neighbor(b), psi, omega)?);
        }
    }
    Ok(out)
}
