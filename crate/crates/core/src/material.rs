//! Saint Venant–Kirchhoff response, tensile energy split and derived
//! material/fracture parameters.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::sym_eigenvalues;

/// Lamé constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn from_young_poisson(e: f64, nu: f64) -> Self {
        Self {
            lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
            mu: e / (2.0 * (1.0 + nu)),
        }
    }
}

/// How the undamaged energy is split into its damage-driving part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySplit {
    /// Spectral split of the Green–Lagrange strain.
    #[default]
    Spectral,
}

/// Constitutive and fracture parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub rho: f64,
    pub youngs: f64,
    pub poisson: f64,
    pub gc: f64,
    pub horizon: f64,
    pub lambda: f64,
    /// Shear modulus, equal to the Lamé μ.
    pub mu: f64,
    pub shear_wave_speed: f64,
    pub rayleigh_wave_speed: f64,
    pub dilatational_wave_speed: f64,
    /// Critical crack driving force Y_c = G_c / (2 c₀ δ).
    pub yc: f64,
    /// Critical stress σ_c = √(E G_c / (c₀ δ)).
    pub sigma_c: f64,
    pub c0: f64,
    /// Critical bond stretch of the bond-deletion model, if given.
    pub eps_c: Option<f64>,
}

impl MaterialParams {
    pub fn lame(&self) -> Lame {
        Lame {
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    /// P-wave modulus λ + 2μ.
    pub fn p_wave_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }
}

pub fn derive_params(
    rho: f64,
    youngs: f64,
    poisson: f64,
    gc: f64,
    horizon: f64,
    c0: f64,
    eps_c: Option<f64>,
) -> Result<MaterialParams> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::config("material.rho", format!("must be positive, got {rho}")));
    }
    if !(youngs > 0.0 && youngs.is_finite()) {
        return Err(Error::config("material.E", format!("must be positive, got {youngs}")));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(Error::config("material.nu", format!("must lie in (-1, 0.5), got {poisson}")));
    }
    if !(gc > 0.0) {
        return Err(Error::config("material.Gc", format!("must be positive, got {gc}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::Domain(format!("normalization constant must be positive, got {c0}")));
    }
    if let Some(e) = eps_c {
        if !(e > 0.0) {
            return Err(Error::config("epsilon_c", format!("must be positive, got {e}")));
        }
    }
    let lame = Lame::from_young_poisson(youngs, poisson);
    let cs = (lame.mu / rho).sqrt();
    Ok(MaterialParams {
        rho,
        youngs,
        poisson,
        gc,
        horizon,
        lambda: lame.lambda,
        mu: lame.mu,
        shear_wave_speed: cs,
        rayleigh_wave_speed: cs * (0.862 + 1.14 * poisson) / (1.0 + poisson),
        dilatational_wave_speed: ((lame.lambda + 2.0 * lame.mu) / rho).sqrt(),
        yc: gc / (2.0 * c0 * horizon),
        sigma_c: (youngs * gc / (c0 * horizon)).sqrt(),
        c0,
        eps_c,
    })
}

/// Green–Lagrange strain, second and first Piola–Kirchhoff stresses and the
/// stored energy of one deformation gradient.
#[derive(Debug, Clone, Copy)]
pub struct SvkState {
    pub strain: Matrix3<f64>,
    pub pk2: Matrix3<f64>,
    pub pk1: Matrix3<f64>,
    pub energy: f64,
}

/// Evaluates SVK without the inversion check.
#[inline]
pub fn svk_unchecked(f: &Matrix3<f64>, lame: &Lame) -> SvkState {
    let c = f.transpose() * f;
    let e = (c - Matrix3::identity()) * 0.5;
    let tr = e.trace();
    let s = e * (2.0 * lame.mu) + Matrix3::identity() * (lame.lambda * tr);
    let energy = 0.5 * lame.lambda * tr * tr + lame.mu * e.component_mul(&e).sum();
    SvkState {
        strain: e,
        pk2: s,
        pk1: f * s,
        energy,
    }
}

fn check_det(f: &Matrix3<f64>) -> Result<f64> {
    let det = f.determinant();
    if det > 0.0 {
        Ok(det)
    } else {
        Err(Error::InvertedBond {
            point: usize::MAX,
            neighbor: usize::MAX,
            det,
        })
    }
}

/// First Piola–Kirchhoff stress and strain energy density of SVK.
pub fn svk_stress_and_energy(f: &Matrix3<f64>, lame: &Lame) -> Result<(Matrix3<f64>, f64)> {
    check_det(f)?;
    let st = svk_unchecked(f, lame);
    Ok((st.pk1, st.energy))
}

/// Tensile and compressive parts of the energy from the Green–Lagrange strain.
#[inline]
pub fn split_energy_of_strain(strain: &Matrix3<f64>, lame: &Lame) -> (f64, f64) {
    let ev = sym_eigenvalues(strain);
    let tr = ev[0] + ev[1] + ev[2];
    let (trp, trn) = (tr.max(0.0), tr.min(0.0));
    let mut pos = 0.5 * lame.lambda * trp * trp;
    let mut neg = 0.5 * lame.lambda * trn * trn;
    for e in ev {
        if e > 0.0 {
            pos += lame.mu * e * e;
        } else {
            neg += lame.mu * e * e;
        }
    }
    (pos, neg)
}

/// ψ₀⁺(F) under the given split.
pub fn tensile_energy_split(f: &Matrix3<f64>, lame: &Lame, split: EnergySplit) -> Result<f64> {
    check_det(f)?;
    let st = svk_unchecked(f, lame);
    match split {
        EnergySplit::Spectral => Ok(split_energy_of_strain(&st.strain, lame).0),
    }
}

/// Largest eigenvalue of σ = J⁻¹ P Fᵀ given P, F and J = det F.
#[inline]
pub fn max_principal_from_pk1(pk1: &Matrix3<f64>, f: &Matrix3<f64>, det: f64) -> f64 {
    let sigma = pk1 * f.transpose() / det;
    let sym = (sigma + sigma.transpose()) * 0.5;
    sym_eigenvalues(&sym)[0]
}

/// Largest principal Cauchy stress of the SVK response.
pub fn max_principal_cauchy_stress(f: &Matrix3<f64>, lame: &Lame) -> Result<f64> {
    let det = check_det(f)?;
    let st = svk_unchecked(f, lame);
    Ok(max_principal_from_pk1(&st.pk1, f, det))
}

/// All three principal Cauchy stresses, descending.
pub fn principal_cauchy_stresses(f: &Matrix3<f64>, lame: &Lame) -> Result<[f64; 3]> {
    let det = check_det(f)?;
    let st = svk_unchecked(f, lame);
    let sigma = st.pk1 * f.transpose() / det;
    Ok(sym_eigenvalues(&((sigma + sigma.transpose()) * 0.5)))
}
