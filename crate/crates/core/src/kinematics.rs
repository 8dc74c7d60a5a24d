//! Reproducing-kernel moment matrices, shape-function derivatives and the
//! nonlocal and bond-associated deformation gradients.
//!
//! Moment matrices are assembled in the scaled basis H(Ξ/δ) so that their
//! condition estimate does not depend on the length unit. The shape-function
//! derivatives are mapped back to physical units (1/length).

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::NeighborSystem;
use crate::kernels::KernelSpec;
use crate::tensor::sym_eigenvalues;

/// Condition estimate above which a point is treated as singular.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Basis {
    /// Linear monomials (Ξ₁, Ξ₂, Ξ₃).
    #[default]
    C1,
    /// Constant plus linear monomials (1, Ξ₁, Ξ₂, Ξ₃).
    RK1,
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::C1 => 3,
            Basis::RK1 => 4,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "C1" | "c1" => Some(Basis::C1),
            "RK1" | "rk1" => Some(Basis::RK1),
            _ => None,
        }
    }
}

/// H(Ξ) for the given basis.
pub fn monomial_basis(basis: Basis, xi: &Vector3<f64>) -> Vec<f64> {
    match basis {
        Basis::C1 => vec![xi.x, xi.y, xi.z],
        Basis::RK1 => vec![1.0, xi.x, xi.y, xi.z],
    }
}

/// Moment matrix in the scaled basis H(Ξ/δ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentMatrix {
    C1(Matrix3<f64>),
    RK1(Matrix4<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAssembly {
    pub matrix: MomentMatrix,
    /// λ_max/λ_min of the scaled matrix; +∞ when not positive definite.
    pub condition: f64,
    pub singular: bool,
}

/// h(s): 1 up to s_c, then ((1 − s)/(1 − s_c))². For s_c = 1 it is 1 everywhere.
#[inline]
pub fn kinematic_degradation(s: f64, s_c: f64) -> f64 {
    if s <= s_c {
        return 1.0;
    }
    let r = (1.0 - s) / (1.0 - s_c);
    r * r
}

fn condition_of(eigs: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for e in eigs {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if lo > 0.0 && hi.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// M = Σ_j ψ h H(Ξ/δ) ⊗ H(Ξ/δ) V_j over the family of `i`.
pub fn assemble_moment_matrix(
    i: usize,
    neigh: &NeighborSystem,
    psi: &[f64],
    h: &[f64],
    volumes: &[f64],
    basis: Basis,
) -> MomentAssembly {
    let inv_d = 1.0 / neigh.horizon;
    let (matrix, condition) = match basis {
        Basis::C1 => {
            let mut m = Matrix3::zeros();
            for b in neigh.family(i) {
                let w = psi[b] * h[b] * volumes[neigh.neighbor(b)];
                if w != 0.0 {
                    let x = neigh.bond_vector(b) * inv_d;
                    m += x * x.transpose() * w;
                }
            }
            (MomentMatrix::C1(m), condition_of(sym_eigenvalues(&m).into_iter()))
        }
        Basis::RK1 => {
            let mut m = Matrix4::zeros();
            for b in neigh.family(i) {
                let w = psi[b] * h[b] * volumes[neigh.neighbor(b)];
                if w != 0.0 {
                    let x = neigh.bond_vector(b) * inv_d;
                    let hv = Vector4::new(1.0, x.x, x.y, x.z);
                    m += hv * hv.transpose() * w;
                }
            }
            let c = condition_of(SymmetricEigen::new(m).eigenvalues.iter().copied());
            (MomentMatrix::RK1(m), c)
        }
    };
    MomentAssembly {
        matrix,
        condition,
        singular: !(condition <= COND_LIMIT),
    }
}

/// ∇Φ_ij = ψ h ∇H₀ M⁻¹ H(Ξ) V_j for every bond of `i`, written to `out`.
/// Returns false (and zero vectors) if the moment matrix is singular.
pub fn shape_function_derivatives(
    i: usize,
    neigh: &NeighborSystem,
    assembly: &MomentAssembly,
    psi: &[f64],
    h: &[f64],
    volumes: &[f64],
    out: &mut [Vector3<f64>],
) -> bool {
    let fam = neigh.family(i);
    debug_assert_eq!(out.len(), fam.len());
    let inv_d = 1.0 / neigh.horizon;
    let zero_all = |out: &mut [Vector3<f64>]| out.iter_mut().for_each(|g| *g = Vector3::zeros());
    if assembly.singular {
        zero_all(out);
        return false;
    }
    match assembly.matrix {
        MomentMatrix::C1(m) => {
            let Some(minv) = m.try_inverse() else {
                zero_all(out);
                return false;
            };
            for (k, b) in fam.enumerate() {
                let w = psi[b] * h[b] * volumes[neigh.neighbor(b)];
                let x = neigh.bond_vector(b) * inv_d;
                out[k] = minv * x * (w * inv_d);
            }
        }
        MomentMatrix::RK1(m) => {
            let Some(minv) = m.try_inverse() else {
                zero_all(out);
                return false;
            };
            for (k, b) in fam.enumerate() {
                let w = psi[b] * h[b] * volumes[neigh.neighbor(b)];
                let x = neigh.bond_vector(b) * inv_d;
                let g = minv * Vector4::new(1.0, x.x, x.y, x.z);
                out[k] = Vector3::new(g[1], g[2], g[3]) * (w * inv_d);
            }
        }
    }
    true
}

/// F = I + Σ_j (u_j − u_i) ⊗ ∇Φ_ij.
pub fn nonlocal_deformation_gradient(
    i: usize,
    neigh: &NeighborSystem,
    grad_phi: &[Vector3<f64>],
    u: &[Vector3<f64>],
) -> Matrix3<f64> {
    let ui = u[i];
    let mut f = Matrix3::identity();
    for b in neigh.family(i) {
        let g = &grad_phi[b];
        if g.x == 0.0 && g.y == 0.0 && g.z == 0.0 {
            continue;
        }
        f += (u[neigh.neighbor(b)] - ui) * g.transpose();
    }
    f
}

/// F_b = F̄ + (y − F̄Ξ) ⊗ Ξ/|Ξ|² with F̄ = ½(F_i + F_j) and y the current bond.
#[inline]
pub fn bond_deformation_gradient(
    f_i: &Matrix3<f64>,
    f_j: &Matrix3<f64>,
    xi: &Vector3<f64>,
    y: &Vector3<f64>,
) -> Matrix3<f64> {
    let f_av = (f_i + f_j) * 0.5;
    let corr = y - f_av * xi;
    f_av + corr * (xi / xi.norm_squared()).transpose()
}

/// Per-bond ∇Φ and h plus per-point singularity and dirty flags.
#[derive(Debug, Clone)]
pub struct KinematicCache {
    pub basis: Basis,
    /// Kernel value of every bond.
    pub psi: Vec<f64>,
    /// h used in the last assembly of each bond.
    pub h: Vec<f64>,
    pub grad_phi: Vec<Vector3<f64>>,
    pub condition: Vec<f64>,
    pub singular: Vec<bool>,
    pub dirty: Vec<bool>,
}

pub(crate) fn split_by_offsets<'a, T>(mut data: &'a mut [T], offsets: &[usize]) -> Vec<&'a mut [T]> {
    let mut parts = Vec::with_capacity(offsets.len().saturating_sub(1));
    for w in offsets.windows(2) {
        let (head, tail) = data.split_at_mut(w[1] - w[0]);
        parts.push(head);
        data = tail;
    }
    parts
}

impl KinematicCache {
    /// Builds the cache for all points with the given initial h values.
    pub fn new(neigh: &NeighborSystem, spec: &KernelSpec, basis: Basis, h: Vec<f64>, volumes: &[f64]) -> Self {
        let psi: Vec<f64> = (0..neigh.n_bonds()).map(|b| spec.eval(neigh.bond_length(b))).collect();
        let n = neigh.n_points();
        let mut cache = Self {
            basis,
            psi,
            h,
            grad_phi: vec![Vector3::zeros(); neigh.n_bonds()],
            condition: vec![0.0; n],
            singular: vec![false; n],
            dirty: vec![true; n],
        };
        cache.rebuild(neigh, volumes);
        cache
    }

    /// Stores a new h for bond `b` of owner `i`, marking `i` dirty if it changed.
    #[inline]
    pub fn set_h(&mut self, i: usize, b: usize, h: f64) {
        if self.h[b] != h {
            self.h[b] = h;
            self.dirty[i] = true;
        }
    }

    pub fn n_dirty(&self) -> usize {
        self.dirty.iter().filter(|d| **d).count()
    }

    /// Reassembles every dirty point in parallel; returns how many were rebuilt.
    pub fn rebuild(&mut self, neigh: &NeighborSystem, volumes: &[f64]) -> usize {
        let n_dirty = self.n_dirty();
        if n_dirty == 0 {
            return 0;
        }
        let basis = self.basis;
        let (psi, h) = (&self.psi, &self.h);
        let grads = split_by_offsets(&mut self.grad_phi, neigh.offsets());
        grads
            .into_par_iter()
            .zip(self.condition.par_iter_mut())
            .zip(self.singular.par_iter_mut())
            .zip(self.dirty.par_iter_mut())
            .enumerate()
            .for_each(|(i, (((g, cond), sing), dirty))| {
                if !*dirty {
                    return;
                }
                let asm = assemble_moment_matrix(i, neigh, psi, h, volumes, basis);
                let ok = shape_function_derivatives(i, neigh, &asm, psi, h, volumes, g);
                *cond = asm.condition;
                *sing = !ok;
                *dirty = false;
            });
        n_dirty
    }

    /// Nonlocal deformation gradients of all points; singular points get I.
    pub fn deformation_gradients(&self, neigh: &NeighborSystem, u: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
        (0..neigh.n_points())
            .into_par_iter()
            .map(|i| {
                if self.singular[i] {
                    Matrix3::identity()
                } else {
                    nonlocal_deformation_gradient(i, neigh, &self.grad_phi, u)
                }
            })
            .collect()
    }
}
