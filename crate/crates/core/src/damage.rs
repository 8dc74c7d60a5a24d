//! Bond damage state for both models: the PFPD phase field with its history
//! variable and the critical-stretch active flag of the baseline.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::discretization::{NeighborSystem, PointSet};
use crate::error::Result;
use crate::material::{self, EnergySplit, Lame, MaterialParams};

/// Crack driving force used by the PFPD evolution law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingForce {
    #[default]
    Energy,
    Stress,
}

/// Per-bond damage data, indexed like the bonds of a [`NeighborSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct BondState {
    /// Phase field s ∈ [0, 1].
    pub s: Vec<f64>,
    /// Largest crack driving force seen so far; +∞ marks a pre-crack.
    pub history: Vec<f64>,
    /// Baseline flag: `true` while the bond carries load.
    pub active: Vec<bool>,
    /// Bonds touching a no-failure zone.
    pub exempt: Vec<bool>,
}

impl BondState {
    pub fn new(n_bonds: usize) -> Self {
        Self {
            s: vec![0.0; n_bonds],
            history: vec![0.0; n_bonds],
            active: vec![true; n_bonds],
            exempt: vec![false; n_bonds],
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Marks a bond as fully broken in both models.
    pub fn break_bond(&mut self, b: usize) {
        self.s[b] = 1.0;
        self.history[b] = f64::INFINITY;
        self.active[b] = false;
    }

    pub fn is_precracked(&self, b: usize) -> bool {
        self.history[b] == f64::INFINITY
    }

    /// Flags every bond with at least one endpoint in `set` as exempt.
    pub fn mark_exempt(&mut self, neigh: &NeighborSystem, set: &PointSet) -> usize {
        let mask = set.mask(neigh.n_points());
        let mut count = 0;
        for i in 0..neigh.n_points() {
            for b in neigh.family(i) {
                if (mask[i] || mask[neigh.neighbor(b)]) && !self.exempt[b] {
                    self.exempt[b] = true;
                    count += 1;
                }
            }
        }
        count
    }

    pub fn n_failed(&self) -> usize {
        self.active.iter().filter(|a| !**a).count()
    }
}

/// g(s) = (1 − s)².
#[inline]
pub fn bond_degradation(s: f64) -> f64 {
    let r = 1.0 - s;
    r * r
}

/// Crack driving force of a bond deformation gradient.
pub fn crack_driving_force(
    mode: DrivingForce,
    f_bond: &Matrix3<f64>,
    mat: &MaterialParams,
    split: EnergySplit,
) -> Result<f64> {
    let lame = mat.lame();
    match mode {
        DrivingForce::Energy => material::tensile_energy_split(f_bond, &lame, split),
        DrivingForce::Stress => {
            let s1 = material::max_principal_cauchy_stress(f_bond, &lame)?;
            Ok(stress_driving_force(s1, mat.youngs))
        }
    }
}

/// ⟨σ₁⟩₊² / (2E).
#[inline]
pub fn stress_driving_force(sigma1: f64, youngs: f64) -> f64 {
    let p = sigma1.max(0.0);
    p * p / (2.0 * youngs)
}

/// Driving force from an already evaluated SVK state; used in the force loop.
#[inline]
pub fn driving_force_from_state(
    mode: DrivingForce,
    state: &material::SvkState,
    f_bond: &Matrix3<f64>,
    det: f64,
    lame: &Lame,
    youngs: f64,
) -> f64 {
    match mode {
        DrivingForce::Energy => material::split_energy_of_strain(&state.strain, lame).0,
        DrivingForce::Stress => {
            stress_driving_force(material::max_principal_from_pk1(&state.pk1, f_bond, det), youngs)
        }
    }
}

/// s = min(1, 𝒴/(𝒴 + Y_c)), with the pre-crack and undamageable limits.
#[inline]
pub fn phase_field_of_history(history: f64, yc: f64) -> f64 {
    if history == f64::INFINITY {
        return 1.0;
    }
    if history <= 0.0 || yc == f64::INFINITY {
        return 0.0;
    }
    (history / (history + yc)).min(1.0)
}

/// Updates one bond with driving force `y`. Returns the new `(𝒴, s)`.
#[inline]
pub fn update_history_and_phasefield(
    y: f64,
    history: f64,
    s: f64,
    yc: f64,
    exempt: bool,
) -> (f64, f64) {
    if exempt {
        return (history, s);
    }
    let h = history.max(y);
    let s_new = phase_field_of_history(h, yc).max(s);
    (h, s_new)
}

/// D = Σ_j Φ s V_j, clamped to [0, 1].
pub fn point_damage(i: usize, neigh: &NeighborSystem, phi: &[f64], s: &[f64], volumes: &[f64]) -> f64 {
    let mut d = 0.0;
    for b in neigh.family(i) {
        d += phi[b] * s[b] * volumes[neigh.neighbor(b)];
    }
    d.clamp(0.0, 1.0)
}

/// PFPD point damage of all points.
pub fn point_damage_field(neigh: &NeighborSystem, phi: &[f64], s: &[f64], volumes: &[f64]) -> Vec<f64> {
    (0..neigh.n_points())
        .map(|i| point_damage(i, neigh, phi, s, volumes))
        .collect()
}

/// Baseline point damage: volume fraction of the family whose bonds failed.
pub fn baseline_point_damage(i: usize, neigh: &NeighborSystem, active: &[bool], volumes: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut broken = 0.0;
    for b in neigh.family(i) {
        let v = volumes[neigh.neighbor(b)];
        total += v;
        if !active[b] {
            broken += v;
        }
    }
    if total > 0.0 {
        broken / total
    } else {
        0.0
    }
}

pub fn baseline_point_damage_field(neigh: &NeighborSystem, active: &[bool], volumes: &[f64]) -> Vec<f64> {
    (0..neigh.n_points())
        .map(|i| baseline_point_damage(i, neigh, active, volumes))
        .collect()
}

/// Bond stretch ε = (|x̃ − x| − |Ξ|)/|Ξ|.
#[inline]
pub fn bond_stretch(ref_len: f64, cur_len: f64) -> f64 {
    (cur_len - ref_len) / ref_len
}

/// New active flag of a baseline bond.
#[inline]
pub fn critical_stretch_check(ref_len: f64, cur_len: f64, eps_c: f64, exempt: bool, active: bool) -> bool {
    if !active {
        return false;
    }
    if exempt {
        return true;
    }
    bond_stretch(ref_len, cur_len) <= eps_c
}

/// Bond crack dissipation G_c s / (c₀ δ).
#[inline]
pub fn bond_crack_dissipation(s: f64, mat: &MaterialParams) -> f64 {
    mat.gc * s / (mat.c0 * mat.horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_neighborhoods, generate_grid, DEFAULT_EPS_DELTA};
    use crate::kernels::{averaged_bond_kernels, discrete_kernel_integrals, KernelKind, KernelSpec};
    use crate::material::derive_params;
    use nalgebra::{Vector3, Matrix3};
    use proptest::prelude::*;

    fn glass() -> MaterialParams {
        derive_params(2450.0, 32e9, 0.25, 3.0, 1.206e-3, 31.0 / 140.0, None).unwrap()
    }

    #[test]
    fn degradation_values() {
        assert_eq!(bond_degradation(0.0), 1.0);
        assert_eq!(bond_degradation(1.0), 0.0);
        assert_eq!(bond_degradation(0.5), 0.25);
    }

    #[test]
    fn evolution_law_examples() {
        let yc = 5617.0;
        let (h, s) = update_history_and_phasefield(yc, 0.0, 0.0, yc, false);
        assert_eq!(h, yc);
        assert_eq!(s, 0.5);
        let (h2, s2) = update_history_and_phasefield(0.0, h, s, yc, false);
        assert_eq!((h2, s2), (h, s));
        let (h3, s3) = update_history_and_phasefield(10.0, f64::INFINITY, 1.0, yc, false);
        assert_eq!((h3, s3), (f64::INFINITY, 1.0));
        assert_eq!(update_history_and_phasefield(1e9, 0.0, 0.0, yc, true), (0.0, 0.0));
        assert_eq!(phase_field_of_history(1e300, f64::INFINITY), 0.0);
    }

    #[test]
    fn driving_force_limits() {
        let mat = glass();
        for mode in [DrivingForce::Energy, DrivingForce::Stress] {
            let id = crack_driving_force(mode, &Matrix3::identity(), &mat, EnergySplit::Spectral).unwrap();
            assert_eq!(id, 0.0);
            let comp = Matrix3::identity() * 0.999;
            assert_eq!(crack_driving_force(mode, &comp, &mat, EnergySplit::Spectral).unwrap(), 0.0);
        }
    }

    #[test]
    fn uniaxial_driving_forces() {
        let mat = glass();
        let e = 1e-5;
        let f = Matrix3::from_diagonal(&Vector3::new(1.0 + e, 1.0, 1.0));
        let m = mat.lambda + 2.0 * mat.mu;
        let energy = crack_driving_force(DrivingForce::Energy, &f, &mat, EnergySplit::Spectral).unwrap();
        assert!((energy - 0.5 * m * e * e).abs() < 1e-4 * energy);
        let stress = crack_driving_force(DrivingForce::Stress, &f, &mat, EnergySplit::Spectral).unwrap();
        let expect = (m * e).powi(2) / (2.0 * mat.youngs);
        assert!((stress - expect).abs() < 1e-4 * expect);
    }

    #[test]
    fn critical_stretch_rule() {
        // ε exactly at the threshold survives
        let eps_c = 0.25;
        assert!(critical_stretch_check(1.0, 1.25, eps_c, false, true));
        assert!(critical_stretch_check(1.0, 1.0 + 10.0 * eps_c, eps_c, true, true));
        assert!(!critical_stretch_check(1.0, 1.0 + 1.01 * eps_c, eps_c, false, true));
        assert!(!critical_stretch_check(1.0, 1.0, eps_c, false, false));
    }

    #[test]
    fn fully_broken_bulk_point_has_unit_damage() {
        let cloud = generate_grid([13.0, 13.0, 13.0], 1.0).unwrap();
        let neigh = build_neighborhoods(&cloud, 3.0, DEFAULT_EPS_DELTA).unwrap();
        let spec = KernelSpec::new(KernelKind::CubicBspline, neigh.horizon).unwrap();
        let omega = discrete_kernel_integrals(&cloud, &neigh, &spec);
        let phi = averaged_bond_kernels(&neigh, &spec, &omega).unwrap();
        let s = vec![1.0; neigh.n_bonds()];
        let centre = cloud.index_of([6, 6, 6]);
        let d = point_damage(centre, &neigh, &phi, &s, &cloud.volumes);
        assert!((d - 1.0).abs() < 1e-12, "{d}");
        let zero = vec![0.0; neigh.n_bonds()];
        assert_eq!(point_damage(centre, &neigh, &phi, &zero, &cloud.volumes), 0.0);
        let mut bs = BondState::new(neigh.n_bonds());
        for b in 0..neigh.n_bonds() / 2 {
            bs.active[b] = false;
        }
        let field = baseline_point_damage_field(&neigh, &bs.active, &cloud.volumes);
        assert!(field.iter().all(|d| (0.0..=1.0).contains(d)));
    }

    #[test]
    fn break_and_exempt() {
        let cloud = generate_grid([4.0, 4.0, 4.0], 1.0).unwrap();
        let neigh = build_neighborhoods(&cloud, 1.0, DEFAULT_EPS_DELTA).unwrap();
        let mut bs = BondState::new(neigh.n_bonds());
        bs.break_bond(0);
        assert!(bs.is_precracked(0));
        assert_eq!((bs.s[0], bs.active[0]), (1.0, false));
        let set = PointSet { name: "p".into(), indices: vec![0] };
        let n = bs.mark_exempt(&neigh, &set);
        // point 0 is a corner with 3 neighbors; its bonds and their reverses
        assert_eq!(n, 6);
    }

    proptest! {
        #[test]
        fn history_and_phase_field_monotone(ys in proptest::collection::vec(0.0f64..2e4, 1..60)) {
            let yc = 5617.0;
            let (mut h, mut s) = (0.0, 0.0);
            for y in ys {
                let (h2, s2) = update_history_and_phasefield(y, h, s, yc, false);
                prop_assert!(h2 >= h && s2 >= s);
                prop_assert!((0.0..=1.0).contains(&s2));
                prop_assert_eq!(s2 == 0.0, h2 == 0.0);
                h = h2;
                s = s2;
            }
        }

        #[test]
        fn active_flag_never_recovers(stretches in proptest::collection::vec(-0.5f64..0.5, 1..40)) {
            let mut a = true;
            for e in stretches {
                let next = critical_stretch_check(1.0, 1.0 + e, 0.1, false, a);
                prop_assert!(a || !next);
                a = next;
            }
        }

        #[test]
        fn degradation_bounded(s in 0.0f64..=1.0) {
            let g = bond_degradation(s);
            prop_assert!((0.0..=1.0).contains(&g));
        }
    }
}
