//! Griffith normalization constant c₀ and the spherical-cap fraction
//! functions of a planar crack, plus a Monte-Carlo cross-check.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quadrature::default_rule;

/// Samples below which the Monte-Carlo result carries a warning.
pub const MC_MIN_SAMPLES: usize = 10_000;
const MC_SHARD: usize = 1 << 16;

fn check_xi(xi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::Domain(format!("xi must lie in [0, 1], got {xi}")))
    }
}

/// f_V(ξ) = ½ − 3ξ/4 + ξ³/4.
pub fn cap_volume_fraction(xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(0.5 - 0.75 * xi + 0.25 * xi * xi * xi)
}

fn radial_moment(spec: &KernelSpec, lo: f64, f: impl Fn(f64) -> f64) -> f64 {
    let d = spec.horizon;
    default_rule().integrate_piecewise(lo, 1.0, spec.kind.breakpoints(), |rho| spec.eval(rho * d) * f(rho))
}

/// f_ω(ξ) = ∫_ξ¹ ψ ρ (ρ − ξ) dρ / (2 ∫₀¹ ψ ρ² dρ).
pub fn kernel_cap_fraction(spec: &KernelSpec, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let num = radial_moment(spec, xi, |rho| rho * (rho - xi));
    let den = 2.0 * radial_moment(spec, 0.0, |rho| rho * rho);
    Ok(num / den)
}

/// c₀ = ∫₀¹ ψ ρ³ dρ / (2 ∫₀¹ ψ ρ² dρ).
pub fn normalization_constant(spec: &KernelSpec) -> f64 {
    radial_moment(spec, 0.0, |rho| rho.powi(3)) / (2.0 * radial_moment(spec, 0.0, |rho| rho * rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Set when fewer than [`MC_MIN_SAMPLES`] samples were requested.
    pub low_sample_warning: bool,
}

/// Kernel-weighted fraction of the δ-ball around a point at height ξδ that
/// lies below the plane, estimated from uniform samples in the ball.
pub fn mc_cap_fraction_oracle(spec: &KernelSpec, xi: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    check_xi(xi)?;
    if n_samples == 0 {
        return Err(Error::Domain("Monte-Carlo oracle needs at least one sample".into()));
    }
    let delta = spec.horizon;
    let height = xi * delta;
    let n_shards = n_samples.div_ceil(MC_SHARD);
    // per shard: Σw, Σw², Σa, Σa², Σaw where a = w·1[below]
    let shards: Vec<[f64; 5]> = (0..n_shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = MC_SHARD.min(n_samples - k * MC_SHARD);
            let mut acc = [0.0; 5];
            for _ in 0..count {
                let r = delta * rng.random::<f64>().cbrt();
                // the azimuth does not affect the height, so it is not drawn
                let cos_t = 2.0 * rng.random::<f64>() - 1.0;
                let w = spec.kind.profile(r / delta);
                let a = if height + r * cos_t < 0.0 { w } else { 0.0 };
                acc[0] += w;
                acc[1] += w * w;
                acc[2] += a;
                acc[3] += a * a;
                acc[4] += a * w;
            }
            acc
        })
        .collect();
    let mut t = [0.0; 5];
    for s in &shards {
        for (x, y) in t.iter_mut().zip(s) {
            *x += y;
        }
    }
    let n = n_samples as f64;
    let (mw, ma) = (t[0] / n, t[2] / n);
    let ratio = if mw > 0.0 { ma / mw } else { 0.0 };
    // delta-method variance of a ratio of means
    let var_w = t[1] / n - mw * mw;
    let var_a = t[3] / n - ma * ma;
    let cov = t[4] / n - ma * mw;
    let var = (var_a - 2.0 * ratio * cov + ratio * ratio * var_w).max(0.0) / (n * mw * mw);
    Ok(McEstimate {
        estimate: ratio,
        std_error: var.sqrt(),
        low_sample_warning: n_samples < MC_MIN_SAMPLES,
    })
}

/// Sampled f_ω curve.
#[derive(Debug, Clone)]
pub struct CapFractionProfile {
    pub samples: Vec<(f64, f64)>,
    pub c0: f64,
}

impl CapFractionProfile {
    /// 2 ∫₀¹ f_ω dξ by the trapezoid rule.
    pub fn trapezoid_c0(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.samples.windows(2) {
            acc += 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1);
        }
        2.0 * acc
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        let mut body = String::from("xi,f_omega\n");
        for (x, v) in &self.samples {
            body.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
        f.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn c0_profile_report(spec: &KernelSpec, n_points: usize) -> Result<CapFractionProfile> {
    if n_points < 2 {
        return Err(Error::Domain("profile needs at least two points".into()));
    }
    let samples = (0..n_points)
        .map(|k| {
            let xi = k as f64 / (n_points - 1) as f64;
            kernel_cap_fraction(spec, xi).map(|f| (xi, f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapFractionProfile {
        samples,
        c0: normalization_constant(spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelKind;

    fn spec(kind: KernelKind, delta: f64) -> KernelSpec {
        KernelSpec::new(kind, delta).unwrap()
    }

    const ALL: [KernelKind; 3] = [KernelKind::Constant, KernelKind::Linear, KernelKind::CubicBspline];

    // Exact polynomial antiderivatives of the cubic B-spline moments, split at ½.
    fn cubic_moment(k: i32) -> f64 {
        let inner = |x: f64| {
            let kf = k as f64;
            x.powi(k + 1) / (kf + 1.0) - 6.0 * x.powi(k + 3) / (kf + 3.0) + 6.0 * x.powi(k + 4) / (kf + 4.0)
        };
        // 2(1−ρ)³ ρ^k expanded: 2(ρ^k − 3ρ^{k+1} + 3ρ^{k+2} − ρ^{k+3})
        let outer = |x: f64| {
            let kf = k as f64;
            2.0 * (x.powi(k + 1) / (kf + 1.0) - 3.0 * x.powi(k + 2) / (kf + 2.0) + 3.0 * x.powi(k + 3) / (kf + 3.0)
                - x.powi(k + 4) / (kf + 4.0))
        };
        inner(0.5) - inner(0.0) + outer(1.0) - outer(0.5)
    }

    #[test]
    fn volume_fraction_values() {
        assert_eq!(cap_volume_fraction(0.0).unwrap(), 0.5);
        assert_eq!(cap_volume_fraction(1.0).unwrap(), 0.0);
        assert_eq!(cap_volume_fraction(0.5).unwrap(), 5.0 / 32.0);
        assert!(cap_volume_fraction(1.5).is_err());
        assert!(kernel_cap_fraction(&spec(KernelKind::Linear, 1.0), -0.1).is_err());
    }

    #[test]
    fn c0_closed_forms() {
        let oracle_cubic = cubic_moment(3) / (2.0 * cubic_moment(2));
        assert!((oracle_cubic - 31.0 / 140.0).abs() < 1e-14);
        let c = normalization_constant(&spec(KernelKind::CubicBspline, 1.0));
        assert!((c - oracle_cubic).abs() < 1e-12, "{c}");
        assert!((normalization_constant(&spec(KernelKind::Linear, 1.0)) - 0.3).abs() < 1e-12);
        assert!((normalization_constant(&spec(KernelKind::Constant, 1.0)) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn c0_independent_of_horizon() {
        for kind in ALL {
            let base = normalization_constant(&spec(kind, 1.0));
            for d in [0.5, 3.0] {
                assert!((normalization_constant(&spec(kind, d)) - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cap_fraction_endpoints() {
        for kind in ALL {
            let s = spec(kind, 1.7);
            assert!((kernel_cap_fraction(&s, 0.0).unwrap() - 0.5).abs() < 1e-12);
            assert!(kernel_cap_fraction(&s, 1.0).unwrap().abs() < 1e-12);
        }
        let k = kernel_cap_fraction(&spec(KernelKind::Constant, 1.0), 0.5).unwrap();
        assert!((k - 5.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn profile_properties() {
        let cst = c0_profile_report(&spec(KernelKind::Constant, 1.0), 101).unwrap();
        for (xi, f) in &cst.samples {
            assert!((f - cap_volume_fraction(*xi).unwrap()).abs() < 1e-13);
        }
        for kind in ALL {
            let p = c0_profile_report(&spec(kind, 1.0), 101).unwrap();
            assert_eq!(p.samples.len(), 101);
            assert!(p.samples.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-15));
            assert!((p.trapezoid_c0() - p.c0).abs() < 1e-4);
            let fine = c0_profile_report(&spec(kind, 1.0), 4001).unwrap();
            assert!((fine.trapezoid_c0() - p.c0).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = c0_profile_report(&spec(KernelKind::CubicBspline, 1.0), 5).unwrap();
        p.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "xi,f_omega");
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        let s = spec(KernelKind::CubicBspline, 1.0);
        for xi in [0.1, 0.25, 0.5, 0.9] {
            let mc = mc_cap_fraction_oracle(&s, xi, 400_000, 7).unwrap();
            let q = kernel_cap_fraction(&s, xi).unwrap();
            assert!((mc.estimate - q).abs() < 3.0 * mc.std_error, "xi={xi}: {} vs {q} (se {})", mc.estimate, mc.std_error);
        }
        let half = mc_cap_fraction_oracle(&spec(KernelKind::Constant, 1.0), 0.0, 200_000, 3).unwrap();
        assert!((half.estimate - 0.5).abs() < 3.0 * half.std_error);
        let empty = mc_cap_fraction_oracle(&s, 1.0, 20_000, 1).unwrap();
        assert_eq!(empty.estimate, 0.0);
    }

    #[test]
    fn monte_carlo_reproducible_and_flags_small_runs() {
        let s = spec(KernelKind::Linear, 2.0);
        let a = mc_cap_fraction_oracle(&s, 0.3, 150_000, 11).unwrap();
        let b = mc_cap_fraction_oracle(&s, 0.3, 150_000, 11).unwrap();
        assert_eq!(a, b);
        assert!(!a.low_sample_warning);
        assert!(mc_cap_fraction_oracle(&s, 0.3, 100, 11).unwrap().low_sample_warning);
    }
}
