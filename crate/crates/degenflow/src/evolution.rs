//! The unitary flow, exact time averaging through the sinc multiplier, and
//! the averaging error norm. Everything here is diagonal in (fiber, mode):
//! no time stepping, the multiplier form is exact.

use crate::error::Result;
use crate::fibered::FiberedFunction;
use crate::numeric::{adaptive_integrate, kahan_sum, sinc};
use crate::profile::FlowProfile;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How an averaging error was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingMethod {
    /// Exact multiplier `sinc(T k phi(m))`.
    ClosedFormSinc,
    /// Adaptive quadrature of the phase average in time; exists to validate
    /// the closed form.
    TimeQuadrature,
}

/// Distance between the time average and the spatial average at horizon `T`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AveragingResult {
    pub horizon: f64,
    pub error_l2: f64,
    pub method: AveragingMethod,
}

/// Evolves `f` by the flow for time `t`: the mode at `(m, k)` picks up the
/// phase `exp(i t k phi(m))`. Norm preserving.
pub fn flow(f: &FiberedFunction, profile: &FlowProfile, t: f64) -> Result<FiberedFunction> {
    let speeds = node_speeds(f, profile)?;
    Ok(f.map_coeffs(|i, k, c| {
        let phase = t * k as f64 * speeds[i];
        c * Complex64::new(phase.cos(), phase.sin())
    }))
}

/// Averages the flow over `[-T, T]`: the exact multiplier is
/// `sinc(T k phi(m))`. The kernel of the generator (the `k = 0` content and
/// the degenerate fiber) carries multiplier 1 and is untouched.
pub fn time_average(
    f: &FiberedFunction,
    profile: &FlowProfile,
    horizon: f64,
) -> Result<FiberedFunction> {
    let speeds = node_speeds(f, profile)?;
    Ok(f.map_coeffs(|i, k, c| c * sinc(horizon * k as f64 * speeds[i])))
}

/// Time average by adaptive quadrature of the phase factor over `[0, T]`
/// (the integrand is even in `t`). Panel counts double until successive
/// refinements agree to `tol`; this is the oracle the sinc form is checked
/// against and makes no use of the sinc identity.
pub fn time_average_quadrature(
    f: &FiberedFunction,
    profile: &FlowProfile,
    horizon: f64,
    tol: f64,
) -> Result<FiberedFunction> {
    let speeds = node_speeds(f, profile)?;
    Ok(f.map_coeffs(|i, k, c| {
        let omega = k as f64 * speeds[i];
        let avg = adaptive_integrate(0.0, horizon, tol, 1 << 16, |t| (omega * t).cos())
            .expect("phase average quadrature did not converge")
            / horizon;
        c * avg
    }))
}

/// Projection onto the fiberwise mean. Mean-zero storage makes this the zero
/// function; it exists so that general inputs reduce explicitly.
pub fn project_mean(f: &FiberedFunction) -> FiberedFunction {
    FiberedFunction::zero(f.grid().clone(), f.kmax())
}

/// `||(P^T - P) f||` at horizon `T` through the closed-form multiplier.
pub fn averaging_error(
    f: &FiberedFunction,
    profile: &FlowProfile,
    horizon: f64,
) -> Result<AveragingResult> {
    let speeds = node_speeds(f, profile)?;
    let kmax = f.kmax() as i64;
    let total = kahan_sum((0..f.grid().len()).map(|i| {
        let w = f.grid().weight(i);
        let fiber: f64 = kahan_sum((-kmax..=kmax).filter(|&k| k != 0).map(|k| {
            let c = f.coeff(i, k);
            if c == Complex64::new(0.0, 0.0) {
                return 0.0;
            }
            let s = sinc(horizon * k as f64 * speeds[i]);
            c.norm_sqr() * s * s
        }));
        w * fiber
    }));
    Ok(AveragingResult {
        horizon,
        error_l2: total.sqrt(),
        method: AveragingMethod::ClosedFormSinc,
    })
}

/// `||(P^T - P) f||` with the time-quadrature oracle in place of the sinc
/// multiplier.
pub fn averaging_error_quadrature(
    f: &FiberedFunction,
    profile: &FlowProfile,
    horizon: f64,
    tol: f64,
) -> Result<AveragingResult> {
    let averaged = time_average_quadrature(f, profile, horizon, tol)?;
    Ok(AveragingResult {
        horizon,
        error_l2: averaged.l2_norm(),
        method: AveragingMethod::TimeQuadrature,
    })
}

fn node_speeds(f: &FiberedFunction, profile: &FlowProfile) -> Result<Vec<f64>> {
    f.grid().nodes().iter().map(|&m| profile.speed(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibered::{Descriptor, ModeShape};
    use crate::grid::MGrid;

    /// Deterministic pseudo-random test data with mild mode decay.
    fn random_function(grid: MGrid, kmax: usize, seed: u64) -> FiberedFunction {
        let s = seed as f64;
        FiberedFunction::from_samples(grid, kmax, move |m, k| {
            let decay = 1.0 / (1.0 + k.abs() as f64);
            Complex64::new(
                (37.1 * m + 1.3 * k as f64 + s).sin() * decay,
                (11.7 * m - 0.7 * k as f64 + 2.0 * s).cos() * decay,
            )
        })
    }

    #[test]
    fn zero_time_flow_is_identity() {
        let grid = MGrid::graded(16, 2.0).unwrap();
        let f = random_function(grid, 4, 1);
        let p = FlowProfile::power_law(1.0, 1.0).unwrap();
        let g = flow(&f, &p, 0.0).unwrap();
        for (i, k, c) in f.iter_coeffs() {
            assert_eq!(g.coeff(i, k), c);
        }
    }

    #[test]
    fn half_period_negates_unit_speed_mode() {
        let grid = MGrid::graded(4, 1.0).unwrap();
        let profile = FlowProfile::constant(1.0).unwrap();
        let f = FiberedFunction::from_samples(grid, 1, |_, k| {
            if k == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let g = flow(&f, &profile, std::f64::consts::PI).unwrap();
        for i in 0..g.grid().len() {
            assert!((g.coeff(i, 1) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn flow_is_unitary() {
        let grid = MGrid::graded(32, 2.0).unwrap();
        let f = random_function(grid, 6, 7);
        let p = FlowProfile::power_law(1.5, 2.0).unwrap();
        let norm = f.l2_norm();
        for &t in &[0.1, 1.0, 10.0] {
            let g = flow(&f, &p, t).unwrap();
            assert!(
                (g.l2_norm() - norm).abs() < 1e-12 * (1.0 + norm),
                "t = {t}"
            );
        }
    }

    #[test]
    fn flow_satisfies_group_law() {
        let grid = MGrid::graded(16, 2.0).unwrap();
        let f = random_function(grid, 4, 42);
        let p = FlowProfile::power_law(0.5, 1.0).unwrap();
        let (t1, t2) = (0.7, 2.9);
        let a = flow(&flow(&f, &p, t1).unwrap(), &p, t2).unwrap();
        let b = flow(&f, &p, t1 + t2).unwrap();
        for (i, k, c) in a.iter_coeffs() {
            assert!((c - b.coeff(i, k)).norm() < 1e-12, "node {i} mode {k}");
        }
    }

    #[test]
    fn sinc_multiplier_at_half_pi() {
        let grid = MGrid::graded(4, 1.0).unwrap();
        let profile = FlowProfile::constant(1.0).unwrap();
        let f = FiberedFunction::from_samples(grid, 1, |_, k| {
            if k == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let g = time_average(&f, &profile, std::f64::consts::FRAC_PI_2).unwrap();
        let expected = 2.0 / std::f64::consts::PI;
        assert!((g.coeff(0, 1).re - expected).abs() < 1e-15);
    }

    #[test]
    fn averaging_contracts() {
        let grid = MGrid::graded(24, 2.0).unwrap();
        let f = random_function(grid, 5, 3);
        let p = FlowProfile::power_law(1.0, 1.0).unwrap();
        let norm = f.l2_norm();
        for &t in &[0.5, 2.0, 37.0] {
            let g = time_average(&f, &p, t).unwrap();
            assert!(g.l2_norm() <= norm * (1.0 + 1e-12), "t = {t}");
        }
    }

    #[test]
    fn quadrature_oracle_matches_sinc() {
        let grid = MGrid::graded_with_order(16, 2.0, 4).unwrap();
        let f = random_function(grid, 8, 11);
        let p = FlowProfile::power_law(1.0, 1.0).unwrap();
        for &t in &[1.0, 5.0] {
            let exact = time_average(&f, &p, t).unwrap();
            let oracle = time_average_quadrature(&f, &p, t, 1e-12).unwrap();
            for (i, k, c) in exact.iter_coeffs() {
                assert!(
                    (c - oracle.coeff(i, k)).norm() < 1e-9,
                    "t={t} node={i} k={k}"
                );
            }
        }
    }

    #[test]
    fn projection_annihilates_everything() {
        let grid = MGrid::graded(8, 1.5).unwrap();
        let f = random_function(grid, 3, 5);
        let g = project_mean(&f);
        assert_eq!(g.l2_norm(), 0.0);
        // Idempotent, and orthogonal to the complement.
        let gg = project_mean(&g);
        assert_eq!(gg.l2_norm(), 0.0);
        let ip = f.inner(&g).unwrap();
        assert_eq!(ip, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn error_vanishes_at_sinc_zero() {
        let grid = MGrid::graded(4, 1.0).unwrap();
        let profile = FlowProfile::constant(1.0).unwrap();
        let f = FiberedFunction::from_samples(grid, 1, |_, k| {
            if k == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let r = averaging_error(&f, &profile, std::f64::consts::PI).unwrap();
        assert!(r.error_l2 < 1e-15);
    }

    #[test]
    fn error_matches_radial_quadrature_oracle() {
        // Mode-1 profile sqrt(m) under the linear-speed flow at T = 100:
        // squared error is the integral of m sinc^2(100 m).
        let grid = MGrid::graded_with_order(256, 2.0, 8).unwrap();
        let d = Descriptor::new()
            .with_mode(
                1,
                ModeShape::Power {
                    amp: Complex64::new(1.0, 0.0),
                    beta: 0.5,
                },
            )
            .unwrap();
        let f = FiberedFunction::from_descriptor(grid, 1, d).unwrap();
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        let r = averaging_error(&f, &profile, 100.0).unwrap();
        let oracle = adaptive_integrate(0.0, 1.0, 1e-13, 1 << 16, |m| {
            let s = sinc(100.0 * m);
            m * s * s
        })
        .unwrap();
        assert!(
            (r.error_l2 - oracle.sqrt()).abs() < 1e-6,
            "closed form {} vs quadrature {}",
            r.error_l2,
            oracle.sqrt()
        );
    }

    #[test]
    fn error_decays_over_decades() {
        let grid = MGrid::graded_with_order(128, 3.0, 2).unwrap();
        let f = random_function(grid, 8, 9);
        let p = FlowProfile::power_law(1.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for j in 0..=4 {
            let t = 10f64.powi(j);
            let e = averaging_error(&f, &p, t).unwrap().error_l2;
            assert!(e < prev, "T = {t}: {e} vs previous {prev}");
            prev = e;
        }
    }
}
