//! Reproducible families of test functions with known regularity margins:
//! the inputs every experiment draws from.

use crate::error::{Error, Result};
use crate::fibered::{Descriptor, FiberedFunction, ModeShape};
use crate::grid::MGrid;
use crate::params::SpectralParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Margin above the critical radial decay and below the critical mode
/// decay. Keeps generated members strictly inside the space instead of on
/// its boundary, where the seminorm integral diverges.
pub const MEMBERSHIP_MARGIN: f64 = 0.05;

/// Which construction a generated family uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Single-mode members with the near-extremal radial profile.
    SeparableExtremal,
    /// Random phases with power-law mode decay and modulated radial powers.
    RandomDecay,
    /// Polynomial bumps vanishing quadratically at the degenerate end.
    SmoothBump,
}

/// Deterministic recipe for an ensemble.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub params: SpectralParams,
    pub kmax: usize,
    pub count: usize,
    pub seed: u64,
    pub family: Family,
}

/// Single-mode function `m^beta` on mode `k`, descriptor attached. The
/// probe family for the Hölder-decay equality case and the density-of-states
/// exponent.
pub fn separable(k: i64, beta: f64, grid: &MGrid, kmax: usize) -> Result<FiberedFunction> {
    if k == 0 {
        return Err(Error::Parameter(
            "mode 0 is pinned to zero; separable members need k != 0".into(),
        ));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!(
            "radial exponent must be a finite nonnegative real, got {beta}"
        )));
    }
    let d = Descriptor::new().with_mode(
        k,
        ModeShape::Power {
            amp: Complex64::new(1.0, 0.0),
            beta,
        },
    )?;
    FiberedFunction::from_descriptor(grid.clone(), kmax, d)
}

/// Generates `spec.count` members on the given grid. Member `j` draws from
/// a generator seeded with `seed ^ j`, so generation is reproducible member
/// by member and safe to parallelize.
pub fn generate(spec: &EnsembleSpec, grid: &MGrid) -> Result<Vec<FiberedFunction>> {
    (0..spec.count)
        .map(|j| generate_member(spec, grid, j))
        .collect()
}

fn generate_member(spec: &EnsembleSpec, grid: &MGrid, j: usize) -> Result<FiberedFunction> {
    if spec.kmax == 0 {
        return Err(Error::Parameter("need kmax >= 1".into()));
    }
    let p = &spec.params;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ j as u64);
    let beta = p.s - 0.5 + MEMBERSHIP_MARGIN;
    let mode_decay = p.gamma + 0.5 + MEMBERSHIP_MARGIN;
    let mut descriptor = Descriptor::new();
    match spec.family {
        Family::SeparableExtremal => {
            let k = (j % spec.kmax) as i64 + 1;
            descriptor = descriptor.with_mode(
                k,
                ModeShape::Power {
                    amp: unit_phase(&mut rng),
                    beta,
                },
            )?;
        }
        Family::RandomDecay => {
            for k in 1..=spec.kmax as i64 {
                for mode in [k, -k] {
                    let amp = unit_phase(&mut rng) * (k as f64).powf(-mode_decay);
                    descriptor = descriptor.with_mode(
                        mode,
                        ModeShape::ModulatedPower {
                            amp,
                            beta,
                            depth: rng.gen_range(0.05..0.3),
                            freq: rng.gen_range(1.0..6.0),
                            phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        },
                    )?;
                }
            }
        }
        Family::SmoothBump => {
            for k in 1..=spec.kmax as i64 {
                for mode in [k, -k] {
                    let amp = unit_phase(&mut rng) * (k as f64).powf(-mode_decay);
                    let tilt = rng.gen_range(-0.5..0.5);
                    // m^2 (3 + t - (2 + t) m): vanishes quadratically at 0,
                    // equals 1 at m = 1.
                    descriptor = descriptor.with_mode(
                        mode,
                        ModeShape::Poly {
                            amp,
                            coeffs: vec![0.0, 0.0, 3.0 + tilt, -(2.0 + tilt)],
                        },
                    )?;
                }
            }
        }
    }
    FiberedFunction::from_descriptor(grid.clone(), spec.kmax, descriptor)
}

fn unit_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::new(theta.cos(), theta.sin())
}

/// Scales each member to unit full norm. Fails on members with zero norm.
pub fn normalized(
    members: &[FiberedFunction],
    p: &SpectralParams,
) -> Result<Vec<FiberedFunction>> {
    members
        .iter()
        .map(|f| {
            let total = crate::sobolev::full_norm(f, p)?.total.sqrt();
            if total == 0.0 {
                return Err(Error::Parameter(
                    "cannot normalize a zero-norm member".into(),
                ));
            }
            Ok(f.scaled(Complex64::new(1.0 / total, 0.0)))
        })
        .collect()
}
