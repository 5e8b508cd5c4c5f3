//! Spectrum of the generator and its density of states: band structure from
//! interval arithmetic, the spectral distribution function by grid
//! quadrature, the density of states as an explicit mode sum, and an
//! independent finite-difference oracle with the near-degenerate remainder
//! split out.

use crate::error::{Error, Result};
use crate::fibered::FiberedFunction;
use crate::numeric::{gl_integrate_complex, kahan_sum, linear_fit, richardson};
use crate::params::SpectralParams;
use crate::profile::FlowProfile;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A closed spectral band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

/// Band structure of the generator, merged and sorted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSpectrum {
    pub bands: Vec<Band>,
    /// True when the minimum speed is positive, which opens a gap around
    /// zero.
    pub gap_at_zero: bool,
}

/// Bands `k * [min speed, max speed]` for `|k| <= kmax`, merged where they
/// overlap or touch, sorted by left endpoint. Exact interval arithmetic on
/// the profile's extremal speeds.
pub fn band_spectrum(profile: &FlowProfile, kmax: usize) -> Result<BandSpectrum> {
    if kmax < 1 {
        return Err(Error::Parameter("need kmax >= 1".into()));
    }
    let lo_speed = profile.min_speed();
    let hi_speed = profile.max_speed();
    let mut raw: Vec<Band> = (-(kmax as i64)..=(kmax as i64))
        .map(|k| {
            let a = k as f64 * lo_speed;
            let b = k as f64 * hi_speed;
            Band {
                lo: a.min(b),
                hi: a.max(b),
            }
        })
        .collect();
    raw.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut bands: Vec<Band> = Vec::new();
    for b in raw {
        match bands.last_mut() {
            Some(last) if b.lo <= last.hi => last.hi = last.hi.max(b.hi),
            _ => bands.push(b),
        }
    }
    Ok(BandSpectrum {
        bands,
        gap_at_zero: lo_speed > 0.0,
    })
}

/// Spectral distribution `(E(lambda) f, g)` by grid quadrature: mass of all
/// mode eigenvalues at or below `lambda`.
pub fn distribution(
    f: &FiberedFunction,
    g: &FiberedFunction,
    profile: &FlowProfile,
    lambda: f64,
) -> Result<Complex64> {
    f.check_compatible(g)?;
    let kmax = f.kmax() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..f.grid().len() {
        let speed = profile.speed(f.grid().node(i))?;
        let w = f.grid().weight(i);
        for k in -kmax..=kmax {
            if k == 0 || k as f64 * speed > lambda {
                continue;
            }
            acc += f.coeff(i, k) * g.coeff(i, k).conj() * w;
        }
    }
    Ok(acc)
}

/// One density-of-states sample produced by the mode sum.
#[derive(Debug, Clone)]
pub struct DosSample {
    pub lambda: f64,
    pub series_value: Complex64,
    /// Filled in by drivers that also run the finite-difference oracle.
    pub oracle_value: Option<Complex64>,
    /// First mode index of the sum.
    pub k0: i64,
    pub terms_used: usize,
    /// Bound on the dropped tail, from the mode-decay envelope.
    pub tail_bound: f64,
    pub converged: bool,
}

/// Density of states at `lambda != 0` for the power-law flow `m^alpha`, as
/// the explicit mode sum
/// `sum_{k >= k0} (alpha k)^{-1} (|lambda|/k)^{1/alpha - 1} c_k(m_k) conj(d_k(m_k))`
/// with `m_k = (|lambda|/k)^{1/alpha}`; negative levels use the mirrored
/// modes. Truncates once the analytic tail bound drops below `tol`.
pub fn dos_series(
    f: &FiberedFunction,
    g: &FiberedFunction,
    p: &SpectralParams,
    lambda: f64,
    tol: f64,
) -> Result<DosSample> {
    f.check_compatible(g)?;
    if lambda == 0.0 {
        return Err(Error::Domain(
            "density of states is evaluated away from level zero".into(),
        ));
    }
    if lambda.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "level {lambda} outside the admissible window (-1, 1)"
        )));
    }
    if !p.constraint_ok() {
        return Err(Error::Parameter(format!(
            "mode sum not summable: gamma + s/alpha = {} <= 1/2",
            p.gamma + p.s / p.alpha
        )));
    }
    let alpha = p.alpha;
    let q = p.tail_exponent();
    let magnitude = lambda.abs();
    let sign = if lambda > 0.0 { 1i64 } else { -1i64 };
    let k0 = (magnitude.ceil() as i64).max(1);
    let kcap = f.kmax().max(g.kmax()) as i64;

    let mut value = Complex64::new(0.0, 0.0);
    let mut terms_used = 0;
    let mut envelope_const: f64 = 0.0;
    let mut tail_bound = 0.0;
    let mut converged = false;
    for k in k0..=kcap {
        let kf = k as f64;
        let m_k = (magnitude / kf).powf(1.0 / alpha);
        if m_k > 1.0 {
            continue;
        }
        let prefactor = (magnitude / kf).powf(1.0 / alpha - 1.0) / (alpha * kf);
        let term = f.coeff_at(m_k, sign * k) * g.coeff_at(m_k, sign * k).conj() * prefactor;
        value += term;
        terms_used += 1;
        envelope_const = envelope_const.max(term.norm() * kf.powf(q));
        // Tail of sum_{j > k} C j^{-q} with C from the observed terms.
        tail_bound = envelope_const * kf.powf(1.0 - q) / (q - 1.0);
        if tail_bound < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        // Band-limited inputs: all remaining terms vanish identically.
        tail_bound = 0.0;
        converged = true;
    }
    Ok(DosSample {
        lambda,
        series_value: value,
        oracle_value: None,
        k0,
        terms_used,
        tail_bound,
        converged,
    })
}

/// Result of the finite-difference oracle.
#[derive(Debug, Clone)]
pub struct DosOracleResult {
    /// Extrapolated derivative of the spectral distribution.
    pub value: Complex64,
    /// Raw difference quotients, one per step size.
    pub estimates: Vec<Complex64>,
    /// `(h, |R(h)|)`: magnitude of the near-degenerate remainder, the part
    /// of the difference quotient carried by fibers below the band-overlap
    /// scale `(h/c)^{1/alpha}`.
    pub remainders: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Default step sequence for the oracle: `h_j = h0 / 2^j`, `j = 0..=6`, with
/// `h0 = |lambda|/8` shrunk so the whole difference stays inside the
/// admissible window.
pub fn default_h_sequence(lambda: f64, window: f64) -> Vec<f64> {
    let slack = (window - lambda.abs()) * 0.5;
    let h0 = if slack > 0.0 {
        (lambda.abs() / 8.0).min(slack)
    } else {
        lambda.abs() / 8.0
    };
    (0..=6).map(|j| h0 / 2f64.powi(j)).collect()
}

/// Density of states at `lambda != 0` by difference quotients of the
/// spectral distribution, Richardson-extrapolated over the step sequence.
///
/// Each quotient is computed in the continuum, mode by mode: the fibers
/// whose eigenvalue crosses the level between `lambda` and `lambda + h` form
/// one interval per mode, integrated by Gauss quadrature. The part of the
/// quotient below the band-overlap scale is returned separately as `R(h)`;
/// it must vanish as `h -> 0` for members of the space.
///
/// Non-convergent extrapolation is flagged in the result, not fatal.
pub fn dos_oracle(
    f: &FiberedFunction,
    g: &FiberedFunction,
    profile: &FlowProfile,
    lambda: f64,
    h_seq: &[f64],
    tol: f64,
) -> Result<DosOracleResult> {
    f.check_compatible(g)?;
    if lambda == 0.0 {
        return Err(Error::Domain(
            "density of states is evaluated away from level zero".into(),
        ));
    }
    if !profile.is_pure_power_law() {
        return Err(Error::Parameter(
            "finite-difference oracle requires a pure power-law profile".into(),
        ));
    }
    if h_seq.is_empty() || h_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter(
            "step sequence must be decreasing and non-empty".into(),
        ));
    }
    if h_seq[0] >= lambda.abs() / 2.0 {
        return Err(Error::Parameter(format!(
            "largest step {} must stay below |lambda|/2",
            h_seq[0]
        )));
    }
    let alpha = profile.alpha().expect("power-law profile");
    let c = profile.scale().expect("power-law profile");
    let magnitude = lambda.abs();
    let sign = if lambda > 0.0 { 1i64 } else { -1i64 };
    let kcap = f.kmax().max(g.kmax()) as i64;

    let mut estimates = Vec::with_capacity(h_seq.len());
    let mut remainders = Vec::with_capacity(h_seq.len());
    for &h in h_seq {
        let m_split = (h / c).powf(1.0 / alpha);
        let mut interior = Complex64::new(0.0, 0.0);
        let mut remainder = Complex64::new(0.0, 0.0);
        for k in 1..=kcap {
            let kf = k as f64;
            // m-interval whose mode-k eigenvalue crosses (lambda, lambda+h].
            let (lo_level, hi_level) = if sign > 0 {
                (magnitude, magnitude + h)
            } else {
                (magnitude - h, magnitude)
            };
            let lo = (lo_level / (c * kf)).powf(1.0 / alpha);
            let hi = ((hi_level / (c * kf)).powf(1.0 / alpha)).min(1.0);
            if lo >= 1.0 || hi <= lo {
                continue;
            }
            let mode = sign * k;
            let integrand =
                |m: f64| f.coeff_at(m, mode) * g.coeff_at(m, mode).conj();
            let cut = m_split.clamp(lo, hi);
            if cut > lo {
                remainder += gl_integrate_complex(lo, cut, 8, integrand);
            }
            if hi > cut {
                interior += gl_integrate_complex(cut, hi, 8, integrand);
            }
        }
        estimates.push((interior + remainder) / h);
        remainders.push((h, (remainder / h).norm()));
    }
    let ex = richardson(&estimates, tol);
    Ok(DosOracleResult {
        value: ex.value,
        estimates,
        remainders,
        converged: ex.converged || ex.last_delta <= 10.0 * tol * (1.0 + ex.value.norm()),
    })
}

/// Fitted envelope of the density of states over an ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeFit {
    /// Envelope constant (exponential of the fit intercept).
    pub constant: f64,
    /// Fitted log-log slope of the normalized supremum against the level.
    pub slope: f64,
    /// `(lambda, sup over pairs of |dos| / (||f|| ||g||))`.
    pub samples: Vec<(f64, f64)>,
    /// True when the data could not support a fit (all-zero ensemble).
    pub degenerate: bool,
}

/// Measures the density-of-states envelope: at each level the supremum over
/// ordered ensemble pairs of `|dos(f, g, lambda)| / (||f|| ||g||)`, then a
/// log-log fit of the supremum against the level. Norms are the full
/// mixed-regularity norms.
pub fn dos_bound_envelope(
    ensemble: &[FiberedFunction],
    p: &SpectralParams,
    lambdas: &[f64],
    tol: f64,
) -> Result<EnvelopeFit> {
    if ensemble.is_empty() {
        return Err(Error::Parameter("empty ensemble".into()));
    }
    let norms: Vec<f64> = ensemble
        .iter()
        .map(|f| crate::sobolev::full_norm(f, p).map(|r| r.total.sqrt()))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut sup: f64 = 0.0;
        for (i, fi) in ensemble.iter().enumerate() {
            for (j, fj) in ensemble.iter().enumerate() {
                if norms[i] == 0.0 || norms[j] == 0.0 {
                    continue;
                }
                let d = dos_series(fi, fj, p, lambda, tol)?;
                sup = sup.max(d.series_value.norm() / (norms[i] * norms[j]));
            }
        }
        samples.push((lambda, sup));
    }
    match crate::numeric::log_log_slope(&samples) {
        Some((slope, intercept, _)) => Ok(EnvelopeFit {
            constant: intercept.exp(),
            slope,
            samples,
            degenerate: false,
        }),
        None => Ok(EnvelopeFit {
            constant: 0.0,
            slope: 0.0,
            samples,
            degenerate: true,
        }),
    }
}

/// Measures `|R(h)|` for the family that saturates the mode-decay envelope:
/// per-mode radial profiles `k^{-gamma} m^{s - 1/2}` up to `kmax_probe`.
/// The per-mode crossing integrals are powers and evaluate in closed form,
/// so this measures the aggregation of the discrete band structure, which
/// should scale like `h^{2 gamma + 2 s/alpha - 1}`.
pub fn remainder_decay_probe(
    p: &SpectralParams,
    lambda: f64,
    h_seq: &[f64],
    kmax_probe: usize,
) -> Vec<(f64, f64)> {
    let alpha = p.alpha;
    let two_s = 2.0 * p.s;
    let mut out = Vec::with_capacity(h_seq.len());
    for &h in h_seq {
        let m_split = h.powf(1.0 / alpha);
        let acc = kahan_sum((1..=kmax_probe).map(|k| {
            let kf = k as f64;
            let lo = (lambda / kf).powf(1.0 / alpha);
            if lo >= m_split {
                return 0.0;
            }
            let hi = ((lambda + h) / kf).powf(1.0 / alpha).min(m_split);
            if hi <= lo {
                return 0.0;
            }
            // integral of m^{2s-1} over the clipped crossing interval
            kf.powf(-2.0 * p.gamma) * (hi.powf(two_s) - lo.powf(two_s)) / two_s
        }));
        out.push((h, acc / h));
    }
    out
}

/// Nudges a level off the grid resonances: if `lambda` lies within `1e-6`
/// of a populated mode eigenvalue at some node, it is shifted by a handful
/// of ulps until clear of exact equality. Returns the level and whether a
/// shift happened.
pub fn shift_off_resonance(
    f: &FiberedFunction,
    profile: &FlowProfile,
    lambda: f64,
) -> Result<(f64, bool)> {
    let kmax = f.kmax() as i64;
    let mut shifted = lambda;
    let mut any = false;
    'outer: for _ in 0..64 {
        for i in 0..f.grid().len() {
            let speed = profile.speed(f.grid().node(i))?;
            for k in -kmax..=kmax {
                if k == 0 {
                    continue;
                }
                let ev = k as f64 * speed;
                if (shifted - ev).abs() < 1e-6 && shifted != ev {
                    // close but unambiguous: fine
                    continue;
                }
                if shifted == ev {
                    shifted += f64::EPSILON * 8.0 * (1.0 + shifted.abs());
                    any = true;
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok((shifted, any))
}

/// Least-squares slope of `log dos` against `log lambda` for a sequence of
/// samples; helper for exponent measurements.
pub fn dos_slope(samples: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.0 > 0.0 && s.1 > 0.0)
        .map(|s| (s.0.ln(), s.1.ln()))
        .collect();
    linear_fit(&logs).map(|(slope, _, _)| slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibered::{Descriptor, ModeShape};
    use crate::grid::MGrid;

    fn one(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn separable(k: i64, beta: f64, grid: MGrid, kmax: usize) -> FiberedFunction {
        let d = Descriptor::new()
            .with_mode(k, ModeShape::Power { amp: one(1.0), beta })
            .unwrap();
        FiberedFunction::from_descriptor(grid, kmax, d).unwrap()
    }

    #[test]
    fn constant_speed_gives_point_lattice() {
        let p = FlowProfile::constant(1.0).unwrap();
        let b = band_spectrum(&p, 3).unwrap();
        let expected: Vec<Band> = (-3..=3).map(|k| Band { lo: k as f64, hi: k as f64 }).collect();
        assert_eq!(b.bands, expected);
        assert!(b.gap_at_zero);
    }

    #[test]
    fn degenerate_bands_merge_through_zero() {
        let p = FlowProfile::power_law(1.0, 1.0).unwrap();
        let b = band_spectrum(&p, 3).unwrap();
        assert_eq!(b.bands, vec![Band { lo: -3.0, hi: 3.0 }]);
        assert!(!b.gap_at_zero);
    }

    #[test]
    fn truncated_profile_opens_gap() {
        let p = FlowProfile::tabulated(vec![0.5, 1.0], vec![0.5, 1.0]).unwrap();
        let b = band_spectrum(&p, 2).unwrap();
        assert_eq!(
            b.bands,
            vec![
                Band { lo: -2.0, hi: -0.5 },
                Band { lo: 0.0, hi: 0.0 },
                Band { lo: 0.5, hi: 2.0 },
            ]
        );
        assert!(b.gap_at_zero);
    }

    #[test]
    fn distribution_saturates_and_vanishes() {
        let grid = MGrid::graded_with_order(64, 2.0, 2).unwrap();
        let f = separable(1, 1.0, grid, 2);
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        let all = distribution(&f, &f, &profile, 10.0).unwrap();
        let ip = f.inner(&f).unwrap();
        assert!((all - ip).norm() < 1e-14);
        let none = distribution(&f, &f, &profile, -10.0).unwrap();
        assert_eq!(none, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn distribution_measures_sublevel_mass() {
        // Mode-1 unit profile under linear speed: mass below lambda is the
        // measure of {m <= lambda}.
        let grid = MGrid::graded_with_order(256, 1.0, 2).unwrap();
        let f = separable(1, 0.0, grid, 1);
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        let v = distribution(&f, &f, &profile, 0.5).unwrap();
        assert!((v.re - 0.5).abs() < 5e-3, "{v}");
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn distribution_is_monotone_with_full_variation() {
        let grid = MGrid::graded_with_order(32, 2.0, 2).unwrap();
        let f = FiberedFunction::from_samples(grid, 4, |m, k| {
            Complex64::new(m / (1.0 + k.abs() as f64), 0.1 * m)
        });
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        let mut prev = 0.0;
        for i in 0..=80 {
            let lambda = -5.0 + 10.0 * i as f64 / 80.0;
            let v = distribution(&f, &f, &profile, lambda).unwrap().re;
            assert!(v >= prev - 1e-12, "non-monotone at {lambda}");
            prev = v;
        }
        assert!((prev - f.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn extremal_mode_sum_is_square_root() {
        // Mode-1 profile m^{1/4} at s = 3/4, alpha = 1: dos(lambda) =
        // sqrt(lambda), single term.
        let grid = MGrid::graded_with_order(64, 2.0, 2).unwrap();
        let f = separable(1, 0.25, grid, 2);
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let d = dos_series(&f, &f, &p, 0.25, 1e-10).unwrap();
        assert_eq!(d.k0, 1);
        assert!((d.series_value.re - 0.5).abs() < 1e-12, "{}", d.series_value);
        assert!(d.series_value.im.abs() < 1e-15);
    }

    #[test]
    fn empty_mode_range_sums_to_zero() {
        // Only the mirrored mode is populated: positive levels see nothing.
        let grid = MGrid::graded_with_order(16, 2.0, 2).unwrap();
        let f = separable(-1, 1.0, grid, 2);
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let d = dos_series(&f, &f, &p, 0.3, 1e-10).unwrap();
        assert_eq!(d.series_value, Complex64::new(0.0, 0.0));
        // And the mirrored level sees the full single-term value.
        let dm = dos_series(&f, &f, &p, -0.3, 1e-10).unwrap();
        assert!(dm.series_value.re > 0.0);
    }

    #[test]
    fn series_rejects_bad_inputs() {
        let grid = MGrid::graded(8, 2.0).unwrap();
        let f = separable(1, 1.0, grid, 2);
        let ok = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        assert!(matches!(
            dos_series(&f, &f, &ok, 0.0, 1e-8),
            Err(Error::Domain(_))
        ));
        let bad = SpectralParams::new(0.75, 0.0, 2.0).unwrap();
        assert!(matches!(
            dos_series(&f, &f, &bad, 0.3, 1e-8),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn oracle_recovers_piecewise_linear_distribution() {
        // Constant unit mode-1 profile: F(lambda) = min(lambda, 1) on the
        // positive axis, derivative 1 inside (0, 1).
        let grid = MGrid::graded_with_order(32, 2.0, 2).unwrap();
        let f = separable(1, 0.0, grid, 2);
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        let h = default_h_sequence(0.5, 1.0);
        let r = dos_oracle(&f, &f, &profile, 0.5, &h, 1e-8).unwrap();
        assert!(r.converged);
        assert!((r.value.re - 1.0).abs() < 1e-6, "{}", r.value);
        // Above the band edge the distribution is constant.
        let h = default_h_sequence(1.5, 2.0);
        let r = dos_oracle(&f, &f, &profile, 1.5, &h, 1e-8).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn oracle_matches_series_on_descriptor_function() {
        let grid = MGrid::graded_with_order(64, 2.0, 2).unwrap();
        let d = Descriptor::new()
            .with_mode(1, ModeShape::Power { amp: one(1.0), beta: 0.8 })
            .unwrap()
            .with_mode(
                2,
                ModeShape::ModulatedPower {
                    amp: Complex64::new(0.4, 0.3),
                    beta: 0.6,
                    depth: 0.2,
                    freq: 3.0,
                    phase: 0.5,
                },
            )
            .unwrap()
            .with_mode(3, ModeShape::Power { amp: Complex64::new(0.0, 0.5), beta: 1.2 })
            .unwrap();
        let f = FiberedFunction::from_descriptor(grid, 4, d).unwrap();
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        for &lambda in &[0.2, 0.45, 0.7] {
            let series = dos_series(&f, &f, &p, lambda, 1e-12).unwrap();
            let h = default_h_sequence(lambda, 1.0);
            let oracle = dos_oracle(&f, &f, &profile, lambda, &h, 1e-8).unwrap();
            let err = (series.series_value - oracle.value).norm()
                / (1.0 + oracle.value.norm());
            assert!(err < 1e-6, "lambda {lambda}: series {} oracle {}", series.series_value, oracle.value);
        }
    }

    #[test]
    fn series_is_sesquilinear() {
        let grid = MGrid::graded_with_order(32, 2.0, 2).unwrap();
        let f = separable(1, 0.8, grid.clone(), 3);
        let g = separable(1, 1.3, grid.clone(), 3);
        let h = FiberedFunction::from_descriptor(
            grid,
            3,
            Descriptor::new()
                .with_mode(1, ModeShape::Power { amp: Complex64::new(0.2, 0.7), beta: 0.9 })
                .unwrap(),
        )
        .unwrap();
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let a = Complex64::new(1.3, -0.4);
        let lambda = 0.37;
        // Linear in the first argument.
        let lhs = dos_series(&f.scaled(a), &h, &p, lambda, 1e-14).unwrap().series_value;
        let rhs = a * dos_series(&f, &h, &p, lambda, 1e-14).unwrap().series_value;
        assert!((lhs - rhs).norm() < 1e-12);
        // Conjugate-linear in the second argument.
        let lhs = dos_series(&g, &h.scaled(a), &p, lambda, 1e-14).unwrap().series_value;
        let rhs = a.conj() * dos_series(&g, &h, &p, lambda, 1e-14).unwrap().series_value;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tail_bound_is_sound() {
        // Many-mode function: truncating early never moves the value by
        // more than the reported bound.
        let grid = MGrid::graded_with_order(32, 2.0, 2).unwrap();
        let mut d = Descriptor::new();
        for k in 1..=24i64 {
            d = d
                .with_mode(
                    k,
                    ModeShape::Power {
                        amp: one(1.0 / (k as f64).powf(0.8)),
                        beta: 0.3,
                    },
                )
                .unwrap();
        }
        let f = FiberedFunction::from_descriptor(grid, 24, d).unwrap();
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        // The tail model uses the conservative paper envelope k^{-q}; a
        // loose tolerance exercises early truncation.
        let coarse = dos_series(&f, &f, &p, 0.2, 0.2).unwrap();
        let full = dos_series(&f, &f, &p, 0.2, 0.0).unwrap();
        assert!(coarse.terms_used < full.terms_used);
        let drift = (full.series_value - coarse.series_value).norm();
        assert!(
            drift <= coarse.tail_bound + 1e-15,
            "drift {drift} exceeds bound {}",
            coarse.tail_bound
        );
    }

    #[test]
    fn positivity_for_equal_arguments() {
        let grid = MGrid::graded_with_order(32, 2.0, 2).unwrap();
        let f = separable(1, 0.9, grid, 2);
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        for i in 1..10 {
            let lambda = i as f64 / 10.0;
            let d = dos_series(&f, &f, &p, lambda, 1e-12).unwrap();
            assert!(d.series_value.re >= -1e-12);
            assert_eq!(d.series_value.im, 0.0);
        }
    }

    #[test]
    fn extremal_family_slope_is_the_dos_exponent() {
        // The boundary family m^{s - 1/2} (infinite norm, single mode):
        // unnormalized dos is an exact power law lambda^{2s/alpha - 1}.
        let grid = MGrid::graded_with_order(64, 2.0, 2).unwrap();
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let f = separable(1, p.s - 0.5, grid, 2);
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let lambda = 0.0012 * 1.5f64.powi(i);
                let d = dos_series(&f, &f, &p, lambda, 1e-12).unwrap();
                (lambda, d.series_value.norm())
            })
            .collect();
        let slope = dos_slope(&samples).unwrap();
        assert!(
            (slope - p.dos_exponent()).abs() < 1e-10,
            "slope {} expected {}",
            slope,
            p.dos_exponent()
        );
    }

    #[test]
    fn envelope_fit_recovers_interior_member_slope() {
        // Strict member beta = s - 1/2 + 0.05: normalized envelope has
        // slope (2 beta + 1)/alpha - 1.
        let grid = MGrid::graded_with_order(64, 2.0, 2).unwrap();
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let beta = p.s - 0.5 + 0.05;
        let f = separable(1, beta, grid, 2);
        let lambdas: Vec<f64> = (0..12).map(|i| 0.0012 * 1.5f64.powi(i)).collect();
        let fit = dos_bound_envelope(&[f], &p, &lambdas, 1e-12).unwrap();
        assert!(!fit.degenerate);
        let expected = (2.0 * beta + 1.0) / p.alpha - 1.0;
        assert!(
            (fit.slope - expected).abs() < 1e-6,
            "slope {} expected {expected}",
            fit.slope
        );
    }

    #[test]
    fn envelope_of_zero_ensemble_is_degenerate() {
        let grid = MGrid::graded_with_order(16, 2.0, 2).unwrap();
        let f = FiberedFunction::zero(grid, 2);
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let fit = dos_bound_envelope(&[f], &p, &[0.1, 0.2, 0.4], 1e-12).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.constant, 0.0);
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn remainder_probe_scales_at_the_envelope_rate() {
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let h = default_h_sequence(0.3, 1.0);
        let data = remainder_decay_probe(&p, 0.3, &h, 200_000);
        let slope = dos_slope(&data).unwrap();
        let expected = 2.0 * p.gamma + 2.0 * p.s / p.alpha - 1.0;
        assert!(
            (slope - expected).abs() < 0.1,
            "slope {slope} expected {expected}"
        );
    }

    #[test]
    fn resonance_shift_clears_exact_hits() {
        let grid = MGrid::graded_with_order(8, 1.0, 2).unwrap();
        let f = separable(1, 0.0, grid.clone(), 1);
        let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
        // A node eigenvalue: k = 1 at the first node.
        let node_ev = grid.node(3);
        let (shifted, flagged) = shift_off_resonance(&f, &profile, node_ev).unwrap();
        assert!(flagged);
        assert!(shifted != node_ev);
        let (same, flagged) = shift_off_resonance(&f, &profile, 0.123456).unwrap();
        assert!(!flagged);
        assert_eq!(same, 0.123456);
    }
}
