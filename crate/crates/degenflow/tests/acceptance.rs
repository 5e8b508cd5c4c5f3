//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantity next to its pinned tolerance. Run with
//! `cargo test -p degenflow --test acceptance -- --nocapture` to see every
//! line.

use degenflow::ensemble::{self, EnsembleSpec, Family};
use degenflow::evolution;
use degenflow::experiments;
use degenflow::sobolev;
use degenflow::spectral::{self, Band};
use degenflow::toy::EnergyBranch;
use degenflow::{Descriptor, FiberedFunction, FlowProfile, MGrid, ModeShape, SpectralParams};
use num_complex::Complex64;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn default_params() -> SpectralParams {
    SpectralParams::new(0.75, 0.0, 1.0).unwrap()
}

fn default_grid() -> MGrid {
    MGrid::graded(128, 3.0).unwrap()
}

fn ensemble_members(params: SpectralParams, kmax: usize, count: usize) -> Vec<FiberedFunction> {
    let spec = EnsembleSpec {
        params,
        kmax,
        count,
        seed: 7,
        family: Family::RandomDecay,
    };
    ensemble::generate(&spec, &default_grid()).unwrap()
}

#[test]
fn criterion_01_uniform_rate_bound() {
    let params = default_params();
    let members =
        ensemble::normalized(&ensemble_members(params, 32, 16), &params).unwrap();
    let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
    let t_grid = experiments::geometric_grid(10.0, 1e4, 25).unwrap();
    let fit = experiments::rate_experiment(&members, &profile, &t_grid).unwrap();
    let predicted = -params.rate();
    let check = experiments::envelope_check(&fit, predicted, 0.15).unwrap();
    report(
        "criterion 1 (uniform rate bound)",
        check.passed,
        &format!(
            "16 normalized members, T in [10, 1e4]: fitted slope {:.4}, envelope at T^{:.6} with log tolerance 0.15, max log excess {:.3}",
            fit.fitted_slope, predicted, check.max_log_excess
        ),
    );
}

#[test]
fn criterion_02_sinc_oracle_equivalence() {
    let params = default_params();
    let grid = MGrid::graded(64, 3.0).unwrap();
    let spec = EnsembleSpec {
        params,
        kmax: 8,
        count: 1,
        seed: 7,
        family: Family::RandomDecay,
    };
    let f = ensemble::generate(&spec, &grid).unwrap().remove(0);
    let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for &t in &[1.0, 5.0, 20.0] {
        let exact = evolution::time_average(&f, &profile, t).unwrap();
        let oracle = evolution::time_average_quadrature(&f, &profile, t, 1e-12).unwrap();
        for (i, k, c) in exact.iter_coeffs() {
            worst = worst.max((c - oracle.coeff(i, k)).norm());
        }
    }
    report(
        "criterion 2 (sinc oracle equivalence)",
        worst < 1e-8,
        &format!("kmax 8, 64 panels, T in {{1, 5, 20}}: max coefficient deviation {worst:.3e} vs 1e-8"),
    );
}

#[test]
fn criterion_03_dos_series_vs_oracle() {
    let mut worst: f64 = 0.0;
    let mut flagged = 0usize;
    for &alpha in &[0.5, 1.0, 2.0] {
        let s = 0.75;
        let gamma = (0.5f64 - s / alpha).max(0.0) + 0.1;
        let params = SpectralParams::new(s, gamma, alpha).unwrap();
        assert!(params.constraint_ok());
        let members = ensemble_members(params, 32, 8);
        let profile = FlowProfile::power_law(alpha, 1.0).unwrap();
        for j in 1..=9 {
            let level = j as f64 / 10.0;
            for f in &members {
                let (lambda, _) = spectral::shift_off_resonance(f, &profile, level).unwrap();
                let series = spectral::dos_series(f, f, &params, lambda, 1e-12).unwrap();
                let h = spectral::default_h_sequence(lambda, 1.0);
                let oracle = spectral::dos_oracle(f, f, &profile, lambda, &h, 1e-8).unwrap();
                if !oracle.converged {
                    flagged += 1;
                }
                let rel = (series.series_value - oracle.value).norm()
                    / (1.0 + oracle.value.norm());
                worst = worst.max(rel);
            }
        }
    }
    report(
        "criterion 3 (dos series vs finite-difference oracle)",
        worst < 1e-3 && flagged == 0,
        &format!(
            "alpha in {{0.5, 1, 2}}, 9 levels, 8 members each: worst relative disagreement {worst:.3e} vs 1e-3, {flagged} flagged"
        ),
    );
}

#[test]
fn criterion_04_dos_exponent() {
    // Boundary family m^{s-1/2}: exact power law, slope pinned to 0.05.
    let params = default_params();
    let grid = default_grid();
    let extremal = ensemble::separable(1, params.s - 0.5, &grid, 2).unwrap();
    let lambdas = experiments::geometric_grid(1e-3, 1e-1, 13).unwrap();
    let samples: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let d = spectral::dos_series(&extremal, &extremal, &params, l, 1e-12).unwrap();
            (l, d.series_value.norm())
        })
        .collect();
    let slope = spectral::dos_slope(&samples).unwrap();
    let expected = params.dos_exponent();
    let extremal_ok = (slope - expected).abs() < 0.05;

    // Random ensemble: normalized envelope must decay at least this fast.
    let members = ensemble_members(params, 16, 8);
    let fit = spectral::dos_bound_envelope(&members, &params, &lambdas, 1e-12).unwrap();
    let ensemble_ok = !fit.degenerate && fit.slope >= expected - 0.1;
    report(
        "criterion 4 (dos exponent)",
        extremal_ok && ensemble_ok,
        &format!(
            "extremal slope {slope:.4} vs {expected:.4} (tolerance 0.05); random-ensemble envelope slope {:.4} >= {:.4}",
            fit.slope,
            expected - 0.1
        ),
    );
}

#[test]
fn criterion_05_remainder_decay() {
    let params = default_params();
    let lambda = 0.3;
    let h = spectral::default_h_sequence(lambda, 1.0);
    let data = spectral::remainder_decay_probe(&params, lambda, &h, 200_000);
    let slope = spectral::dos_slope(&data).unwrap();
    let expected = 2.0 * params.gamma + 2.0 * params.s / params.alpha - 1.0;
    report(
        "criterion 5 (remainder decay)",
        (slope - expected).abs() < 0.15,
        &format!(
            "log-log slope of |R(h)| over seven halvings: {slope:.4} vs {expected:.4} (tolerance 0.15)"
        ),
    );
}

#[test]
fn criterion_06_toy_density_of_states() {
    let unit = |_: f64| Complex64::new(1.0, 0.0);

    // Linear branch on the window (0, 2): dos = 1/2 everywhere inside.
    let linear = EnergyBranch::polynomial(vec![0.0, 2.0], (-0.1, 2.1)).unwrap();
    let mut worst_linear: f64 = 0.0;
    for i in 0..20 {
        let lambda = 0.05 + 1.9 * i as f64 / 19.0;
        let exact = linear.dos(lambda, unit).unwrap();
        let h0 = linear.step_guard(lambda).min(0.02);
        let oracle = linear.dos_quotient(lambda, unit, h0, 6).unwrap();
        worst_linear = worst_linear.max((exact - oracle.value).norm());
    }

    // Quadratic branch (m - 1/2)^2: double preimages, dos = 1/sqrt(lambda).
    let quadratic = EnergyBranch::polynomial(vec![0.25, -1.0, 1.0], (-0.1, 0.5)).unwrap();
    let mut worst_quadratic: f64 = 0.0;
    for i in 0..20 {
        let lambda = 0.01 + 0.225 * i as f64 / 19.0;
        let exact = quadratic.dos(lambda, unit).unwrap();
        let h0 = quadratic.step_guard(lambda).min(0.002);
        let oracle = quadratic.dos_quotient(lambda, unit, h0, 6).unwrap();
        worst_quadratic = worst_quadratic.max((exact - oracle.value).norm());
    }

    let double = quadratic.dos(0.0625, unit).unwrap();
    let double_ok = (double.re - 4.0).abs() < 1e-6 && double.im == 0.0;
    report(
        "criterion 6 (toy density of states)",
        worst_linear < 1e-6 && worst_quadratic < 1e-6 && double_ok,
        &format!(
            "20 regular levels: linear worst {worst_linear:.3e}, quadratic worst {worst_quadratic:.3e} (vs 1e-6); double-preimage value {} vs 4.0",
            double.re
        ),
    );
}

#[test]
fn criterion_07_norm_analytics() {
    let params = default_params();
    let grid = MGrid::graded_with_order(64, 2.0, 4).unwrap();
    let d = Descriptor::new()
        .with_mode(
            1,
            ModeShape::Power {
                amp: Complex64::new(1.0, 0.0),
                beta: 1.0,
            },
        )
        .unwrap();
    let f = FiberedFunction::from_descriptor(grid, 2, d).unwrap();
    let r = sobolev::full_norm(&f, &params).unwrap();
    report(
        "criterion 7 (norm analytics)",
        (r.total - 3.0).abs() < 1e-6,
        &format!(
            "linear radial profile: l2 {:.9} + seminorm {:.9} = {:.9} vs 3.0 (tolerance 1e-6)",
            r.l2_part, r.seminorm_part, r.total
        ),
    );
}

#[test]
fn criterion_08_holder_embeddings() {
    let params = default_params();
    let members = ensemble_members(params, 16, 16);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut all_finite = true;
    for f in &members {
        let h = sobolev::holder_constants(f, &params);
        let fourier = sobolev::fourier_holder_constant(f, &params);
        all_finite &= h.pairwise.is_finite() && h.decay.is_finite() && fourier.is_finite();
        worst_gap = worst_gap.max(fourier - h.pairwise);
    }
    report(
        "criterion 8 (Holder embeddings)",
        all_finite && worst_gap <= 1e-10,
        &format!(
            "16 members: all fitted constants finite; max (fourier - pairwise) = {worst_gap:.3e} vs 1e-10"
        ),
    );
}

#[test]
fn criterion_09_spectrum_bands() {
    let kmax = 32;
    let degenerate = FlowProfile::power_law(1.0, 1.0).unwrap();
    let b = spectral::band_spectrum(&degenerate, kmax).unwrap();
    let merged_ok = b.bands
        == vec![Band {
            lo: -(kmax as f64),
            hi: kmax as f64,
        }]
        && !b.gap_at_zero;

    let truncated = FlowProfile::tabulated(vec![0.5, 1.0], vec![0.5, 1.0]).unwrap();
    let t = spectral::band_spectrum(&truncated, 2).unwrap();
    let gap_ok = t.gap_at_zero
        && t.bands
            == vec![
                Band { lo: -2.0, hi: -0.5 },
                Band { lo: 0.0, hi: 0.0 },
                Band { lo: 0.5, hi: 2.0 },
            ];
    report(
        "criterion 9 (spectrum bands)",
        merged_ok && gap_ok,
        &format!(
            "degenerate profile merges to [{}, {}] with no gap; truncated profile leaves the exact gap (0, 0.5)",
            -(kmax as f64),
            kmax as f64
        ),
    );
}

#[test]
fn criterion_10_property_suites() {
    let params = default_params();
    let profile = FlowProfile::power_law(1.0, 1.0).unwrap();
    let members = ensemble_members(params, 8, 4);
    let f = &members[0];
    let g = &members[1];

    // Unitarity and group law of the flow.
    let norm = f.l2_norm();
    let mut unitary = true;
    for &t in &[0.1, 1.0, 10.0] {
        let ft = evolution::flow(f, &profile, t).unwrap();
        unitary &= (ft.l2_norm() - norm).abs() < 1e-12 * (1.0 + norm);
    }
    let ab = evolution::flow(&evolution::flow(f, &profile, 0.9).unwrap(), &profile, 2.3).unwrap();
    let once = evolution::flow(f, &profile, 3.2).unwrap();
    let group = ab
        .iter_coeffs()
        .all(|(i, k, c)| (c - once.coeff(i, k)).norm() < 1e-12);

    // Contraction of the time average.
    let mut contraction = true;
    for &t in &[0.5, 5.0, 500.0] {
        let avg = evolution::time_average(f, &profile, t).unwrap();
        contraction &= avg.l2_norm() <= norm * (1.0 + 1e-12);
    }

    // Monotone distribution with full variation, sesquilinear mode sums.
    let mut monotone = true;
    let mut prev = 0.0;
    for i in 0..=60 {
        let lambda = -9.0 + 18.0 * i as f64 / 60.0;
        let v = spectral::distribution(f, f, &profile, lambda).unwrap().re;
        monotone &= v >= prev - 1e-12;
        prev = v;
    }
    monotone &= (prev - f.l2_norm_sq()).abs() < 1e-12;
    let a = Complex64::new(0.8, -0.6);
    let lhs = spectral::dos_series(&f.scaled(a), g, &params, 0.37, 1e-14)
        .unwrap()
        .series_value;
    let rhs = a
        * spectral::dos_series(f, g, &params, 0.37, 1e-14)
            .unwrap()
            .series_value;
    let sesquilinear = (lhs - rhs).norm() < 1e-12
        && (spectral::dos_series(f, &g.scaled(a), &params, 0.37, 1e-14)
            .unwrap()
            .series_value
            - a.conj()
                * spectral::dos_series(f, g, &params, 0.37, 1e-14)
                    .unwrap()
                    .series_value)
            .norm()
            < 1e-12;

    // Seeded reproducibility, bit for bit.
    let again = ensemble_members(params, 8, 4);
    let reproducible = members.iter().zip(again.iter()).all(|(x, y)| {
        x.iter_coeffs()
            .all(|(i, k, c)| c.re.to_bits() == y.coeff(i, k).re.to_bits()
                && c.im.to_bits() == y.coeff(i, k).im.to_bits())
    });

    let all = unitary && group && contraction && monotone && sesquilinear && reproducible;
    report(
        "criterion 10 (property suites)",
        all,
        &format!(
            "unitarity {unitary}, group law {group}, contraction {contraction}, distribution monotone+variation {monotone}, sesquilinearity {sesquilinear}, seeded reproducibility {reproducible}"
        ),
    );
}
