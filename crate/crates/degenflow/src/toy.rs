//! Single-branch fibered model: each fiber contributes one simple eigenvalue
//! `E(m)` inside an energy window. Regular-value analysis makes the density
//! of states an explicit finite sum over preimages, which the
//! difference-quotient oracle checks.

use crate::error::{Error, Result};
use crate::numeric::{gl_integrate_complex, richardson};
use num_complex::Complex64;

const DERIV_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-14;

/// A C^1 eigenvalue branch over `[0, 1]`: a polynomial or a piecewise
/// polynomial with matching values and derivatives at the junctions, taking
/// values inside the closure of an energy window `(a, b)`.
#[derive(Debug, Clone)]
pub struct EnergyBranch {
    segments: Vec<Segment>,
    window: (f64, f64),
    range: (f64, f64),
}

#[derive(Debug, Clone)]
struct Segment {
    lo: f64,
    hi: f64,
    /// Coefficients in ascending powers of `m`.
    poly: Vec<f64>,
}

impl Segment {
    fn eval(&self, m: f64) -> f64 {
        poly_eval(&self.poly, m)
    }

    fn deriv(&self, m: f64) -> f64 {
        poly_eval(&poly_deriv(&self.poly), m)
    }

    fn is_constant(&self) -> bool {
        let scale = self.poly.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        self.poly
            .iter()
            .skip(1)
            .all(|c| c.abs() <= 1e-14 * (1.0 + scale))
    }
}

impl EnergyBranch {
    /// Branch given by a single polynomial (ascending coefficients) on
    /// `[0, 1]`.
    pub fn polynomial(coeffs: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        Self::piecewise(vec![0.0, 1.0], vec![coeffs], window)
    }

    /// Piecewise polynomial branch. `breakpoints` must start at 0, end at 1,
    /// and increase; adjacent polynomials must match in value and first
    /// derivative at each junction.
    pub fn piecewise(
        breakpoints: Vec<f64>,
        polys: Vec<Vec<f64>>,
        window: (f64, f64),
    ) -> Result<Self> {
        let (a, b) = window;
        if !(a < b) {
            return Err(Error::Parameter(format!(
                "energy window must satisfy a < b, got ({a}, {b})"
            )));
        }
        if breakpoints.len() != polys.len() + 1
            || breakpoints.first() != Some(&0.0)
            || breakpoints.last() != Some(&1.0)
            || !breakpoints.windows(2).all(|w| w[0] < w[1])
        {
            return Err(Error::Parameter(
                "breakpoints must increase from 0 to 1 with one polynomial per piece".into(),
            ));
        }
        let segments: Vec<Segment> = breakpoints
            .windows(2)
            .zip(polys)
            .map(|(bp, poly)| Segment {
                lo: bp[0],
                hi: bp[1],
                poly,
            })
            .collect();
        for w in segments.windows(2) {
            let x = w[0].hi;
            let dv = (w[0].eval(x) - w[1].eval(x)).abs();
            let dd = (w[0].deriv(x) - w[1].deriv(x)).abs();
            if dv > 1e-10 || dd > 1e-10 {
                return Err(Error::Parameter(format!(
                    "branch is not C^1 at m = {x}: value jump {dv}, derivative jump {dd}"
                )));
            }
        }
        let range = branch_range(&segments);
        if range.0 < a - 1e-12 || range.1 > b + 1e-12 {
            return Err(Error::Parameter(format!(
                "branch range [{}, {}] leaves the window closure [{a}, {b}]",
                range.0, range.1
            )));
        }
        Ok(EnergyBranch {
            segments,
            window,
            range,
        })
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Range of the branch over `[0, 1]`.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn eval(&self, m: f64) -> f64 {
        self.segment_at(m).eval(m)
    }

    pub fn deriv(&self, m: f64) -> f64 {
        self.segment_at(m).deriv(m)
    }

    fn segment_at(&self, m: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| m <= s.hi)
            .unwrap_or(self.segments.last().unwrap())
    }

    /// Segments on which the branch is constant, with their values: each one
    /// produces an eigenvalue embedded in the spectrum.
    pub fn constant_segments(&self) -> Vec<(f64, f64, f64)> {
        self.segments
            .iter()
            .filter(|s| s.is_constant())
            .map(|s| (s.poly.first().copied().unwrap_or(0.0), s.lo, s.hi))
            .collect()
    }

    /// All solutions of `E(m) = lambda` in `[0, 1]` with their derivatives.
    /// Requires `lambda` inside the window; fails on embedded eigenvalues
    /// (values attained on a whole segment).
    pub fn preimages(&self, lambda: f64) -> Result<Vec<(f64, f64)>> {
        let (a, b) = self.window;
        if !(lambda > a && lambda < b) {
            return Err(Error::Domain(format!(
                "level {lambda} outside the energy window ({a}, {b})"
            )));
        }
        for (value, lo, hi) in self.constant_segments() {
            if (value - lambda).abs() <= 1e-12 {
                let _ = (lo, hi);
                return Err(Error::EmbeddedEigenvalue { value });
            }
        }
        let mut roots: Vec<f64> = Vec::new();
        for seg in &self.segments {
            let mut shifted = seg.poly.clone();
            if shifted.is_empty() {
                shifted.push(0.0);
            }
            shifted[0] -= lambda;
            for r in poly_roots_in(&shifted, seg.lo, seg.hi) {
                if !roots.iter().any(|&x| (x - r).abs() < 1e-10) {
                    roots.push(r);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        Ok(roots.into_iter().map(|m| (m, self.deriv(m))).collect())
    }

    /// A level is regular when every preimage carries a nonzero derivative
    /// and the level avoids the boundary of the branch range. Embedded
    /// eigenvalues are never regular.
    pub fn is_regular(&self, lambda: f64) -> Result<bool> {
        let (a, b) = self.window;
        if !(lambda > a && lambda < b) {
            return Err(Error::Domain(format!(
                "level {lambda} outside the energy window ({a}, {b})"
            )));
        }
        for (value, _, _) in self.constant_segments() {
            if (value - lambda).abs() <= 1e-12 {
                return Ok(false);
            }
        }
        if (lambda - self.range.0).abs() <= DERIV_TOL || (lambda - self.range.1).abs() <= DERIV_TOL
        {
            return Ok(false);
        }
        let pts = self.preimages(lambda)?;
        Ok(pts.iter().all(|&(_, d)| d.abs() > DERIV_TOL))
    }

    /// Density of states at a regular level: the sum over preimages of the
    /// fiber product divided by the branch speed. Preimages at `m = 0` or
    /// `m = 1` contribute with full weight.
    pub fn dos<F: Fn(f64) -> Complex64>(&self, lambda: f64, products: F) -> Result<Complex64> {
        self.require_regular(lambda)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, d) in self.preimages(lambda)? {
            acc += products(m) / d.abs();
        }
        Ok(acc)
    }

    /// Density of states by difference quotients of the level-set measure:
    /// quadrature of the fiber products over `{lambda < E(m) <= lambda+h}`,
    /// Richardson-extrapolated over `h0 / 2^j`. Boundary preimages whose
    /// crossing interval leaves `[0, 1]` contribute one-sidedly here, unlike
    /// the closed form.
    pub fn dos_quotient<F: Fn(f64) -> Complex64>(
        &self,
        lambda: f64,
        products: F,
        h0: f64,
        levels: usize,
    ) -> Result<ToyOracleResult> {
        self.require_regular(lambda)?;
        if levels < 2 {
            return Err(Error::Parameter("need at least two step levels".into()));
        }
        let guard = self.step_guard(lambda);
        if h0 <= 0.0 || h0 > guard {
            return Err(Error::Parameter(format!(
                "step {h0} outside (0, {guard}]: would cross a critical level"
            )));
        }
        let mut estimates = Vec::with_capacity(levels);
        for j in 0..levels {
            let h = h0 / 2f64.powi(j as i32);
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, d) in self.preimages(lambda)? {
                let seg = self.segment_at(m);
                let (lo, hi) = if d > 0.0 {
                    (m, self.solve_up(seg, m, lambda + h))
                } else {
                    (self.solve_down(seg, m, lambda + h), m)
                };
                acc += gl_integrate_complex(lo, hi, 16, &products);
            }
            estimates.push(acc / h);
        }
        let ex = richardson(&estimates, 1e-9);
        Ok(ToyOracleResult {
            value: ex.value,
            estimates,
            converged: ex.converged,
        })
    }

    /// Largest difference-quotient step that stays clear of critical levels
    /// above `lambda`.
    pub fn step_guard(&self, lambda: f64) -> f64 {
        let mut guard = (self.window.1 - lambda) / 2.0;
        for seg in &self.segments {
            let dpoly = poly_deriv(&seg.poly);
            let mut candidates = vec![seg.lo, seg.hi];
            candidates.extend(poly_roots_in(&dpoly, seg.lo, seg.hi));
            for c in candidates {
                let v = seg.eval(c);
                if v > lambda + DERIV_TOL {
                    guard = guard.min((v - lambda) / 2.0);
                }
            }
        }
        guard
    }

    fn require_regular(&self, lambda: f64) -> Result<()> {
        if self.is_regular(lambda)? {
            return Ok(());
        }
        for (value, _, _) in self.constant_segments() {
            if (value - lambda).abs() <= 1e-12 {
                return Err(Error::EmbeddedEigenvalue { value });
            }
        }
        let detail = if (lambda - self.range.0).abs() <= DERIV_TOL
            || (lambda - self.range.1).abs() <= DERIV_TOL
        {
            format!(
                "level sits on the boundary of the branch range [{}, {}]",
                self.range.0, self.range.1
            )
        } else {
            let crit = self
                .preimages(lambda)?
                .into_iter()
                .find(|&(_, d)| d.abs() <= DERIV_TOL)
                .map(|(m, _)| m)
                .unwrap_or(f64::NAN);
            format!("branch is critical at the preimage m = {crit}")
        };
        Err(Error::NonRegular {
            lambda,
            reason: detail,
        })
    }

    /// Root of `E = target` to the right of `m` within the monotone span.
    fn solve_up(&self, seg: &Segment, m: f64, target: f64) -> f64 {
        let mut shifted = seg.poly.clone();
        shifted[0] -= target;
        bisect_root(&shifted, m, seg.hi).unwrap_or(seg.hi)
    }

    fn solve_down(&self, seg: &Segment, m: f64, target: f64) -> f64 {
        let mut shifted = seg.poly.clone();
        shifted[0] -= target;
        bisect_root(&shifted, seg.lo, m).unwrap_or(seg.lo)
    }
}

/// Result of the difference-quotient oracle.
#[derive(Debug, Clone)]
pub struct ToyOracleResult {
    pub value: Complex64,
    pub estimates: Vec<Complex64>,
    pub converged: bool,
}

fn branch_range(segments: &[Segment]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for seg in segments {
        let dpoly = poly_deriv(&seg.poly);
        let mut candidates = vec![seg.lo, seg.hi];
        candidates.extend(poly_roots_in(&dpoly, seg.lo, seg.hi));
        for c in candidates {
            let v = seg.eval(c);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

pub(crate) fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut v = 0.0;
    for &c in coeffs.iter().rev() {
        v = v * x + c;
    }
    v
}

pub(crate) fn poly_deriv(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &c)| j as f64 * c)
        .collect()
}

/// All roots of a polynomial in `[lo, hi]` by recursive critical-point
/// isolation: between consecutive derivative roots the polynomial is
/// monotone, so a sign change pins exactly one root for bisection.
pub(crate) fn poly_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let degree = coeffs
        .iter()
        .rposition(|c| c.abs() > 1e-14 * scale)
        .unwrap_or(0);
    match degree {
        0 => Vec::new(),
        1 => {
            let r = -coeffs[0] / coeffs[1];
            if (lo - ROOT_TOL..=hi + ROOT_TOL).contains(&r) {
                vec![r.clamp(lo, hi)]
            } else {
                Vec::new()
            }
        }
        _ => {
            let trimmed = &coeffs[..=degree];
            let mut points = vec![lo];
            for c in poly_roots_in(&poly_deriv(trimmed), lo, hi) {
                if c > lo + ROOT_TOL && c < hi - ROOT_TOL {
                    points.push(c);
                }
            }
            points.push(hi);
            let ztol = 1e-12 * (1.0 + scale);
            let mut roots = Vec::new();
            let push = |r: f64, roots: &mut Vec<f64>| {
                if !roots.iter().any(|&x: &f64| (x - r).abs() < 1e-10) {
                    roots.push(r);
                }
            };
            for w in points.windows(2) {
                let (x0, x1) = (w[0], w[1]);
                let (f0, f1) = (poly_eval(trimmed, x0), poly_eval(trimmed, x1));
                if f0.abs() <= ztol {
                    push(x0, &mut roots);
                }
                if f1.abs() <= ztol {
                    push(x1, &mut roots);
                } else if f0.abs() > ztol && f0.signum() != f1.signum() {
                    if let Some(r) = bisect_root(trimmed, x0, x1) {
                        push(r, &mut roots);
                    }
                }
            }
            roots.sort_by(f64::total_cmp);
            roots
        }
    }
}

fn bisect_root(coeffs: &[f64], mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = poly_eval(coeffs, lo);
    let fhi = poly_eval(coeffs, hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = poly_eval(coeffs, mid);
        if fmid == 0.0 || hi - lo < ROOT_TOL {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
