//! Functions on the annulus stored spectrally: Fourier coefficients along
//! the angle, tabulated over a quadrature grid in the radial variable.

use crate::error::{Error, Result};
use crate::grid::MGrid;
use crate::numeric::{kahan_sum, MonotoneCubic};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Closed-form radial profile of a single angular mode.
#[derive(Debug, Clone)]
pub enum ModeShape {
    /// `amp * m^beta`
    Power { amp: Complex64, beta: f64 },
    /// `amp * m^beta * (1 + depth * sin(freq * m + phase))`
    ModulatedPower {
        amp: Complex64,
        beta: f64,
        depth: f64,
        freq: f64,
        phase: f64,
    },
    /// `amp * sum_j coeffs[j] * m^j`
    Poly { amp: Complex64, coeffs: Vec<f64> },
}

impl ModeShape {
    pub fn eval(&self, m: f64) -> Complex64 {
        match self {
            ModeShape::Power { amp, beta } => {
                if m == 0.0 {
                    if *beta == 0.0 {
                        *amp
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                } else {
                    amp * m.powf(*beta)
                }
            }
            ModeShape::ModulatedPower {
                amp,
                beta,
                depth,
                freq,
                phase,
            } => {
                let radial = if m == 0.0 {
                    if *beta == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    m.powf(*beta)
                };
                amp * radial * (1.0 + depth * (freq * m + phase).sin())
            }
            ModeShape::Poly { amp, coeffs } => {
                let mut v = 0.0;
                for &c in coeffs.iter().rev() {
                    v = v * m + c;
                }
                amp * v
            }
        }
    }

    /// `eval(m2) - eval(m1)` without cancellation: power differences go
    /// through `expm1`, oscillatory differences through the angle-sum
    /// identity, polynomial differences through the factored divided
    /// difference. Accurate to a few ulps even at tiny separations.
    pub fn diff(&self, m2: f64, m1: f64) -> Complex64 {
        if m2 < m1 {
            return -self.diff(m1, m2);
        }
        match self {
            ModeShape::Power { amp, beta } => amp * power_diff(m2, m1, *beta),
            ModeShape::ModulatedPower {
                amp,
                beta,
                depth,
                freq,
                phase,
            } => {
                // a(m) = amp m^beta (1 + d sin(freq m + phase)); split the
                // difference into a power part and an oscillation part.
                let radial1 = if m1 == 0.0 {
                    if *beta == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    m1.powf(*beta)
                };
                let power_part = power_diff(m2, m1, *beta)
                    * (1.0 + depth * (freq * m2 + phase).sin());
                let osc_part = radial1
                    * depth
                    * 2.0
                    * (0.5 * freq * (m1 + m2) + phase).cos()
                    * (0.5 * freq * (m2 - m1)).sin();
                amp * (power_part + osc_part)
            }
            ModeShape::Poly { amp, coeffs } => {
                // p(m2) - p(m1) = (m2 - m1) * sum_j c_j sum_{i<j} m2^i m1^{j-1-i}
                let mut divided = 0.0;
                for (j, &c) in coeffs.iter().enumerate().skip(1) {
                    let mut inner = 0.0;
                    for i in 0..j {
                        inner += m2.powi(i as i32) * m1.powi((j - 1 - i) as i32);
                    }
                    divided += c * inner;
                }
                amp * ((m2 - m1) * divided)
            }
        }
    }

    fn scaled(&self, factor: Complex64) -> ModeShape {
        match self {
            ModeShape::Power { amp, beta } => ModeShape::Power {
                amp: amp * factor,
                beta: *beta,
            },
            ModeShape::ModulatedPower {
                amp,
                beta,
                depth,
                freq,
                phase,
            } => ModeShape::ModulatedPower {
                amp: amp * factor,
                beta: *beta,
                depth: *depth,
                freq: *freq,
                phase: *phase,
            },
            ModeShape::Poly { amp, coeffs } => ModeShape::Poly {
                amp: amp * factor,
                coeffs: coeffs.clone(),
            },
        }
    }
}

/// Closed-form description of a fibered function: one radial profile per
/// populated mode. Enables exact evaluation at arbitrary radial points.
#[derive(Debug, Clone, Default)]
pub struct Descriptor {
    modes: BTreeMap<i64, ModeShape>,
}

impl Descriptor {
    pub fn new() -> Self {
        Descriptor::default()
    }

    pub fn with_mode(mut self, k: i64, shape: ModeShape) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter(
                "mode 0 is pinned to zero and cannot carry a profile".into(),
            ));
        }
        self.modes.insert(k, shape);
        Ok(self)
    }

    pub fn eval(&self, m: f64, k: i64) -> Complex64 {
        self.modes
            .get(&k)
            .map(|s| s.eval(m))
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, &ModeShape)> {
        self.modes.iter().map(|(&k, s)| (k, s))
    }
}

/// A mean-zero function on the annulus, fibered over the radial grid.
///
/// Coefficients are indexed by `(node, k)` for `k` in `[-kmax, kmax]`; the
/// `k = 0` column is identically zero, so the function has zero average along
/// every fiber. An optional [`Descriptor`] provides exact values off the
/// grid; otherwise monotone cubic interpolation of the tabulated columns is
/// used.
#[derive(Debug, Clone)]
pub struct FiberedFunction {
    grid: MGrid,
    kmax: usize,
    /// Row-major: `coeffs[node * (2*kmax+1) + (k + kmax)]`.
    coeffs: Vec<Complex64>,
    descriptor: Option<Descriptor>,
}

impl FiberedFunction {
    /// The zero function.
    pub fn zero(grid: MGrid, kmax: usize) -> Self {
        let stride = 2 * kmax + 1;
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.len() * stride];
        FiberedFunction {
            grid,
            kmax,
            coeffs,
            descriptor: None,
        }
    }

    /// Tabulates a closed-form descriptor on the grid and keeps the
    /// descriptor for exact off-grid evaluation.
    pub fn from_descriptor(grid: MGrid, kmax: usize, descriptor: Descriptor) -> Result<Self> {
        for (k, _) in descriptor.modes() {
            if k.unsigned_abs() as usize > kmax {
                return Err(Error::Parameter(format!(
                    "descriptor mode {k} outside [-{kmax}, {kmax}]"
                )));
            }
        }
        let mut f = FiberedFunction::zero(grid, kmax);
        for i in 0..f.grid.len() {
            let m = f.grid.node(i);
            for (k, shape) in descriptor.modes() {
                let idx = f.index(i, k);
                f.coeffs[idx] = shape.eval(m);
            }
        }
        f.descriptor = Some(descriptor);
        Ok(f)
    }

    /// Tabulates arbitrary per-mode samples. The sampler is only consulted
    /// for `k != 0`.
    pub fn from_samples<F: FnMut(f64, i64) -> Complex64>(
        grid: MGrid,
        kmax: usize,
        mut sampler: F,
    ) -> Self {
        let mut f = FiberedFunction::zero(grid, kmax);
        for i in 0..f.grid.len() {
            let m = f.grid.node(i);
            for k in -(kmax as i64)..=(kmax as i64) {
                if k == 0 {
                    continue;
                }
                let idx = f.index(i, k);
                f.coeffs[idx] = sampler(m, k);
            }
        }
        f
    }

    fn index(&self, node: usize, k: i64) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.kmax);
        node * (2 * self.kmax + 1) + (k + self.kmax as i64) as usize
    }

    pub fn grid(&self) -> &MGrid {
        &self.grid
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn descriptor(&self) -> Option<&Descriptor> {
        self.descriptor.as_ref()
    }

    /// Same tabulated data with the descriptor removed; off-grid evaluation
    /// then falls back to interpolation.
    pub fn without_descriptor(&self) -> Self {
        let mut f = self.clone();
        f.descriptor = None;
        f
    }

    /// Tabulated coefficient at a grid node.
    pub fn coeff(&self, node: usize, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.kmax {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[self.index(node, k)]
    }

    /// Coefficient at an arbitrary radial point: exact via the descriptor
    /// when present, monotone cubic interpolation of the tabulated column
    /// otherwise. Interpolation is shape-preserving inside the node hull and
    /// clamps to the boundary cubic outside it.
    pub fn coeff_at(&self, m: f64, k: i64) -> Complex64 {
        if k == 0 || k.unsigned_abs() as usize > self.kmax {
            return Complex64::new(0.0, 0.0);
        }
        if let Some(d) = &self.descriptor {
            return d.eval(m, k);
        }
        let n = self.grid.len();
        let xs: Vec<f64> = self.grid.nodes().to_vec();
        let re: Vec<f64> = (0..n).map(|i| self.coeff(i, k).re).collect();
        let im: Vec<f64> = (0..n).map(|i| self.coeff(i, k).im).collect();
        if re.iter().all(|v| *v == 0.0) && im.iter().all(|v| *v == 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let re_i = MonotoneCubic::new(xs.clone(), re);
        let im_i = MonotoneCubic::new(xs, im);
        Complex64::new(re_i.eval(m), im_i.eval(m))
    }

    /// Iterates over the populated `(node, k, coefficient)` triples.
    pub fn iter_coeffs(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        let kmax = self.kmax as i64;
        (0..self.grid.len()).flat_map(move |i| {
            (-kmax..=kmax).filter(|&k| k != 0).map(move |k| {
                let c = self.coeff(i, k);
                (i, k, c)
            })
        })
    }

    /// Applies a coefficient-wise multiplier, indexed by grid node. The
    /// result is tabulated-only: multipliers depend on the radial point, so
    /// the closed form is lost.
    pub fn map_coeffs<F: Fn(usize, i64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut out = self.clone();
        out.descriptor = None;
        for i in 0..self.grid.len() {
            for k in -(self.kmax as i64)..=(self.kmax as i64) {
                if k == 0 {
                    continue;
                }
                let idx = self.index(i, k);
                out.coeffs[idx] = f(i, k, self.coeffs[idx]);
            }
        }
        out
    }

    /// Scales the function by a complex factor; the descriptor (when
    /// present) is scaled alongside the table.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= factor;
        }
        if let Some(d) = &self.descriptor {
            let mut scaled = Descriptor::new();
            for (k, shape) in d.modes() {
                scaled.modes.insert(k, shape.scaled(factor));
            }
            out.descriptor = Some(scaled);
        }
        out
    }

    /// Squared grid-level norm: `sum_i w_i sum_k |c_{i,k}|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        kahan_sum((0..self.grid.len()).map(|i| {
            let fiber: f64 = kahan_sum(
                (-(self.kmax as i64)..=(self.kmax as i64))
                    .map(|k| self.coeff(i, k).norm_sqr()),
            );
            self.grid.weight(i) * fiber
        }))
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Grid-level inner product `<f, g>` (conjugate-linear in `g`).
    pub fn inner(&self, other: &FiberedFunction) -> Result<Complex64> {
        self.check_compatible(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.grid.len() {
            let w = self.grid.weight(i);
            for k in -(self.kmax as i64)..=(self.kmax as i64) {
                acc += self.coeff(i, k) * other.coeff(i, k).conj() * w;
            }
        }
        Ok(acc)
    }

    /// Verifies that tabulated values agree with the descriptor at every
    /// node to the given tolerance.
    pub fn verify_descriptor(&self, tol: f64) -> bool {
        let Some(d) = &self.descriptor else {
            return true;
        };
        for i in 0..self.grid.len() {
            let m = self.grid.node(i);
            for (k, shape) in d.modes() {
                if (self.coeff(i, k) - shape.eval(m)).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Estimates whether the function vanishes at the degenerate fiber:
    /// exact for descriptors, power-law extrapolation from the two smallest
    /// nodes otherwise. Returns the estimated boundary fiber norm.
    pub fn boundary_fiber_norm(&self) -> f64 {
        if let Some(d) = &self.descriptor {
            let sq: f64 = d.modes().map(|(_, s)| s.eval(0.0).norm_sqr()).sum();
            return sq.sqrt();
        }
        let norm_at = |i: usize| -> f64 {
            kahan_sum(
                (-(self.kmax as i64)..=(self.kmax as i64))
                    .map(|k| self.coeff(i, k).norm_sqr()),
            )
            .sqrt()
        };
        let (n1, n2) = (norm_at(0), norm_at(1));
        if n1 == 0.0 {
            return 0.0;
        }
        let (m1, m2) = (self.grid.node(0), self.grid.node(1));
        if n2 == 0.0 {
            return n1;
        }
        // Power-law model ||f_m|| ~ C m^eta from the two smallest nodes.
        let eta = (n1 / n2).ln() / (m1 / m2).ln();
        if eta > 1e-3 {
            0.0
        } else {
            n1
        }
    }

    pub fn check_compatible(&self, other: &FiberedFunction) -> Result<()> {
        if self.grid != other.grid || self.kmax != other.kmax {
            return Err(Error::Parameter(
                "functions live on different grids or mode ranges".into(),
            ));
        }
        Ok(())
    }
}
