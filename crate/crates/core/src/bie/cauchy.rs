//! Boundary samples and Cauchy-type integrals.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::bie::spectral::upsample_closed;
use crate::error::{Error, Result};
use crate::geometry::BoundaryGrid;

/// Complex samples aligned index-wise with a quadrature grid.
#[derive(Debug)]
pub struct BoundaryField {
    grid: Arc<BoundaryGrid>,
    values: Vec<Complex64>,
    fine: RwLock<HashMap<usize, Arc<Vec<Complex64>>>>,
}

impl Clone for BoundaryField {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            fine: RwLock::new(HashMap::new()),
        }
    }
}

impl BoundaryField {
    pub fn new(grid: Arc<BoundaryGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_nodes() {
            return Err(Error::InvalidInput(format!(
                "field length {} does not match grid node count {}",
                values.len(),
                grid.total_nodes()
            )));
        }
        Ok(Self {
            grid,
            values,
            fine: RwLock::new(HashMap::new()),
        })
    }

    pub fn from_fn(grid: Arc<BoundaryGrid>, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&z| f(z)).collect();
        Self {
            grid,
            values,
            fine: RwLock::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> Complex64 {
        self.values[k]
    }

    pub fn curve_values(&self, curve: usize) -> &[Complex64] {
        &self.values[self.grid.curve_range(curve)]
    }

    pub fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> BoundaryField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k, v))
            .collect();
        BoundaryField {
            grid: self.grid.clone(),
            values,
            fine: RwLock::new(HashMap::new()),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when the imaginary parts are negligible against the field scale.
    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.max_norm().max(1e-300);
        self.values.iter().all(|v| v.im.abs() <= tol * scale)
    }

    /// Trigonometric upsampling per curve (cached by factor).
    pub fn fine_values(&self, factor: usize) -> Arc<Vec<Complex64>> {
        if factor <= 1 {
            return Arc::new(self.values.clone());
        }
        if let Some(v) = self.fine.read().unwrap().get(&factor) {
            return v.clone();
        }
        let mut out = Vec::with_capacity(self.values.len() * factor);
        for c in 0..self.grid.n_curves() {
            out.extend(upsample_closed(&self.values[self.grid.curve_range(c)], factor));
        }
        let out = Arc::new(out);
        self.fine.write().unwrap().insert(factor, out.clone());
        out
    }
}

/// `∮ f dw` over the full oriented boundary (trapezoid, fixed order).
pub fn boundary_integral_dw(f: &BoundaryField) -> Complex64 {
    let grid = f.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..grid.total_nodes() {
        acc += f.value(k) * grid.dw(k);
    }
    acc
}

/// `∮ f ds` over the full boundary.
pub fn boundary_integral_ds(f: &BoundaryField) -> Complex64 {
    let grid = f.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..grid.total_nodes() {
        acc += f.value(k) * grid.weights()[k];
    }
    acc
}

/// `∮_{curve} f dw` over a single boundary curve.
pub fn curve_integral_dw(f: &BoundaryField, curve: usize) -> Complex64 {
    let grid = f.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in grid.curve_range(curve) {
        acc += f.value(k) * grid.dw(k);
    }
    acc
}

/// Result of a Cauchy-type evaluation. `degraded` carries a crude error
/// estimate when the target sits too close to the boundary for the refined
/// quadrature to resolve.
#[derive(Debug, Clone, Copy)]
pub struct CauchyEval {
    pub value: Complex64,
    pub degraded: Option<f64>,
}

/// Largest refinement factor used for near-boundary targets.
const MAX_FINE_FACTOR: usize = 64;

/// Picks the refinement factor so the fine node spacing is at most ~1/6 of
/// the distance to the boundary.
pub(crate) fn refinement_factor(spacing: f64, dist: f64) -> (usize, bool) {
    let needed = 6.0 * spacing / dist.max(1e-300);
    let mut factor = 1usize;
    while (factor as f64) < needed && factor < MAX_FINE_FACTOR {
        factor *= 2;
    }
    (factor, (factor as f64) < needed)
}

/// `(order!/2πi) ∮ f(w)/(w-z)^{order+1} dw` for interior `z`, `order ≤ 3`.
///
/// Order 0 reproduces holomorphic functions from their boundary traces. Near
/// the boundary the density is upsampled spectrally; if even the largest
/// refinement cannot resolve the distance, the evaluation is still returned
/// with a `degraded` error estimate.
pub fn cauchy_integral(f: &BoundaryField, z: Complex64, order: u32) -> Result<CauchyEval> {
    if order > 3 {
        return Err(Error::InvalidInput(format!(
            "cauchy_integral supports order <= 3, got {order}"
        )));
    }
    let grid = f.grid();
    let domain = grid.domain();
    if !domain.contains(z) {
        return Err(Error::NotInterior(z));
    }
    let dist = domain.dist_to_boundary(z);
    let spacing = grid.max_spacing();
    let (factor, capped) = refinement_factor(spacing, dist);
    let degraded = if capped {
        let fine_spacing = spacing / factor as f64;
        Some((-2.0 * std::f64::consts::PI * dist / fine_spacing).exp() * f.max_norm())
    } else {
        None
    };
    let value = cauchy_sum(f, z, order, factor);
    Ok(CauchyEval { value, degraded })
}

/// Convenience wrapper discarding the accuracy flag.
pub fn cauchy_value(f: &BoundaryField, z: Complex64, order: u32) -> Result<Complex64> {
    Ok(cauchy_integral(f, z, order)?.value)
}

/// Evaluation for callers that already know a lower bound on the distance
/// from `z` to the boundary; skips point-location.
pub(crate) fn cauchy_value_at_dist(
    f: &BoundaryField,
    z: Complex64,
    order: u32,
    dist: f64,
) -> Complex64 {
    let (factor, _) = refinement_factor(f.grid().max_spacing(), dist);
    cauchy_sum(f, z, order, factor)
}

pub(crate) fn cauchy_sum(f: &BoundaryField, z: Complex64, order: u32, factor: usize) -> Complex64 {
    let grid = f.grid();
    let fact: f64 = (1..=order as u64).product::<u64>().max(1) as f64;
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let mut acc = Complex64::new(0.0, 0.0);
    if factor <= 1 {
        for k in 0..grid.total_nodes() {
            let dwk = grid.dw(k);
            acc += f.value(k) * dwk / (grid.nodes()[k] - z).powu(order + 1);
        }
    } else {
        let geo = grid.fine_geometry(factor);
        let vals = f.fine_values(factor);
        for k in 0..geo.nodes.len() {
            let dwk = geo.dparam[k] * geo.h;
            acc += vals[k] * dwk / (geo.nodes[k] - z).powu(order + 1);
        }
    }
    acc * fact / two_pi_i
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_grid, make_preset_domain, Preset};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cauchy_reproduces_polynomials_on_the_disc() {
        let disc = Arc::new(make_preset_domain(Preset::Disc, &[1.0]).unwrap());
        let grid = Arc::new(boundary_grid(disc, 64).unwrap());
        let f = BoundaryField::from_fn(grid, |w| w * w);
        let v0 = cauchy_value(&f, c(0.3, 0.0), 0).unwrap();
        assert_relative_eq!(v0.re, 0.09, max_relative = 1e-12);
        assert!(v0.im.abs() < 1e-14);
        let v1 = cauchy_value(&f, c(0.3, 0.0), 1).unwrap();
        assert_relative_eq!(v1.re, 0.6, max_relative = 1e-12);
        let v2 = cauchy_value(&f, c(0.3, 0.0), 2).unwrap();
        assert_relative_eq!(v2.re, 2.0, max_relative = 1e-11);
    }

    #[test]
    fn cauchy_over_the_full_annulus_boundary_reproduces_1_over_w() {
        let ann = Arc::new(make_preset_domain(Preset::Annulus, &[0.5]).unwrap());
        let grid = Arc::new(boundary_grid(ann, 128).unwrap());
        let f = BoundaryField::from_fn(grid, |w| 1.0 / w);
        let v = cauchy_value(&f, c(0.7, 0.0), 0).unwrap();
        assert_relative_eq!(v.re, 1.0 / 0.7, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn exterior_points_are_rejected() {
        let ann = Arc::new(make_preset_domain(Preset::Annulus, &[0.5]).unwrap());
        let grid = Arc::new(boundary_grid(ann, 64).unwrap());
        let f = BoundaryField::from_fn(grid, |w| w);
        assert!(matches!(
            cauchy_integral(&f, c(2.0, 0.0), 0),
            Err(Error::NotInterior(_))
        ));
        // Points inside the hole are outside the domain too.
        assert!(matches!(
            cauchy_integral(&f, c(0.0, 0.0), 0),
            Err(Error::NotInterior(_))
        ));
    }

    #[test]
    fn near_boundary_evaluation_stays_accurate_with_upsampling() {
        let disc = Arc::new(make_preset_domain(Preset::Disc, &[1.0]).unwrap());
        let grid = Arc::new(boundary_grid(disc, 128).unwrap());
        let f = BoundaryField::from_fn(grid.clone(), |w| w * w * w);
        // Two node spacings away from the circle.
        let d = 2.0 * grid.max_spacing();
        let z = c(1.0 - d, 0.0);
        let got = cauchy_integral(&f, z, 0).unwrap();
        assert!(got.degraded.is_none());
        assert!((got.value - z.powu(3)).norm() < 1e-11);
    }

    #[test]
    fn spectral_convergence_of_the_trapezoid_rule() {
        // Doubling the nodes takes the disc error down by >= 1e4 until the
        // floor; the evaluation point sits at radius 0.8 so the coarse grid
        // has visible error.
        let disc = Arc::new(make_preset_domain(Preset::Disc, &[1.0]).unwrap());
        let z = Complex64::from_polar(0.8, 0.7);
        let exact = 1.0 / (1.0 - z * Complex64::new(0.21, 0.4).conj());
        let mut errs = Vec::new();
        for npc in [64usize, 128] {
            let grid = Arc::new(boundary_grid(disc.clone(), npc).unwrap());
            let f = BoundaryField::from_fn(grid, |w| {
                1.0 / (1.0 - w * Complex64::new(0.21, 0.4).conj())
            });
            // Force the plain rule to expose the raw trapezoid error.
            let v = cauchy_sum(&f, z, 0, 1);
            errs.push((v - exact).norm());
        }
        assert!(errs[0] > 1e-9, "coarse error should be visible: {:.3e}", errs[0]);
        assert!(
            errs[1] <= (errs[0] / 1e4).max(1e-12),
            "64->128: {:.3e} -> {:.3e}",
            errs[0],
            errs[1]
        );
    }
}
