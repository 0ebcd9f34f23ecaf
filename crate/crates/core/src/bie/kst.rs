//! Kerzman–Stein–Trummer solve for the Szegő boundary trace.
//!
//! With the Cauchy kernel `H(z,w) = (1/2πi) T(w)/(w-z)` the Kerzman–Stein
//! kernel `A(z,w) = conj(H(w,z)) - H(z,w)` is smooth and skew-hermitian, it
//! vanishes on the diagonal (and identically on a disc), and the boundary
//! trace `x(·) = S(·,a)` solves the second-kind system
//!
//! ```text
//!   (I + A) x = r_a,   r_a(z) = conj( (1/2πi) T(z)/(z-a) ).
//! ```
//!
//! The normalization is calibrated so the unit disc reproduces
//! `S(z,w) = 1/(2π(1 - z conj(w)))` exactly.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bie::cauchy::BoundaryField;
use crate::error::{Error, Result};
use crate::geometry::BoundaryGrid;

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * std::f64::consts::PI);

/// Kerzman–Stein kernel value `A(z_j, z_k)` between two distinct nodes.
fn ks_kernel(z: Complex64, tz: Complex64, w: Complex64, tw: Complex64) -> Complex64 {
    let h_zw = tw / ((w - z) * TWO_PI_I);
    let h_wz = tz / ((z - w) * TWO_PI_I);
    h_wz.conj() - h_zw
}

/// Factorized discrete Kerzman–Stein system for one grid.
pub struct KstSolver {
    grid: Arc<BoundaryGrid>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    cond_estimate: f64,
    kernel_max: f64,
    skew_defect: f64,
}

impl KstSolver {
    pub fn new(grid: Arc<BoundaryGrid>) -> Result<Self> {
        let n = grid.total_nodes();
        let nodes = grid.nodes();
        let tangents = grid.tangents();
        let ds = grid.weights();

        let mut kernel_max = 0.0f64;
        let mut m = DMatrix::<Complex64>::identity(n, n);
        let mut kernel = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue; // A(z,z) = 0
                }
                let a = ks_kernel(nodes[j], tangents[j], nodes[k], tangents[k]);
                kernel[(j, k)] = a;
                kernel_max = kernel_max.max(a.norm());
                m[(j, k)] += a * ds[k];
            }
        }

        // Skew-hermitian defect after symmetric arclength scaling.
        let mut skew_defect = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let b = kernel[(j, k)] * (ds[j] * ds[k]).sqrt();
                let b_adj = kernel[(k, j)].conj() * (ds[j] * ds[k]).sqrt();
                skew_defect = skew_defect.max((b + b_adj).norm());
            }
        }

        let sigma_max = power_iteration_norm(&m);
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::IllConditioned { cond: f64::INFINITY });
        }
        let inv_norm = inverse_norm_estimate(&lu, n);
        let cond_estimate = sigma_max * inv_norm;
        if cond_estimate > 1e8 {
            return Err(Error::IllConditioned {
                cond: cond_estimate,
            });
        }
        Ok(Self {
            grid,
            lu,
            cond_estimate,
            kernel_max,
            skew_defect,
        })
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn condition_estimate(&self) -> f64 {
        self.cond_estimate
    }

    /// Largest kernel entry; identically ~0 on a disc.
    pub fn kernel_max(&self) -> f64 {
        self.kernel_max
    }

    pub fn skew_defect(&self) -> f64 {
        self.skew_defect
    }

    /// Boundary trace of `S(·,a)` for an interior base point at least three
    /// local node spacings from every boundary curve.
    pub fn solve_trace(&self, a: Complex64) -> Result<BoundaryField> {
        let domain = self.grid.domain();
        if !domain.contains(a) {
            return Err(Error::NotInterior(a));
        }
        for c in 0..self.grid.n_curves() {
            let range = self.grid.curve_range(c);
            let spacing = range
                .clone()
                .map(|k| self.grid.weights()[k])
                .fold(0.0, f64::max);
            let dist = range
                .map(|k| (self.grid.nodes()[k] - a).norm())
                .fold(f64::INFINITY, f64::min);
            if dist <= 3.0 * spacing {
                return Err(Error::TooCloseToBoundary(a));
            }
        }
        let rhs = DVector::from_iterator(
            self.grid.total_nodes(),
            self.grid
                .nodes()
                .iter()
                .zip(self.grid.tangents())
                .map(|(&z, &t)| (t / ((z - a) * TWO_PI_I)).conj()),
        );
        let x = self
            .lu
            .solve(&rhs)
            .ok_or(Error::IllConditioned { cond: f64::NAN })?;
        BoundaryField::new(self.grid.clone(), x.iter().cloned().collect())
    }
}

fn power_iteration_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(((i * 2654435761 + 1) % 1000) as f64 / 1000.0 - 0.5, 0.3)
    });
    let mut norm = 1.0;
    for _ in 0..12 {
        let w = m.ad_mul(&(m * &v));
        norm = w.norm().sqrt();
        let s = w.norm().max(1e-300);
        v = w / Complex64::new(s, 0.0);
    }
    norm
}

fn inverse_norm_estimate(
    lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> f64 {
    let mut best: f64 = 0.0;
    for seed in 0..4u64 {
        let b = DVector::from_fn(n, |i, _| {
            let h = (i as u64)
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add(seed.wrapping_mul(0xbf58476d1ce4e5b9));
            let re = if h & 1 == 0 { 1.0 } else { -1.0 };
            let im = if h & 2 == 0 { 0.5 } else { -0.5 };
            Complex64::new(re, im)
        });
        if let Some(x) = lu.solve(&b) {
            best = best.max(x.norm() / b.norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bie::cauchy::cauchy_value;
    use crate::geometry::{boundary_grid, make_preset_domain, Preset};
    use crate::oracles::{disc, AnnulusOracle};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc_solver(npc: usize) -> KstSolver {
        let dom = Arc::new(make_preset_domain(Preset::Disc, &[1.0]).unwrap());
        KstSolver::new(Arc::new(boundary_grid(dom, npc).unwrap())).unwrap()
    }

    #[test]
    fn kernel_vanishes_identically_on_the_disc() {
        let solver = disc_solver(64);
        assert!(solver.kernel_max() < 1e-12, "{:.3e}", solver.kernel_max());
    }

    #[test]
    fn kernel_is_skew_hermitian_after_weight_scaling() {
        let dom = Arc::new(make_preset_domain(Preset::Blob3, &[]).unwrap());
        let solver = KstSolver::new(Arc::new(boundary_grid(dom, 64).unwrap())).unwrap();
        assert!(solver.skew_defect() < 1e-12, "{:.3e}", solver.skew_defect());
        assert!(solver.condition_estimate() < 1e3);
    }

    #[test]
    fn disc_traces_match_the_closed_form() {
        let solver = disc_solver(128);
        // a = 0: constant trace 1/(2π).
        let trace = solver.solve_trace(c(0.0, 0.0)).unwrap();
        for &v in trace.values() {
            assert_relative_eq!(v.re, 1.0 / (2.0 * std::f64::consts::PI), max_relative = 1e-12);
            assert!(v.im.abs() < 1e-13);
        }
        // a = 0.5 at the node z = 1.
        let trace = solver.solve_trace(c(0.5, 0.0)).unwrap();
        let k = trace.grid().node_index(c(1.0, 0.0)).unwrap();
        assert_relative_eq!(
            trace.value(k).re,
            1.0 / std::f64::consts::PI / 2.0 / 0.5,
            max_relative = 1e-12
        );
        // Interior evaluation through the Cauchy transform.
        let s = cauchy_value(&trace, c(-0.3, 0.2), 0).unwrap();
        let want = disc::szego(c(-0.3, 0.2), c(0.5, 0.0));
        assert!((s - want).norm() < 1e-12);
    }

    #[test]
    fn annulus_diagonal_matches_the_series_oracle() {
        let dom = Arc::new(make_preset_domain(Preset::Annulus, &[0.5]).unwrap());
        let solver = KstSolver::new(Arc::new(boundary_grid(dom, 128).unwrap())).unwrap();
        let a = c(0.7, 0.0);
        let trace = solver.solve_trace(a).unwrap();
        let got = cauchy_value(&trace, a, 0).unwrap();
        let want = AnnulusOracle::new(0.5).szego(a, a);
        assert!(
            (got - want).norm() < 1e-10 * want.norm(),
            "got {got}, series {want}"
        );
    }

    #[test]
    fn base_points_hugging_the_boundary_are_rejected() {
        let solver = disc_solver(32);
        assert!(matches!(
            solver.solve_trace(c(0.99, 0.0)),
            Err(Error::TooCloseToBoundary(_))
        ));
    }
}
