//! Dirichlet solver for harmonic functions on multiply connected domains.
//!
//! The representation is an interior double-layer density plus one
//! logarithmic source anchored in each hole, which completes the rank the
//! plain double layer loses on multiply connected domains. With the
//! domain-on-left orientation the interior limit gives the second-kind rows
//!
//! ```text
//!   μ(z_j) + ∮ q(z_j, w) μ(w) ds(w) + Σ_l A_l ln|z_j - s_l| = g(z_j)
//! ```
//!
//! with the smooth kernel `q(z,w) = (1/π) Im[T(w)/(w-z)]` (diagonal κ/2π),
//! augmented by one zero-mean condition per hole. The transpose factorization
//! doubles as a discrete Poisson kernel: solving `Mᵀ y = r_z` yields
//! `p(z, w_k) = y_k / ds_k`, the normal-derivative data of the Green's
//! function at the nodes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bie::cauchy::BoundaryField;
use crate::error::{Error, Result};
use crate::geometry::BoundaryGrid;

const PI: f64 = std::f64::consts::PI;
const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Double-layer kernel `q(z, w_k)` against node `k`, for `z` off the node.
#[inline]
fn dl_kernel(z: Complex64, node: Complex64, tangent: Complex64) -> f64 {
    (tangent / (node - z)).im / PI
}

pub struct DirichletSolver {
    grid: Arc<BoundaryGrid>,
    anchors: Vec<Complex64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DirichletSolver {
    pub fn new(grid: Arc<BoundaryGrid>) -> Result<Self> {
        let n = grid.total_nodes();
        let holes = grid.n_curves() - 1;
        let size = n + holes;
        let nodes = grid.nodes();
        let tangents = grid.tangents();
        let ds = grid.weights();
        let anchors: Vec<Complex64> = (1..grid.n_curves())
            .map(|c| grid.domain().curve(c).center())
            .collect();

        let mut m = DMatrix::<f64>::zeros(size, size);
        for j in 0..n {
            m[(j, j)] = 1.0 + grid.curvature(j) / (2.0 * PI) * ds[j];
            for k in 0..n {
                if k != j {
                    m[(j, k)] = dl_kernel(nodes[j], nodes[k], tangents[k]) * ds[k];
                }
            }
            for (l, &s) in anchors.iter().enumerate() {
                m[(j, n + l)] = (nodes[j] - s).norm().ln();
            }
        }
        for l in 0..holes {
            for k in grid.curve_range(l + 1) {
                m[(n + l, k)] = ds[k];
            }
        }

        let lu = m.clone().lu();
        let lu_t = m.transpose().lu();
        if !lu.is_invertible() || !lu_t.is_invertible() {
            return Err(Error::SingularSystem(
                "augmented double-layer system is singular (log anchors poorly placed?)".into(),
            ));
        }
        Ok(Self {
            grid,
            anchors,
            lu,
            lu_t,
        })
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn anchors(&self) -> &[Complex64] {
        &self.anchors
    }

    /// Solves the interior Dirichlet problem for real boundary data.
    pub fn solve(&self, data: &BoundaryField) -> Result<HarmonicEvaluator> {
        if !data.is_real(1e-10) {
            return Err(Error::InvalidInput(
                "dirichlet data must be real-valued".into(),
            ));
        }
        let n = self.grid.total_nodes();
        let holes = self.anchors.len();
        let mut rhs = DVector::<f64>::zeros(n + holes);
        for k in 0..n {
            rhs[k] = data.value(k).re;
        }
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("dirichlet solve failed".into()))?;
        let mu = BoundaryField::new(
            self.grid.clone(),
            (0..n).map(|k| Complex64::new(sol[k], 0.0)).collect(),
        )?;
        Ok(HarmonicEvaluator {
            grid: self.grid.clone(),
            anchors: self.anchors.clone(),
            mu,
            logs: (0..holes).map(|l| sol[n + l]).collect(),
        })
    }

    /// Same linear system with complex data (two real solves); used for
    /// derivatives of densities with respect to a complex parameter.
    pub fn solve_complex(&self, data: &[Complex64]) -> Result<ComplexDensity> {
        let n = self.grid.total_nodes();
        if data.len() != n {
            return Err(Error::InvalidInput("data length mismatch".into()));
        }
        let holes = self.anchors.len();
        let mut rhs_re = DVector::<f64>::zeros(n + holes);
        let mut rhs_im = DVector::<f64>::zeros(n + holes);
        for k in 0..n {
            rhs_re[k] = data[k].re;
            rhs_im[k] = data[k].im;
        }
        let sol_re = self
            .lu
            .solve(&rhs_re)
            .ok_or_else(|| Error::SingularSystem("dirichlet solve failed".into()))?;
        let sol_im = self
            .lu
            .solve(&rhs_im)
            .ok_or_else(|| Error::SingularSystem("dirichlet solve failed".into()))?;
        let mu = BoundaryField::new(
            self.grid.clone(),
            (0..n)
                .map(|k| Complex64::new(sol_re[k], sol_im[k]))
                .collect(),
        )?;
        Ok(ComplexDensity {
            grid: self.grid.clone(),
            anchors: self.anchors.clone(),
            mu,
            logs: (0..holes)
                .map(|l| Complex64::new(sol_re[n + l], sol_im[n + l]))
                .collect(),
        })
    }

    /// Discrete Poisson kernel `p(z, w_k)` at all nodes, via the transpose
    /// solve. `Σ_k p(z,w_k) g(w_k) ds_k` reproduces the solver's interior
    /// value for any boundary data `g`.
    pub fn poisson_values(&self, z: Complex64) -> Result<Vec<f64>> {
        if !self.grid.domain().contains(z) {
            return Err(Error::NotInterior(z));
        }
        let n = self.grid.total_nodes();
        let holes = self.anchors.len();
        let mut r = DVector::<f64>::zeros(n + holes);
        for k in 0..n {
            r[k] = dl_kernel(z, self.grid.nodes()[k], self.grid.tangents()[k])
                * self.grid.weights()[k];
        }
        for (l, &s) in self.anchors.iter().enumerate() {
            r[n + l] = (z - s).norm().ln();
        }
        let y = self
            .lu_t
            .solve(&r)
            .ok_or_else(|| Error::SingularSystem("transpose solve failed".into()))?;
        Ok((0..n).map(|k| y[k] / self.grid.weights()[k]).collect())
    }
}

/// Harmonic function represented by a real double-layer density and hole
/// log sources.
pub struct HarmonicEvaluator {
    grid: Arc<BoundaryGrid>,
    anchors: Vec<Complex64>,
    mu: BoundaryField,
    logs: Vec<f64>,
}

impl HarmonicEvaluator {
    pub fn density(&self) -> &BoundaryField {
        &self.mu
    }

    pub fn log_coefficients(&self) -> &[f64] {
        &self.logs
    }

    fn factor_for(&self, z: Complex64) -> Result<usize> {
        let dist = self.grid.domain().dist_to_boundary(z);
        let spacing = self.grid.max_spacing();
        let (factor, capped) = crate::bie::cauchy::refinement_factor(spacing, dist);
        if capped {
            return Err(Error::TooCloseToBoundary(z));
        }
        Ok(factor)
    }

    /// Value at a strictly interior point.
    pub fn eval(&self, z: Complex64) -> Result<f64> {
        if !self.grid.domain().contains(z) {
            return Err(Error::NotInterior(z));
        }
        let factor = self.factor_for(z)?;
        let mut acc = 0.0f64;
        if factor <= 1 {
            for k in 0..self.grid.total_nodes() {
                acc += self.mu.value(k).re
                    * dl_kernel(z, self.grid.nodes()[k], self.grid.tangents()[k])
                    * self.grid.weights()[k];
            }
        } else {
            let geo = self.grid.fine_geometry(factor);
            let vals = self.mu.fine_values(factor);
            for k in 0..geo.nodes.len() {
                // q ds = (1/π) Im[dw/(w-z)] with dw = z'(t) h.
                acc += vals[k].re * (geo.dparam[k] * geo.h / (geo.nodes[k] - z)).im / PI;
            }
        }
        for (l, &s) in self.anchors.iter().enumerate() {
            acc += self.logs[l] * (z - s).norm().ln();
        }
        Ok(acc)
    }

    /// `∂u/∂z` at a strictly interior point (complex gradient; the full
    /// gradient is `2 conj(∂u/∂z)`).
    pub fn dz(&self, z: Complex64) -> Result<Complex64> {
        if !self.grid.domain().contains(z) {
            return Err(Error::NotInterior(z));
        }
        let factor = self.factor_for(z)?;
        let mut acc = Complex64::new(0.0, 0.0);
        if factor <= 1 {
            for k in 0..self.grid.total_nodes() {
                let dw = self.grid.dw(k);
                acc += self.mu.value(k).re * (dw / (self.grid.nodes()[k] - z).powu(2)) / TWO_PI_I;
            }
        } else {
            let geo = self.grid.fine_geometry(factor);
            let vals = self.mu.fine_values(factor);
            for k in 0..geo.nodes.len() {
                let dw = geo.dparam[k] * geo.h;
                acc += vals[k].re * (dw / (geo.nodes[k] - z).powu(2)) / TWO_PI_I;
            }
        }
        for (l, &s) in self.anchors.iter().enumerate() {
            acc += self.logs[l] * 0.5 / (z - s);
        }
        Ok(acc)
    }
}

/// Complex-valued density triple from [`DirichletSolver::solve_complex`].
pub struct ComplexDensity {
    grid: Arc<BoundaryGrid>,
    anchors: Vec<Complex64>,
    mu: BoundaryField,
    logs: Vec<Complex64>,
}

impl ComplexDensity {
    /// `Σ_k μ_k conj(∂_z q(z, w_k)) ds_k + Σ_l A_l (1/2) conj(1/(z-s_l))`:
    /// the anti-holomorphic derivative kernel paired with this density.
    /// Differentiating the solver's representation in `conj(z)` produces
    /// exactly this sum with real densities; with density derivatives it
    /// yields mixed second derivatives of the represented family.
    pub fn conj_kernel_eval(&self, z: Complex64) -> Result<Complex64> {
        if !self.grid.domain().contains(z) {
            return Err(Error::NotInterior(z));
        }
        let dist = self.grid.domain().dist_to_boundary(z);
        let spacing = self.grid.max_spacing();
        let (factor, capped) = crate::bie::cauchy::refinement_factor(spacing, dist);
        if capped {
            return Err(Error::TooCloseToBoundary(z));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        if factor <= 1 {
            for k in 0..self.grid.total_nodes() {
                let dw = self.grid.dw(k);
                acc += self.mu.value(k) * (dw / (self.grid.nodes()[k] - z).powu(2) / TWO_PI_I).conj();
            }
        } else {
            let geo = self.grid.fine_geometry(factor);
            let vals = self.mu.fine_values(factor);
            for k in 0..geo.nodes.len() {
                let dw = geo.dparam[k] * geo.h;
                acc += vals[k] * (dw / (geo.nodes[k] - z).powu(2) / TWO_PI_I).conj();
            }
        }
        for (l, &s) in self.anchors.iter().enumerate() {
            acc += self.logs[l] * 0.5 / (z - s).conj();
        }
        Ok(acc)
    }
}
