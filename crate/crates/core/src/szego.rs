//! Szegő and Garabedian kernels as evaluable objects.
//!
//! One Kerzman–Stein solve per base point produces the boundary trace of
//! `S(·,a)`; the Garabedian trace follows node-wise from the boundary
//! identity `L(z,a) = i conj(S(z,a)) / T(z)`, and interior values come from
//! Cauchy transforms (with the simple pole of `L` split off explicitly).
//! Solves are cached per (grid, base point).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bie::cauchy::{cauchy_value, cauchy_value_at_dist, BoundaryField};
use crate::bie::kst::KstSolver;
use crate::error::{Error, Result};
use crate::geometry::BoundaryGrid;
use crate::zeros::{count_zeros_from_trace, ZeroSearch};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Boundary data of `S(·,a)` and `L(·,a)` for one base point.
pub struct SzegoSolution {
    a: Complex64,
    s_trace: BoundaryField,
    l_trace: BoundaryField,
    /// `L(·,a) - 1/(2π(·-a))` on the nodes: the holomorphic part of L.
    l_regular: BoundaryField,
}

/// Node-wise boundary identity sending the Szegő trace to the Garabedian
/// trace: `L(z,a) = i conj(S(z,a)) / T(z)` (so `|L| = |S|` on the boundary).
pub fn garabedian_boundary(s_trace: &BoundaryField) -> BoundaryField {
    let grid = s_trace.grid().clone();
    s_trace.map(|k, s| I * s.conj() / grid.tangents()[k])
}

impl SzegoSolution {
    fn new(a: Complex64, s_trace: BoundaryField) -> Self {
        let l_trace = garabedian_boundary(&s_trace);
        let grid = s_trace.grid().clone();
        let l_regular = l_trace.map(|k, l| l - 1.0 / (TWO_PI * (grid.nodes()[k] - a)));
        Self {
            a,
            s_trace,
            l_trace,
            l_regular,
        }
    }

    pub fn base(&self) -> Complex64 {
        self.a
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        self.s_trace.grid()
    }

    pub fn szego_trace(&self) -> &BoundaryField {
        &self.s_trace
    }

    pub fn garabedian_trace(&self) -> &BoundaryField {
        &self.l_trace
    }

    /// `S(z,a)` at an interior point or a grid node.
    pub fn szego_at(&self, z: Complex64) -> Result<Complex64> {
        if let Some(k) = self.grid().node_index(z) {
            return Ok(self.s_trace.value(k));
        }
        cauchy_value(&self.s_trace, z, 0)
    }

    /// `∂_z S(z,a)` at an interior point.
    pub fn szego_deriv_at(&self, z: Complex64) -> Result<Complex64> {
        cauchy_value(&self.s_trace, z, 1)
    }

    /// `L(z,a)` at an interior point (`z ≠ a`; the pole is added in closed
    /// form) or a grid node.
    pub fn garabedian_at(&self, z: Complex64) -> Result<Complex64> {
        if let Some(k) = self.grid().node_index(z) {
            return Ok(self.l_trace.value(k));
        }
        if (z - self.a).norm() < 1e-12 {
            return Err(Error::PoleOrGuard(
                z,
                "garabedian kernel has its pole at the base point".into(),
            ));
        }
        Ok(self.garabedian_regular_at(z)? + 1.0 / (TWO_PI * (z - self.a)))
    }

    /// Holomorphic part of `L(·,a)` at an interior point.
    pub fn garabedian_regular_at(&self, z: Complex64) -> Result<Complex64> {
        cauchy_value(&self.l_regular, z, 0)
    }

    /// `S(a,a)`, checked real and strictly positive.
    pub fn value_at_base(&self) -> Result<f64> {
        let v = self.szego_at(self.a)?;
        if v.re <= 0.0 || v.im.abs() > 1e-8 * v.re.abs() {
            return Err(Error::InadmissibleBase(format!(
                "S(a,a) = {v} is not real positive"
            )));
        }
        Ok(v.re)
    }
}

/// Cached Kerzman–Stein solves on one grid.
pub struct SzegoEngine {
    kst: KstSolver,
    cache: RwLock<HashMap<(u64, u64), Arc<SzegoSolution>>>,
    zero_cache: RwLock<HashMap<(u64, u64), Arc<Vec<Complex64>>>>,
}

impl SzegoEngine {
    pub fn new(grid: Arc<BoundaryGrid>) -> Result<Arc<Self>> {
        Ok(Arc::new(Self {
            kst: KstSolver::new(grid)?,
            cache: RwLock::new(HashMap::new()),
            zero_cache: RwLock::new(HashMap::new()),
        }))
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        self.kst.grid()
    }

    pub fn kst(&self) -> &KstSolver {
        &self.kst
    }

    /// Boundary solution for base `a`, cached per point.
    pub fn solution(&self, a: Complex64) -> Result<Arc<SzegoSolution>> {
        let key = (a.re.to_bits(), a.im.to_bits());
        if let Some(sol) = self.cache.read().unwrap().get(&key) {
            return Ok(sol.clone());
        }
        let trace = self.kst.solve_trace(a)?;
        let sol = Arc::new(SzegoSolution::new(a, trace));
        self.cache.write().unwrap().insert(key, sol.clone());
        Ok(sol)
    }

    /// `S(z,w)` for interior `w` and interior-or-node `z`.
    pub fn szego_kernel(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.solution(w)?.szego_at(z)
    }

    /// `L(z,w)` for interior `w` and `z ≠ w`.
    pub fn garabedian_kernel(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.solution(w)?.garabedian_at(z)
    }

    /// All zeros `a_1..a_{n-1}` of `S(·,a)` in the domain (cached per base).
    pub fn szego_zeros(&self, a: Complex64) -> Result<Vec<Complex64>> {
        let key = (a.re.to_bits(), a.im.to_bits());
        if let Some(z) = self.zero_cache.read().unwrap().get(&key) {
            return Ok(z.as_ref().clone());
        }
        let zeros = self.szego_zeros_uncached(a)?;
        self.zero_cache
            .write()
            .unwrap()
            .insert(key, Arc::new(zeros.clone()));
        Ok(zeros)
    }

    fn szego_zeros_uncached(&self, a: Complex64) -> Result<Vec<Complex64>> {
        let grid = self.grid();
        let n = grid.domain().connectivity();
        let sol = self.solution(a)?;
        if n == 1 {
            return Ok(Vec::new());
        }
        let expected = n - 1;
        let counted = count_zeros_from_trace(sol.szego_trace())?;
        if counted != expected as i64 {
            return Err(Error::InadmissibleBase(format!(
                "boundary winding counts {counted} zeros of S(·,a), expected {expected}; \
                 inadmissible base point or insufficient nodes"
            )));
        }
        let scale = grid.domain().diameter();
        // Counting contours stay this far from the boundary; upsampled
        // Cauchy evaluation keeps them accurate at a fraction of a node spacing.
        let search = ZeroSearch {
            domain: grid.domain(),
            boundary_margin: (0.75 * grid.max_spacing()).min(0.05 * scale),
            min_box: 1e-6 * scale,
            newton_step_tol: 1e-12,
        };
        let mut f =
            |z: Complex64, d: f64| Ok(cauchy_value_at_dist(sol.szego_trace(), z, 0, d));
        let mut df =
            |z: Complex64, d: f64| Ok(cauchy_value_at_dist(sol.szego_trace(), z, 1, d));
        let zeros = search.find(expected, &mut f, &mut df)?;

        // Residual, distinctness and simplicity gates.
        let smax = sol.szego_trace().max_norm();
        for &zk in &zeros {
            let residual = sol.szego_at(zk)?.norm();
            if residual > 1e-11 * smax {
                return Err(Error::InadmissibleBase(format!(
                    "zero at {zk} has residual {residual:.3e}"
                )));
            }
            let slope = sol.szego_deriv_at(zk)?.norm();
            if slope < 1e-6 * smax {
                return Err(Error::InadmissibleBase(format!(
                    "zero at {zk} is not numerically simple (|S'| = {slope:.3e})"
                )));
            }
        }
        for i in 0..zeros.len() {
            for j in (i + 1)..zeros.len() {
                if (zeros[i] - zeros[j]).norm() < 1e-3 * scale {
                    return Err(Error::InadmissibleBase(format!(
                        "zeros {} and {} are too close",
                        zeros[i], zeros[j]
                    )));
                }
            }
        }
        let mut zeros = zeros;
        zeros.sort_by(|p, q| (p.re, p.im).partial_cmp(&(q.re, q.im)).unwrap());
        Ok(zeros)
    }
}

/// The two-point kernel basis: base `a` with the zeros of `S(·,a)`, the Gram
/// matrix `[S(a_j,a_k)]` and its inverse `c`, the boundary solutions at every
/// `a_i`, and the second map base `b`.
pub struct AhlforsBasis {
    a: Complex64,
    b: Complex64,
    zeros: Vec<Complex64>,
    gram: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
    sols: Vec<Arc<SzegoSolution>>,
    sol_b: Arc<SzegoSolution>,
    separation_margin: f64,
}

impl AhlforsBasis {
    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// Base points `a_0 = a, a_1, .., a_{n-1}`.
    pub fn points(&self) -> Vec<Complex64> {
        std::iter::once(self.a).chain(self.zeros.iter().cloned()).collect()
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    /// Boundary solution at `a_i`.
    pub fn solution(&self, i: usize) -> &Arc<SzegoSolution> {
        &self.sols[i]
    }

    pub fn solution_b(&self) -> &Arc<SzegoSolution> {
        &self.sol_b
    }

    pub fn n(&self) -> usize {
        self.sols.len()
    }

    /// Fiber-separation margin of the pair recorded at construction
    /// (heuristic evidence, not a proof of primitivity).
    pub fn separation_margin(&self) -> f64 {
        self.separation_margin
    }

    pub(crate) fn set_separation_margin(&mut self, margin: f64) {
        self.separation_margin = margin;
    }
}

/// Builds the kernel basis at `(a, b)`: zeros, solves at every `a_i`, Gram
/// matrix and inverse. The fiber-separation heuristic for `b` lives with the
/// Ahlfors-map machinery; this constructor only checks the linear algebra.
pub fn build_basis(engine: &SzegoEngine, a: Complex64, b: Complex64) -> Result<AhlforsBasis> {
    let grid = engine.grid();
    if !grid.domain().contains(b) {
        return Err(Error::NotInterior(b));
    }
    if (a - b).norm() < 1e-8 * grid.domain().diameter() {
        return Err(Error::InvalidInput("base points a and b must differ".into()));
    }
    let zeros = engine.szego_zeros(a)?;
    let points: Vec<Complex64> = std::iter::once(a).chain(zeros.iter().cloned()).collect();
    let sols: Vec<Arc<SzegoSolution>> = points
        .iter()
        .map(|&p| engine.solution(p))
        .collect::<Result<_>>()?;
    let sol_b = engine.solution(b)?;

    let n = points.len();
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            gram[(j, k)] = sols[k].szego_at(points[j])?;
        }
    }
    // Symmetrize to the hermitian part before factorizing.
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    if nalgebra::Cholesky::new(gram.clone()).is_none() {
        return Err(Error::InadmissibleBase(
            "gram matrix [S(a_j,a_k)] is not positive definite".into(),
        ));
    }
    let c = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InadmissibleBase("gram matrix is singular".into()))?;
    let defect = (&c * &gram - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::InadmissibleBase(format!(
            "gram inversion defect {defect:.3e}"
        )));
    }
    Ok(AhlforsBasis {
        a,
        b,
        zeros,
        gram,
        c,
        sols,
        sol_b,
        separation_margin: f64::NAN,
    })
}

/// Weighted sum `Σ_{i,j} c_ij S(z,a_i) conj(S(w,a_j))` from the basis traces.
pub fn csum_s_sconj(basis: &AhlforsBasis, z: Complex64, w: Complex64) -> Result<Complex64> {
    let n = basis.n();
    let s_z: Vec<Complex64> = (0..n)
        .map(|i| basis.solution(i).szego_at(z))
        .collect::<Result<_>>()?;
    let s_w: Vec<Complex64> = (0..n)
        .map(|j| basis.solution(j).szego_at(w))
        .collect::<Result<_>>()?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += basis.coefficients()[(i, j)] * s_z[i] * s_w[j].conj();
        }
    }
    Ok(acc)
}

/// Weighted sum `Σ_{i,j} c_ij S(z,a_i) L(w,a_j)`.
pub fn csum_s_l(basis: &AhlforsBasis, z: Complex64, w: Complex64) -> Result<Complex64> {
    let n = basis.n();
    let s_z: Vec<Complex64> = (0..n)
        .map(|i| basis.solution(i).szego_at(z))
        .collect::<Result<_>>()?;
    let l_w: Vec<Complex64> = (0..n)
        .map(|j| basis.solution(j).garabedian_at(w))
        .collect::<Result<_>>()?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += basis.coefficients()[(i, j)] * s_z[i] * l_w[j];
        }
    }
    Ok(acc)
}
