//! Boundary curves, multiply connected domains and quadrature grids.
//!
//! Curves are truncated Fourier series `z(t) = Σ c_k e^{ikt}` on `[0, 2π)`,
//! which keeps every boundary real-analytic and makes the periodic trapezoid
//! rule spectrally accurate downstream. The orientation convention everywhere
//! is *domain on the left*: the outer curve runs counterclockwise, inner
//! curves (hole boundaries) run clockwise, and `i·T(z)` points into the
//! domain.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Direction of travel along a closed curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// A closed real-analytic curve given by a centered list of Fourier
/// coefficients `c_k`, `k = -K..=K`, with `z(t) = Σ c_k e^{ikt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCurve {
    coeffs: Vec<Complex64>,
    orientation: Orientation,
}

/// Density used when sampling curves for validation and point location.
const DENSE_SAMPLES: usize = 2048;

impl ParamCurve {
    /// Builds a curve from centered coefficients (`coeffs.len()` must be odd)
    /// and checks the parameterization invariants: nonvanishing speed,
    /// simplicity on a dense sample, and agreement between the stated
    /// orientation and the sign of the enclosed area.
    pub fn new(coeffs: Vec<Complex64>, orientation: Orientation) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(Error::InvalidDomain(
                "fourier coefficient list must have odd length 2K+1".into(),
            ));
        }
        let curve = Self {
            coeffs,
            orientation,
        };
        curve.check_speed(0)?;
        curve.check_simplicity()?;
        curve.check_orientation()?;
        Ok(curve)
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Highest retained Fourier order K.
    pub fn max_order(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Parametric mean `c_0`, used as a deterministic interior anchor for the
    /// log sources of hole boundaries.
    pub fn center(&self) -> Complex64 {
        self.coeffs[self.coeffs.len() / 2]
    }

    /// `z(t)`. Summation runs in a fixed order (k = -K..K) so repeated
    /// evaluation at the same `t` is bit-identical.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.series(t, |_k| Complex64::new(1.0, 0.0))
    }

    /// `z'(t) = Σ ik c_k e^{ikt}`.
    pub fn deriv(&self, t: f64) -> Complex64 {
        self.series(t, |k| I * k as f64)
    }

    /// `z''(t) = Σ -k² c_k e^{ikt}`.
    pub fn deriv2(&self, t: f64) -> Complex64 {
        self.series(t, |k| Complex64::new(-((k * k) as f64), 0.0))
    }

    fn series(&self, t: f64, factor: impl Fn(i64) -> Complex64) -> Complex64 {
        let k_max = self.max_order() as i64;
        let w = Complex64::new(0.0, t).exp();
        let mut pow = w.powi(-(k_max as i32));
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx as i64 - k_max;
            acc += factor(k) * c * pow;
            pow *= w;
        }
        acc
    }

    /// Curvature at parameter `t` (signed, with respect to the direction of
    /// travel): `κ = Im(z'' conj(z')) / |z'|³`.
    pub fn curvature(&self, t: f64) -> f64 {
        let d = self.deriv(t);
        let dd = self.deriv2(t);
        (dd * d.conj()).im / d.norm().powi(3)
    }

    /// Arclength by the periodic trapezoid rule on `m` samples.
    pub fn length(&self, m: usize) -> f64 {
        let h = 2.0 * PI / m as f64;
        (0..m).map(|k| self.deriv(h * k as f64).norm()).sum::<f64>() * h
    }

    fn check_speed(&self, curve_idx: usize) -> Result<()> {
        let m = DENSE_SAMPLES.max(16 * self.coeffs.len());
        let mut max_speed: f64 = 0.0;
        for k in 0..m {
            let t = 2.0 * PI * k as f64 / m as f64;
            max_speed = max_speed.max(self.deriv(t).norm());
        }
        for k in 0..m {
            let t = 2.0 * PI * k as f64 / m as f64;
            let speed = self.deriv(t).norm();
            if speed <= 1e-9 * max_speed {
                return Err(Error::DegenerateCurve {
                    curve: curve_idx,
                    t,
                    speed,
                });
            }
        }
        Ok(())
    }

    /// Simplicity on a dense sample: samples at parameter distance at least
    /// three spacings (mod 2π) must stay geometrically separated.
    fn check_simplicity(&self) -> Result<()> {
        let m = 1024.max(8 * self.coeffs.len());
        let pts: Vec<Complex64> = (0..m)
            .map(|k| self.eval(2.0 * PI * k as f64 / m as f64))
            .collect();
        let min_speed = (0..m)
            .map(|k| self.deriv(2.0 * PI * k as f64 / m as f64).norm())
            .fold(f64::INFINITY, f64::min);
        let dt = 2.0 * PI / m as f64;
        let sep_t = 3.0 * dt;
        let floor = 0.05 * min_speed * sep_t;
        for i in 0..m {
            for j in (i + 1)..m {
                let wrap = ((j - i).min(m - (j - i))) as f64 * dt;
                if wrap < sep_t {
                    continue;
                }
                if (pts[i] - pts[j]).norm() < floor {
                    return Err(Error::InvalidDomain(format!(
                        "simplicity violated: z({:.4}) and z({:.4}) are {:.3e} apart",
                        i as f64 * dt,
                        j as f64 * dt,
                        (pts[i] - pts[j]).norm()
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_orientation(&self) -> Result<()> {
        // Signed area (1/2)∮ Im(conj(z) z') dt: positive for ccw.
        let m = 1024;
        let h = 2.0 * PI / m as f64;
        let area: f64 = (0..m)
            .map(|k| {
                let t = h * k as f64;
                (self.eval(t).conj() * self.deriv(t)).im
            })
            .sum::<f64>()
            * h
            * 0.5;
        let ok = match self.orientation {
            Orientation::Ccw => area > 0.0,
            Orientation::Cw => area < 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!(
                "stated orientation {:?} contradicts signed area {:.3e}",
                self.orientation, area
            )))
        }
    }

    /// Circle of radius `r` around `center`, in the given orientation.
    pub fn circle(center: Complex64, r: f64, orientation: Orientation) -> Self {
        let coeffs = match orientation {
            Orientation::Ccw => vec![Complex64::new(0.0, 0.0), center, Complex64::new(r, 0.0)],
            Orientation::Cw => vec![Complex64::new(r, 0.0), center, Complex64::new(0.0, 0.0)],
        };
        // Circles always satisfy the invariants.
        Self {
            coeffs,
            orientation,
        }
    }
}

/// An n-connected bounded domain: one outer curve (ccw) and n-1 inner hole
/// boundaries (cw), all strictly separated.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    outer: ParamCurve,
    inners: Vec<ParamCurve>,
    /// Dense polylines per curve (outer first), used for point location.
    dense: Vec<Vec<Complex64>>,
}

impl DomainSpec {
    pub fn new(outer: ParamCurve, inners: Vec<ParamCurve>) -> Result<Self> {
        if outer.orientation() != Orientation::Ccw {
            return Err(Error::InvalidDomain(
                "orientation convention violated: outer curve must be ccw".into(),
            ));
        }
        for (j, c) in inners.iter().enumerate() {
            if c.orientation() != Orientation::Cw {
                return Err(Error::InvalidDomain(format!(
                    "orientation convention violated: inner curve {j} must be cw"
                )));
            }
        }
        let dense: Vec<Vec<Complex64>> = std::iter::once(&outer)
            .chain(inners.iter())
            .map(|c| {
                (0..DENSE_SAMPLES)
                    .map(|k| c.eval(2.0 * PI * k as f64 / DENSE_SAMPLES as f64))
                    .collect()
            })
            .collect();
        let spec = Self {
            outer,
            inners,
            dense,
        };
        spec.check_containment()?;
        Ok(spec)
    }

    pub fn outer(&self) -> &ParamCurve {
        &self.outer
    }

    pub fn inners(&self) -> &[ParamCurve] {
        &self.inners
    }

    /// Connectivity n = 1 + number of holes.
    pub fn connectivity(&self) -> usize {
        1 + self.inners.len()
    }

    pub fn curve(&self, idx: usize) -> &ParamCurve {
        if idx == 0 {
            &self.outer
        } else {
            &self.inners[idx - 1]
        }
    }

    pub fn n_curves(&self) -> usize {
        1 + self.inners.len()
    }

    /// Rough diameter of the domain, from the dense outer polyline.
    pub fn diameter(&self) -> f64 {
        let pts = &self.dense[0];
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in pts {
            lo_x = lo_x.min(p.re);
            hi_x = hi_x.max(p.re);
            lo_y = lo_y.min(p.im);
            hi_y = hi_y.max(p.im);
        }
        ((hi_x - lo_x).powi(2) + (hi_y - lo_y).powi(2)).sqrt()
    }

    /// Axis-aligned bounding box of the outer curve: (min corner, max corner).
    pub fn bounding_box(&self) -> (Complex64, Complex64) {
        let pts = &self.dense[0];
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in pts {
            lo_x = lo_x.min(p.re);
            hi_x = hi_x.max(p.re);
            lo_y = lo_y.min(p.im);
            hi_y = hi_y.max(p.im);
        }
        (Complex64::new(lo_x, lo_y), Complex64::new(hi_x, hi_y))
    }

    /// Winding of the dense polyline of curve `idx` around `p`.
    fn polyline_winding(&self, idx: usize, p: Complex64) -> i64 {
        let pts = &self.dense[idx];
        let mut total = 0.0f64;
        let mut prev = (pts[0] - p).arg();
        for q in pts.iter().skip(1).chain(std::iter::once(&pts[0])) {
            let cur = (*q - p).arg();
            let mut d = cur - prev;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            total += d;
            prev = cur;
        }
        (total / (2.0 * PI)).round() as i64
    }

    /// Crossing-number parity of the polyline of curve `idx` around `p`
    /// (true when a rightward ray crosses an odd number of segments).
    fn polyline_odd_crossings(&self, idx: usize, p: Complex64) -> bool {
        let pts = &self.dense[idx];
        let mut inside = false;
        let mut prev = pts[pts.len() - 1];
        for &cur in pts {
            if (cur.im > p.im) != (prev.im > p.im) {
                let x = prev.re + (p.im - prev.im) / (cur.im - prev.im) * (cur.re - prev.re);
                if x > p.re {
                    inside = !inside;
                }
            }
            prev = cur;
        }
        inside
    }

    /// True when `z` lies in the open domain (inside the outer curve, outside
    /// every hole).
    pub fn contains(&self, z: Complex64) -> bool {
        if !self.polyline_odd_crossings(0, z) {
            return false;
        }
        for j in 1..self.n_curves() {
            if self.polyline_odd_crossings(j, z) {
                return false;
            }
        }
        true
    }

    /// Distance from `z` to the nearest boundary point (dense-sample
    /// approximation).
    pub fn dist_to_boundary(&self, z: Complex64) -> f64 {
        let mut best = f64::MAX;
        for pts in &self.dense {
            for p in pts {
                let d = (p.re - z.re) * (p.re - z.re) + (p.im - z.im) * (p.im - z.im);
                best = best.min(d);
            }
        }
        best.sqrt()
    }

    /// Dense boundary polylines, outer curve first.
    pub fn dense_polylines(&self) -> &[Vec<Complex64>] {
        &self.dense
    }

    fn check_containment(&self) -> Result<()> {
        for (j, inner) in self.inners.iter().enumerate() {
            let c = inner.center();
            if self.polyline_winding(0, c) != 1 {
                return Err(Error::InvalidDomain(format!(
                    "containment violated: inner curve {j} is not inside the outer curve"
                )));
            }
            // The other holes must not wind around this hole's anchor.
            for (k, _) in self.inners.iter().enumerate() {
                if k != j && self.polyline_winding(k + 1, c) != 0 {
                    return Err(Error::InvalidDomain(format!(
                        "containment violated: inner curves {j} and {k} are nested"
                    )));
                }
            }
        }
        // Strict separation between all curve pairs.
        for a in 0..self.n_curves() {
            for b in (a + 1)..self.n_curves() {
                let mut min_d = f64::MAX;
                for p in &self.dense[a] {
                    for q in &self.dense[b] {
                        min_d = min_d.min((*p - *q).norm());
                    }
                }
                if min_d <= 1e-3 * self.diameter() {
                    return Err(Error::InvalidDomain(format!(
                        "disjointness violated: curves {a} and {b} come within {min_d:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Built-in domain families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Disc,
    Annulus,
    Blob3,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disc" => Ok(Preset::Disc),
            "annulus" => Ok(Preset::Annulus),
            "blob3" => Ok(Preset::Blob3),
            other => Err(Error::InvalidInput(format!("unknown preset '{other}'"))),
        }
    }
}

/// Builds one of the preset domains.
///
/// * `disc`: params `[radius]` (default 1).
/// * `annulus`: params `[rho]` with `0 < rho < 1` (default 0.5).
/// * `blob3`: params `[amplitude]` scaling the non-circular perturbations
///   (default 1), three boundary curves in total.
pub fn make_preset_domain(kind: Preset, params: &[f64]) -> Result<DomainSpec> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match kind {
        Preset::Disc => {
            let r = params.first().copied().unwrap_or(1.0);
            if !(r > 0.0) {
                return Err(Error::InvalidDomain(
                    "nondegenerate parameterization violated: disc radius must be > 0".into(),
                ));
            }
            DomainSpec::new(ParamCurve::circle(c(0.0, 0.0), r, Orientation::Ccw), vec![])
        }
        Preset::Annulus => {
            let rho = params.first().copied().unwrap_or(0.5);
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidDomain(
                    "containment violated: annulus ratio must satisfy 0 < rho < 1".into(),
                ));
            }
            DomainSpec::new(
                ParamCurve::circle(c(0.0, 0.0), 1.0, Orientation::Ccw),
                vec![ParamCurve::circle(c(0.0, 0.0), rho, Orientation::Cw)],
            )
        }
        Preset::Blob3 => {
            let amp = params.first().copied().unwrap_or(1.0);
            // Outer: perturbed circle of scale ~1.1; inners: two small smooth
            // blobs. Coefficient lists are centered, k = -K..K.
            let outer = ParamCurve::new(
                vec![
                    c(0.0, 0.0),
                    c(0.06 * amp, 0.0),
                    c(0.0, 0.0),
                    c(1.1, 0.0),
                    c(0.12 * amp, 0.02 * amp),
                ],
                Orientation::Ccw,
            )?;
            let inner1 = ParamCurve::new(
                vec![
                    c(0.025 * amp, 0.0),
                    c(0.18, 0.0),
                    c(-0.45, 0.10),
                    c(0.02 * amp, 0.01 * amp),
                    c(0.0, 0.0),
                ],
                Orientation::Cw,
            )?;
            let inner2 = ParamCurve::new(
                vec![
                    c(0.0, 0.0),
                    c(0.15, 0.0),
                    c(0.52, 0.18),
                    c(0.0, 0.0),
                    c(0.02 * amp, -0.015 * amp),
                ],
                Orientation::Cw,
            )?;
            DomainSpec::new(outer, vec![inner1, inner2])
        }
    }
}

static GRID_ID: AtomicU64 = AtomicU64::new(1);

/// Nyström quadrature nodes on the full boundary.
///
/// Nodes are equispaced in the curve parameter, curve-major (outer curve
/// first, then the holes). `tangents[k]` is the unit tangent `T(z_k)` and
/// `weights[k]` the trapezoid arclength weight `|z'(t_k)|·2π/N`, so
/// `dw ≈ T_k · ds_k` node-wise.
#[derive(Debug)]
pub struct BoundaryGrid {
    domain: Arc<DomainSpec>,
    nodes: Vec<Complex64>,
    tangents: Vec<Complex64>,
    dparam: Vec<Complex64>,
    weights: Vec<f64>,
    curve_index: Vec<usize>,
    t_values: Vec<f64>,
    nodes_per_curve: usize,
    id: u64,
    fine: RwLock<HashMap<usize, Arc<FineGeometry>>>,
}

/// Refined copy of the grid geometry at `factor ×` the node density,
/// evaluated exactly from the curve parameterizations. Used for accurate
/// quadrature when the target point sits close to the boundary.
#[derive(Debug)]
pub struct FineGeometry {
    pub nodes: Vec<Complex64>,
    pub dparam: Vec<Complex64>,
    /// Parameter spacing 2π/(factor · nodes_per_curve).
    pub h: f64,
    pub factor: usize,
    pub nodes_per_curve: usize,
}

impl FineGeometry {
    pub fn curve_range(&self, curve: usize) -> std::ops::Range<usize> {
        let n = self.nodes_per_curve;
        curve * n..(curve + 1) * n
    }
}

impl BoundaryGrid {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn domain(&self) -> &Arc<DomainSpec> {
        &self.domain
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn tangents(&self) -> &[Complex64] {
        &self.tangents
    }

    /// `z'(t_k)` (parametric derivative, before normalization).
    pub fn dparam(&self) -> &[Complex64] {
        &self.dparam
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn curve_index(&self) -> &[usize] {
        &self.curve_index
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn nodes_per_curve(&self) -> usize {
        self.nodes_per_curve
    }

    pub fn n_curves(&self) -> usize {
        self.domain.n_curves()
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn curve_range(&self, curve: usize) -> std::ops::Range<usize> {
        let n = self.nodes_per_curve;
        curve * n..(curve + 1) * n
    }

    /// Largest arclength spacing between adjacent nodes.
    pub fn max_spacing(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// `dw` complex quadrature weight at node `k` (`T_k ds_k = z'(t_k) 2π/N`).
    pub fn dw(&self, k: usize) -> Complex64 {
        self.tangents[k] * self.weights[k]
    }

    /// Index of the grid node equal to `z` (bit-tolerant), if any.
    pub fn node_index(&self, z: Complex64) -> Option<usize> {
        let tol = 1e-13 * (1.0 + self.domain.diameter());
        self.nodes.iter().position(|n| (n - z).norm() <= tol)
    }

    /// Curvature of the boundary at node `k` (with respect to the direction
    /// of travel).
    pub fn curvature(&self, k: usize) -> f64 {
        self.domain
            .curve(self.curve_index[k])
            .curvature(self.t_values[k])
    }

    /// Exact curve geometry at `factor ×` node density (cached).
    pub fn fine_geometry(&self, factor: usize) -> Arc<FineGeometry> {
        if let Some(f) = self.fine.read().unwrap().get(&factor) {
            return f.clone();
        }
        let npc = self.nodes_per_curve * factor;
        let h = 2.0 * PI / npc as f64;
        let n_curves = self.n_curves();
        let mut nodes = Vec::with_capacity(n_curves * npc);
        let mut dparam = Vec::with_capacity(n_curves * npc);
        for c in 0..n_curves {
            let curve = self.domain.curve(c);
            for k in 0..npc {
                let t = h * k as f64;
                nodes.push(curve.eval(t));
                dparam.push(curve.deriv(t));
            }
        }
        let fine = Arc::new(FineGeometry {
            nodes,
            dparam,
            h,
            factor,
            nodes_per_curve: npc,
        });
        self.fine
            .write()
            .unwrap()
            .insert(factor, fine.clone());
        fine
    }
}

/// Builds the quadrature grid with `nodes_per_curve` equispaced-in-t nodes on
/// every boundary curve. `nodes_per_curve` must be even and at least 16.
pub fn boundary_grid(domain: Arc<DomainSpec>, nodes_per_curve: usize) -> Result<BoundaryGrid> {
    if nodes_per_curve < 16 || nodes_per_curve % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "nodes_per_curve must be even and >= 16, got {nodes_per_curve}"
        )));
    }
    build_grid_unchecked(domain, nodes_per_curve)
}

/// Grid construction without the node-count floor; used by tests that
/// exercise the geometry at illustratively coarse resolutions.
pub(crate) fn build_grid_unchecked(
    domain: Arc<DomainSpec>,
    nodes_per_curve: usize,
) -> Result<BoundaryGrid> {
    let n_curves = domain.n_curves();
    let npc = nodes_per_curve;
    let h = 2.0 * PI / npc as f64;
    let mut nodes = Vec::with_capacity(n_curves * npc);
    let mut tangents = Vec::with_capacity(n_curves * npc);
    let mut dparam = Vec::with_capacity(n_curves * npc);
    let mut weights = Vec::with_capacity(n_curves * npc);
    let mut curve_index = Vec::with_capacity(n_curves * npc);
    let mut t_values = Vec::with_capacity(n_curves * npc);
    for c in 0..n_curves {
        let curve = domain.curve(c);
        for k in 0..npc {
            let t = h * k as f64;
            let z = curve.eval(t);
            let d = curve.deriv(t);
            let speed = d.norm();
            if speed <= 1e-12 {
                return Err(Error::DegenerateCurve {
                    curve: c,
                    t,
                    speed,
                });
            }
            nodes.push(z);
            tangents.push(d / speed);
            dparam.push(d);
            weights.push(speed * h);
            curve_index.push(c);
            t_values.push(t);
        }
    }
    Ok(BoundaryGrid {
        domain,
        nodes,
        tangents,
        dparam,
        weights,
        curve_index,
        t_values,
        nodes_per_curve: npc,
        id: GRID_ID.fetch_add(1, Ordering::Relaxed),
        fine: RwLock::new(HashMap::new()),
    })
}

/// Winding number `(1/2πi)∮ dz/(z - point)` of a single curve, rounded to the
/// nearest integer; the second component is the distance of the raw value
/// from that integer.
pub fn winding_number(curve: &ParamCurve, point: Complex64) -> Result<(i64, f64)> {
    let mut m = 512usize.max(16 * curve.coeffs().len());
    loop {
        let h = 2.0 * PI / m as f64;
        let mut too_close = false;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut min_dist = f64::MAX;
        let mut max_speed: f64 = 0.0;
        for k in 0..m {
            let t = h * k as f64;
            let z = curve.eval(t);
            let d = curve.deriv(t);
            let dist = (z - point).norm();
            min_dist = min_dist.min(dist);
            max_speed = max_speed.max(d.norm());
            if dist <= max_speed * h {
                too_close = true;
                break;
            }
            acc += d / (z - point);
        }
        if too_close {
            if min_dist <= max_speed * (2.0 * PI / 8192.0) {
                return Err(Error::TooCloseToBoundary(point));
            }
            m *= 2;
            continue;
        }
        let raw = acc * h / (2.0 * PI * I);
        let idx = raw.re.round();
        let residual = ((raw.re - idx).powi(2) + raw.im.powi(2)).sqrt();
        if residual < 1e-2 || m >= 8192 {
            if residual >= 0.25 {
                return Err(Error::WindingFailure(format!(
                    "winding integral did not settle near an integer (residual {residual:.3e})"
                )));
            }
            return Ok((idx as i64, residual));
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn presets_satisfy_invariants() {
        let disc = make_preset_domain(Preset::Disc, &[1.0]).unwrap();
        assert_eq!(disc.connectivity(), 1);
        let ann = make_preset_domain(Preset::Annulus, &[0.5]).unwrap();
        assert_eq!(ann.connectivity(), 2);
        let blob = make_preset_domain(Preset::Blob3, &[]).unwrap();
        assert_eq!(blob.connectivity(), 3);
    }

    #[test]
    fn preset_rejections_name_the_invariant() {
        let err = make_preset_domain(Preset::Disc, &[-1.0]).unwrap_err();
        assert!(err.to_string().contains("radius must be > 0"));
        let err = make_preset_domain(Preset::Annulus, &[1.5]).unwrap_err();
        assert!(err.to_string().contains("0 < rho < 1"));
        // Oversized blob plates collide with each other / the outer curve.
        let err = make_preset_domain(Preset::Blob3, &[14.0]).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("violated") || msg.contains("degenerate"),
            "unexpected message: {msg}"
        );
    }

    #[test]
    fn curve_is_periodic_by_construction() {
        let blob = make_preset_domain(Preset::Blob3, &[]).unwrap();
        for idx in 0..blob.n_curves() {
            let curve = blob.curve(idx);
            let z0 = curve.eval(0.0);
            let z1 = curve.eval(2.0 * PI);
            assert!((z0 - z1).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_reproduces_curve_samples_exactly() {
        let blob = Arc::new(make_preset_domain(Preset::Blob3, &[]).unwrap());
        let grid = boundary_grid(blob.clone(), 64).unwrap();
        for k in 0..grid.total_nodes() {
            let cidx = grid.curve_index()[k];
            let z = blob.curve(cidx).eval(grid.t_values()[k]);
            assert_eq!(z, grid.nodes()[k]);
        }
    }

    #[test]
    fn coarse_disc_grid_matches_circle_geometry() {
        // Illustrative 4-node grid on the unit circle: nodes 1, i, -1, -i
        // with tangents i, -1, -i, 1 and weights π/2.
        let disc = Arc::new(make_preset_domain(Preset::Disc, &[1.0]).unwrap());
        let grid = build_grid_unchecked(disc, 4).unwrap();
        let want_nodes = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let want_tangents = [c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)];
        for k in 0..4 {
            assert!((grid.nodes()[k] - want_nodes[k]).norm() < 1e-15);
            assert!((grid.tangents()[k] - want_tangents[k]).norm() < 1e-15);
            assert_relative_eq!(grid.weights()[k], PI / 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn inner_annulus_tangents_are_clockwise() {
        let ann = Arc::new(make_preset_domain(Preset::Annulus, &[0.5]).unwrap());
        let grid = boundary_grid(ann, 32).unwrap();
        for k in grid.curve_range(1) {
            let z = grid.nodes()[k];
            let want = -I * z / z.norm();
            assert!((grid.tangents()[k] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn unit_tangents_and_curve_lengths() {
        let blob = Arc::new(make_preset_domain(Preset::Blob3, &[]).unwrap());
        let grid = boundary_grid(blob.clone(), 256).unwrap();
        for k in 0..grid.total_nodes() {
            assert!((grid.tangents()[k].norm() - 1.0).abs() < 1e-14);
        }
        // Σ ds per curve against an adaptive Simpson arclength oracle.
        for idx in 0..blob.n_curves() {
            let ds_sum: f64 = grid
                .curve_range(idx)
                .map(|k| grid.weights()[k])
                .sum();
            let oracle = adaptive_arclength(blob.curve(idx));
            assert!(
                (ds_sum - oracle).abs() < 1e-12 * oracle,
                "curve {idx}: trapezoid {ds_sum} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn refinement_keeps_curve_lengths_fixed() {
        let blob = Arc::new(make_preset_domain(Preset::Blob3, &[]).unwrap());
        let coarse = boundary_grid(blob.clone(), 256).unwrap();
        let fine = boundary_grid(blob.clone(), 512).unwrap();
        for idx in 0..blob.n_curves() {
            let a: f64 = coarse.curve_range(idx).map(|k| coarse.weights()[k]).sum();
            let b: f64 = fine.curve_range(idx).map(|k| fine.weights()[k]).sum();
            assert!((a - b).abs() < 1e-13 * a.max(1.0));
        }
    }

    #[test]
    fn winding_numbers_match_orientation() {
        let ann = make_preset_domain(Preset::Annulus, &[0.5]).unwrap();
        assert_eq!(winding_number(ann.outer(), c(0.0, 0.0)).unwrap().0, 1);
        assert_eq!(winding_number(ann.outer(), c(2.0, 0.0)).unwrap().0, 0);
        assert_eq!(winding_number(&ann.inners()[0], c(0.0, 0.0)).unwrap().0, -1);
        assert!(matches!(
            winding_number(ann.outer(), c(1.0, 0.0)),
            Err(Error::TooCloseToBoundary(_))
        ));
    }

    #[test]
    fn interior_points_see_outer_once_and_holes_not_at_all() {
        let blob = make_preset_domain(Preset::Blob3, &[]).unwrap();
        let samples = [c(0.0, -0.4), c(0.1, 0.55), c(-0.05, 0.0), c(0.8, -0.2)];
        for p in samples {
            assert!(blob.contains(p), "sample {p} expected interior");
            assert_eq!(winding_number(blob.outer(), p).unwrap().0, 1);
            for inner in blob.inners() {
                assert_eq!(winding_number(inner, p).unwrap().0, 0);
            }
        }
        // Hole anchors are not in the domain.
        for inner in blob.inners() {
            assert!(!blob.contains(inner.center()));
        }
    }

    /// Adaptive Simpson quadrature of |z'(t)| over one period.
    fn adaptive_arclength(curve: &ParamCurve) -> f64 {
        fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * (b - a) / 6.0
        }
        fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 1e-14 * whole.abs().max(1.0) {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, depth - 1) + recurse(f, m, b, right, depth - 1)
            }
        }
        let f = |t: f64| curve.deriv(t).norm();
        let mut total = 0.0;
        let pieces = 16;
        for k in 0..pieces {
            let a = 2.0 * PI * k as f64 / pieces as f64;
            let b = 2.0 * PI * (k + 1) as f64 / pieces as f64;
            total += recurse(&f, a, b, simpson(&f, a, b), 30);
        }
        total
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            /// Small perturbations of a circle stay valid and keep their
            /// winding/orientation structure.
            #[test]
            fn perturbed_circles_validate(eps1 in -0.2f64..0.2, eps2 in -0.15f64..0.15) {
                let coeffs = vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(eps1, 0.02),
                    Complex64::new(0.1, -0.1), // center
                    Complex64::new(1.0, 0.0),
                    Complex64::new(eps2, 0.01),
                ];
                let curve = ParamCurve::new(coeffs, Orientation::Ccw).unwrap();
                let (w, res) = winding_number(&curve, curve.center()).unwrap();
                prop_assert_eq!(w, 1);
                prop_assert!(res < 1e-6);
            }

            /// Grid weights always sum to the trapezoid arclength regardless
            /// of node count.
            #[test]
            fn weights_sum_to_length(npc in 8usize..64) {
                let npc = npc * 2; // keep it even
                let ann = Arc::new(make_preset_domain(Preset::Annulus, &[0.37]).unwrap());
                let grid = build_grid_unchecked(ann.clone(), npc).unwrap();
                for idx in 0..2 {
                    let s: f64 = grid.curve_range(idx).map(|k| grid.weights()[k]).sum();
                    let want = ann.curve(idx).length(4096);
                    prop_assert!((s - want).abs() < 1e-10 * want);
                }
            }
        }
    }
}
