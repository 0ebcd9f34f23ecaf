//! Ahlfors maps `f_w = S(·,w)/L(·,w)` and the two-map machinery built on
//! them: properness diagnostics, derivative evaluation, and the numerical
//! primitive-pair selection.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::bie::cauchy::{cauchy_value, cauchy_value_at_dist, BoundaryField};
use crate::bie::spectral::differentiate_closed;
use crate::error::{Error, Result};
use crate::szego::{build_basis, AhlforsBasis, SzegoEngine, SzegoSolution};
use crate::zeros::{count_zeros_from_trace, winding_of_loop, ZeroSearch};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A proper n-to-one holomorphic map of the domain onto the unit disc,
/// vanishing at its base point with positive derivative there.
pub struct AhlforsMap {
    sol: Arc<SzegoSolution>,
    trace: BoundaryField,
}

impl AhlforsMap {
    pub fn base(&self) -> Complex64 {
        self.sol.base()
    }

    pub fn solution(&self) -> &Arc<SzegoSolution> {
        &self.sol
    }

    /// Boundary values of `f_w` (unimodular on every curve).
    pub fn trace(&self) -> &BoundaryField {
        &self.trace
    }

    /// Map value at an interior point or grid node. Near the base the
    /// quotient is evaluated through the subtracted-pole form of `L`, which
    /// is regular there.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if let Some(k) = self.trace.grid().node_index(z) {
            return Ok(self.trace.value(k));
        }
        let w = self.base();
        let scale = self.trace.grid().domain().diameter();
        if (z - w).norm() < 0.05 * scale {
            // f = 2π(z-w) S(z,w) / (1 + 2π(z-w) R(z)), R the regular part.
            let s = self.sol.szego_at(z)?;
            let r = self.sol.garabedian_regular_at(z)?;
            let d = z - w;
            return Ok(TWO_PI * d * s / (1.0 + TWO_PI * d * r));
        }
        let s = self.sol.szego_at(z)?;
        let l = self.sol.garabedian_at(z)?;
        if l.norm() < 1e-12 * self.sol.szego_trace().max_norm() {
            return Err(Error::PoleOrGuard(
                z,
                "Garabedian kernel vanished away from its pole; solver failure".into(),
            ));
        }
        Ok(s / l)
    }

    /// `f_w'(z)` by a first-order Cauchy transform of the boundary trace.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        cauchy_value(&self.trace, z, 1)
    }

    /// `f_w'(w)`: must come out real and positive.
    pub fn derivative_at_base(&self) -> Result<Complex64> {
        self.derivative(self.base())
    }

    /// `f_w'` at the boundary nodes, via spectral differentiation of the
    /// trace: `f'(z(t)) = (d/dt f(z(t))) / z'(t)`.
    pub fn boundary_derivative(&self) -> BoundaryField {
        let grid = self.trace.grid().clone();
        let npc = grid.nodes_per_curve();
        let mut out = Vec::with_capacity(grid.total_nodes());
        for c in 0..grid.n_curves() {
            let d = differentiate_closed(self.trace.curve_values(c));
            for (k, dv) in d.into_iter().enumerate() {
                out.push(dv / grid.dparam()[c * npc + k]);
            }
        }
        BoundaryField::new(grid, out).expect("length preserved")
    }
}

/// Builds the Ahlfors map based at `w`.
pub fn ahlfors_map(engine: &SzegoEngine, w: Complex64) -> Result<AhlforsMap> {
    let sol = engine.solution(w)?;
    let trace = BoundaryField::new(
        engine.grid().clone(),
        (0..engine.grid().total_nodes())
            .map(|k| sol.szego_trace().value(k) / sol.garabedian_trace().value(k))
            .collect(),
    )?;
    Ok(AhlforsMap { sol, trace })
}

/// Argument-principle diagnostics of properness.
#[derive(Debug, Clone)]
pub struct PropernessReport {
    /// `max_k | |f(z_k)| - 1 |` over the boundary nodes.
    pub max_modulus_deviation: f64,
    /// Valence `(1/2πi)∮ f'/(f-c)` for a few interior disc values `c`;
    /// every entry must equal the connectivity.
    pub valences: Vec<(Complex64, i64)>,
    /// Winding of the image of each boundary curve around the origin;
    /// one-to-one boundary correspondence means every entry is 1.
    pub curve_windings: Vec<i64>,
}

impl PropernessReport {
    pub fn passes(&self, n: usize, modulus_tol: f64) -> bool {
        self.max_modulus_deviation <= modulus_tol
            && self.valences.iter().all(|&(_, v)| v == n as i64)
            && self.curve_windings.iter().all(|&w| w == 1)
    }
}

pub fn properness_report(map: &AhlforsMap) -> Result<PropernessReport> {
    let grid = map.trace().grid();
    let max_modulus_deviation = map
        .trace()
        .values()
        .iter()
        .map(|v| (v.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut valences = Vec::new();
    for c in [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.3, 0.2),
        Complex64::new(-0.4, 0.0),
    ] {
        let shifted = map.trace().map(|_, v| v - c);
        valences.push((c, count_zeros_from_trace(&shifted)?));
    }
    let mut curve_windings = Vec::new();
    let npc = grid.nodes_per_curve();
    let fine = map.trace().fine_values(4);
    for cidx in 0..grid.n_curves() {
        let w = winding_of_loop(&fine[cidx * 4 * npc..(cidx + 1) * 4 * npc])?;
        // Both orientations traverse the unit circle once; report the
        // winding with respect to the curve's own direction of travel.
        curve_windings.push(w.abs());
    }
    Ok(PropernessReport {
        max_modulus_deviation,
        valences,
        curve_windings,
    })
}

/// All `n` preimages of `target` under the map.
///
/// The fiber over 0 is known exactly — the base point together with the
/// zeros of `S(·,w)` — so fibers are tracked by Newton continuation along
/// the segment `s·target`, with the argument-principle count of the shifted
/// trace as the global verification. Rectangle subdivision remains as a
/// fallback when continuation degenerates (e.g. near a critical value).
pub fn fiber(engine: &SzegoEngine, map: &AhlforsMap, target: Complex64) -> Result<Vec<Complex64>> {
    let grid = engine.grid();
    let n = grid.domain().connectivity();
    let shifted = map.trace().map(|_, v| v - target);
    let counted = count_zeros_from_trace(&shifted)?;
    if counted != n as i64 {
        return Err(Error::WindingFailure(format!(
            "fiber count {counted} differs from the valence {n}"
        )));
    }
    match fiber_by_continuation(engine, map, target) {
        Ok(points) => Ok(points),
        Err(_) => fiber_by_subdivision(engine, map, target),
    }
}

fn fiber_by_continuation(
    engine: &SzegoEngine,
    map: &AhlforsMap,
    target: Complex64,
) -> Result<Vec<Complex64>> {
    let domain = engine.grid().domain();
    let scale = domain.diameter();
    let mut points: Vec<Complex64> = std::iter::once(map.base())
        .chain(engine.szego_zeros(map.base())?.into_iter())
        .collect();
    let steps = 12usize;
    for s in 1..=steps {
        let c = target * (s as f64 / steps as f64);
        for p in points.iter_mut() {
            let mut z = *p;
            let mut converged = false;
            for _ in 0..30 {
                if !domain.contains(z) {
                    return Err(Error::WindingFailure("tracker left the domain".into()));
                }
                let dist = domain.dist_to_boundary(z);
                let f = cauchy_value_at_dist(map.trace(), z, 0, dist) - c;
                let df = cauchy_value_at_dist(map.trace(), z, 1, dist);
                if df.norm() == 0.0 {
                    return Err(Error::WindingFailure("tracker hit a critical point".into()));
                }
                let step = f / df;
                z -= step;
                if step.norm() < 1e-12 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::WindingFailure("tracker did not converge".into()));
            }
            *p = z;
        }
    }
    // Trackers collapsing onto one preimage signal a lost sheet.
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i] - points[j]).norm() < 1e-7 * scale {
                return Err(Error::WindingFailure("fiber trackers collided".into()));
            }
        }
    }
    Ok(points)
}

fn fiber_by_subdivision(
    engine: &SzegoEngine,
    map: &AhlforsMap,
    target: Complex64,
) -> Result<Vec<Complex64>> {
    let grid = engine.grid();
    let n = grid.domain().connectivity();
    let scale = grid.domain().diameter();
    let search = ZeroSearch {
        domain: grid.domain(),
        boundary_margin: (0.75 * grid.max_spacing()).min(0.05 * scale),
        min_box: 1e-5 * scale,
        newton_step_tol: 1e-12,
    };
    let mut f = |z: Complex64, d: f64| Ok(cauchy_value_at_dist(map.trace(), z, 0, d) - target);
    let mut df = |z: Complex64, d: f64| Ok(cauchy_value_at_dist(map.trace(), z, 1, d));
    search.find(n, &mut f, &mut df)
}

/// Seeded interior sample points, kept away from the boundary.
pub fn interior_samples(
    engine: &SzegoEngine,
    count: usize,
    min_dist_frac: f64,
    seed: u64,
) -> Vec<Complex64> {
    let grid = engine.grid();
    let domain = grid.domain();
    let (lo, hi) = domain.bounding_box();
    let scale = domain.diameter();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = Complex64::new(
            rng.gen_range(lo.re..hi.re),
            rng.gen_range(lo.im..hi.im),
        );
        if domain.contains(z) && domain.dist_to_boundary(z) > min_dist_frac * scale {
            out.push(z);
        }
    }
    out
}

/// Fibers of `map_a` over the images of the sample points (computed once so
/// several candidate second maps can be screened against them).
pub fn sample_fibers(
    engine: &SzegoEngine,
    map_a: &AhlforsMap,
    samples: &[Complex64],
) -> Result<Vec<Vec<Complex64>>> {
    samples
        .iter()
        .map(|&z| {
            let target = map_a.eval(z)?;
            fiber(engine, map_a, target)
        })
        .collect()
}

/// Minimum pairwise `|f_b|`-separation over precomputed `f_a`-fibers.
/// Values above the acceptance threshold are numerical evidence that
/// `(f_a, f_b)` separates fibers (the primitive-pair proxy).
pub fn separation_margin_for(map_b: &AhlforsMap, fibers: &[Vec<Complex64>]) -> Result<f64> {
    let mut margin = f64::INFINITY;
    for points in fibers {
        let fb: Vec<Complex64> = points
            .iter()
            .map(|&p| map_b.eval(p))
            .collect::<Result<_>>()?;
        for i in 0..fb.len() {
            for j in (i + 1)..fb.len() {
                margin = margin.min((fb[i] - fb[j]).norm());
            }
        }
    }
    Ok(margin)
}

/// Convenience wrapper: fibers for `map_a` then the margin for `map_b`.
pub fn fiber_separation_margin(
    engine: &SzegoEngine,
    map_a: &AhlforsMap,
    map_b: &AhlforsMap,
    samples: &[Complex64],
) -> Result<f64> {
    let n = engine.grid().domain().connectivity();
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let fibers = sample_fibers(engine, map_a, samples)?;
    separation_margin_for(map_b, &fibers)
}

/// Separation threshold for accepting a candidate second base point.
pub const SEPARATION_THRESHOLD: f64 = 1e-3;

/// Deterministic scan for a second base point `b` whose map separates the
/// fibers of `f_a`.
pub fn select_primitive_pair(engine: &SzegoEngine, a: Complex64) -> Result<(Complex64, f64)> {
    let map_a = ahlfors_map(engine, a)?;
    let n = engine.grid().domain().connectivity();
    let fibers = if n == 1 {
        Vec::new()
    } else {
        let samples = interior_samples(engine, 10, 0.12, 0x1705);
        sample_fibers(engine, &map_a, &samples)?
    };
    let scale = engine.grid().domain().diameter();
    let domain = engine.grid().domain();
    let (lo, hi) = domain.bounding_box();
    let center = 0.5 * (lo + hi);
    let mut attempts = 0usize;
    for ring in 0..4 {
        let r = (0.12 + 0.11 * ring as f64) * scale;
        for k in 0..8 {
            let theta = TWO_PI * (k as f64 + 0.35 * ring as f64) / 8.0;
            let b = center + Complex64::from_polar(r, theta);
            if attempts >= 32 {
                break;
            }
            if !domain.contains(b)
                || domain.dist_to_boundary(b) < 0.08 * scale
                || (b - a).norm() < 0.05 * scale
            {
                continue;
            }
            attempts += 1;
            let map_b = ahlfors_map(engine, b)?;
            let margin = if n == 1 {
                f64::INFINITY
            } else {
                separation_margin_for(&map_b, &fibers)?
            };
            if margin > SEPARATION_THRESHOLD {
                return Ok((b, margin));
            }
        }
    }
    Err(Error::NoPrimitivePair { attempts })
}

/// Builds the full kernel basis at `(a, b)` and runs the fiber-separation
/// heuristic on `b`; rejects the pair when the margin is below threshold.
pub fn admissible_base(
    engine: &SzegoEngine,
    a: Complex64,
    b: Complex64,
) -> Result<Arc<AhlforsBasis>> {
    let mut basis = build_basis(engine, a, b)?;
    let map_a = ahlfors_map(engine, a)?;
    let map_b = ahlfors_map(engine, b)?;
    let n = engine.grid().domain().connectivity();
    let samples = if n == 1 {
        Vec::new()
    } else {
        interior_samples(engine, 10, 0.12, 0x1705)
    };
    let margin = fiber_separation_margin(engine, &map_a, &map_b, &samples)?;
    if margin <= SEPARATION_THRESHOLD {
        return Err(Error::InadmissibleBase(format!(
            "fiber separation margin {margin:.3e} too small; choose different b"
        )));
    }
    basis.set_separation_margin(margin);
    Ok(Arc::new(basis))
}

/// Deterministic spiral retry around a starting base point until the zeros of
/// `S(·,a)` are distinct and simple (at most 8 attempts).
pub fn find_admissible_a(engine: &SzegoEngine, a0: Complex64) -> Result<Complex64> {
    let scale = engine.grid().domain().diameter();
    let golden = 2.399_963_229_728_653;
    for k in 0..8 {
        let a = if k == 0 {
            a0
        } else {
            a0 + Complex64::from_polar(0.02 * scale * k as f64, golden * k as f64)
        };
        if !engine.grid().domain().contains(a) {
            continue;
        }
        if engine.szego_zeros(a).is_ok() {
            return Ok(a);
        }
    }
    Err(Error::InadmissibleBase(
        "no admissible base point found along the spiral".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_grid, make_preset_domain, Preset};
    use crate::oracles::disc;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn engine(preset: Preset, params: &[f64], npc: usize) -> Arc<SzegoEngine> {
        let dom = Arc::new(make_preset_domain(preset, params).unwrap());
        SzegoEngine::new(Arc::new(boundary_grid(dom, npc).unwrap())).unwrap()
    }

    #[test]
    fn disc_map_is_the_mobius_map() {
        let eng = engine(Preset::Disc, &[1.0], 128);
        let map = ahlfors_map(&eng, c(0.5, 0.0)).unwrap();
        assert_relative_eq!(map.eval(c(0.0, 0.0)).unwrap().re, -0.5, max_relative = 1e-11);
        let map2 = ahlfors_map(&eng, c(0.2, 0.0)).unwrap();
        assert_relative_eq!(
            map2.eval(c(0.5, 0.0)).unwrap().re,
            1.0 / 3.0,
            max_relative = 1e-11
        );
        // Base-point behavior: f_w(w) = 0, f_w'(w) = 1/(1-|w|²) > 0.
        assert!(map.eval(c(0.5, 0.0)).unwrap().norm() < 1e-12);
        let d = map.derivative_at_base().unwrap();
        assert_relative_eq!(d.re, 1.0 / 0.75, max_relative = 1e-10);
        assert!(d.im.abs() < 1e-10 * d.re);
        // Interior derivative matches the closed form elsewhere too.
        let dd = map2.derivative(c(0.3, 0.1)).unwrap();
        assert!((dd - disc::ahlfors_deriv(c(0.3, 0.1), c(0.2, 0.0))).norm() < 1e-10);
    }

    #[test]
    fn base_point_invariants_on_the_annulus() {
        let eng = engine(Preset::Annulus, &[0.5], 128);
        let w = c(0.7, 0.0);
        let map = ahlfors_map(&eng, w).unwrap();
        assert!(map.eval(w).unwrap().norm() < 1e-10);
        let d = map.derivative_at_base().unwrap();
        assert!(d.re > 0.0, "f'(w) = {d}");
        assert!(d.im.abs() < 1e-10 * d.re);
        // f_w'(w) = 2π S(w,w).
        let s_ww = eng.szego_kernel(w, w).unwrap();
        assert_relative_eq!(d.re, TWO_PI * s_ww.re, max_relative = 1e-9);
        // Boundary modulus 1.
        for v in map.trace().values() {
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn valence_equals_connectivity() {
        let eng = engine(Preset::Annulus, &[0.5], 128);
        let map = ahlfors_map(&eng, c(0.7, 0.0)).unwrap();
        let rep = properness_report(&map).unwrap();
        assert!(rep.passes(2, 1e-9), "{rep:?}");

        let eng = engine(Preset::Blob3, &[], 192);
        let map = ahlfors_map(&eng, c(0.05, -0.25)).unwrap();
        let rep = properness_report(&map).unwrap();
        assert!(rep.passes(3, 1e-8), "{rep:?}");
    }

    #[test]
    fn boundary_derivative_matches_the_disc_closed_form() {
        let eng = engine(Preset::Disc, &[1.0], 128);
        let w = c(0.3, 0.2);
        let map = ahlfors_map(&eng, w).unwrap();
        let fp = map.boundary_derivative();
        let grid = eng.grid();
        for k in (0..grid.total_nodes()).step_by(13) {
            let want = disc::ahlfors_deriv(grid.nodes()[k], w);
            assert!(
                (fp.value(k) - want).norm() < 1e-10 * want.norm(),
                "node {k}: {} vs {}",
                fp.value(k),
                want
            );
        }
    }

    #[test]
    fn primitive_pair_selection_on_presets() {
        let eng = engine(Preset::Disc, &[1.0], 64);
        let (b, margin) = select_primitive_pair(&eng, c(0.0, 0.0)).unwrap();
        assert!(margin.is_infinite());
        assert!(eng.grid().domain().contains(b));

        let eng = engine(Preset::Annulus, &[0.5], 128);
        let (b, margin) = select_primitive_pair(&eng, c(0.7, 0.0)).unwrap();
        assert!(margin > SEPARATION_THRESHOLD, "margin {margin:.3e}");
        assert!(eng.grid().domain().contains(b));
    }

    #[test]
    fn admissible_base_records_the_margin() {
        let eng = engine(Preset::Annulus, &[0.5], 128);
        let basis = admissible_base(&eng, c(0.7, 0.0), c(0.0, 0.6)).unwrap();
        assert_eq!(basis.n(), 2);
        assert!(basis.separation_margin() > SEPARATION_THRESHOLD);
    }

    #[test]
    fn one_sided_extremality_among_competing_maps() {
        // |f_v'(w)| <= f_w'(w) for competitor bases v: the Ahlfors map
        // maximizes the derivative at its own base.
        let eng = engine(Preset::Annulus, &[0.5], 128);
        let w = c(0.7, 0.0);
        let fw = ahlfors_map(&eng, w).unwrap();
        let bound = fw.derivative_at_base().unwrap().re + 1e-8;
        for v in [c(0.6, 0.1), c(-0.7, 0.0), c(0.0, -0.65), w] {
            let fv = ahlfors_map(&eng, v).unwrap();
            let dv = fv.derivative(w).unwrap().norm();
            assert!(dv <= bound, "competitor at {v}: {dv} > {bound}");
        }
    }
}
