//! Argument-principle zero location for functions known only through
//! quadrature.
//!
//! The count comes from winding numbers of sampled values (boundary traces
//! for the global count, rectangle edges during localization), rectangles are
//! subdivided recursively until each holds one zero inside a small box, and
//! Newton iteration polishes the result.

use num_complex::Complex64;

use crate::bie::cauchy::BoundaryField;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;

/// Evaluation callback: the second argument is a known lower bound on the
/// distance from the point to the boundary (so implementations can pick
/// their quadrature refinement without re-running point location).
pub type EvalFn<'a> = dyn FnMut(Complex64, f64) -> Result<Complex64> + 'a;

/// Winding number of a closed loop of samples around 0. Fails when the
/// samples are too sparse (argument steps of π/2 or more) or pass through 0.
pub fn winding_of_loop(vals: &[Complex64]) -> Result<i64> {
    let max_norm = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Err(Error::WindingFailure("all samples vanish".into()));
    }
    let mut total = 0.0f64;
    let mut prev = vals[0];
    for v in vals.iter().skip(1).chain(std::iter::once(&vals[0])) {
        if v.norm() < 1e-14 * max_norm {
            return Err(Error::WindingFailure("sample passes through zero".into()));
        }
        let step = (v / prev).arg();
        if step.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::WindingFailure(
                "argument step too large; samples too sparse".into(),
            ));
        }
        total += step;
        prev = *v;
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

/// Total zero count of a holomorphic function from its boundary trace:
/// the sum over boundary curves of the winding of the trace around 0.
/// The trace is upsampled until two consecutive refinements agree.
pub fn count_zeros_from_trace(trace: &BoundaryField) -> Result<i64> {
    let grid = trace.grid();
    let mut prev: Option<i64> = None;
    for factor in [1usize, 2, 4, 8] {
        let fine = trace.fine_values(factor);
        let npc = grid.nodes_per_curve() * factor;
        let mut total = 0i64;
        let mut ok = true;
        for c in 0..grid.n_curves() {
            match winding_of_loop(&fine[c * npc..(c + 1) * npc]) {
                Ok(w) => total += w,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            if prev == Some(total) {
                return Ok(total);
            }
            prev = Some(total);
        } else {
            prev = None;
        }
    }
    prev.ok_or_else(|| {
        Error::WindingFailure("boundary-trace winding did not stabilize under refinement".into())
    })
}

pub struct ZeroSearch<'a> {
    pub domain: &'a DomainSpec,
    /// Minimum distance of any counting contour from the boundary.
    pub boundary_margin: f64,
    /// Countable boxes are subdivided down to this size before Newton starts.
    pub min_box: f64,
    /// Newton stops when the step is below this.
    pub newton_step_tol: f64,
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    lo: Complex64,
    hi: Complex64,
}

impl Rect {
    fn size(&self) -> f64 {
        (self.hi.re - self.lo.re).max(self.hi.im - self.lo.im)
    }

    fn center(&self) -> Complex64 {
        0.5 * (self.lo + self.hi)
    }

    /// Distance from the closed rectangle to a point.
    fn dist_to(&self, p: Complex64) -> f64 {
        let dx = (self.lo.re - p.re).max(0.0).max(p.re - self.hi.re);
        let dy = (self.lo.im - p.im).max(0.0).max(p.im - self.hi.im);
        (dx * dx + dy * dy).sqrt()
    }

    fn edge_samples(&self, per_edge: usize) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(4 * per_edge);
        let (lo, hi) = (self.lo, self.hi);
        for k in 0..per_edge {
            let s = k as f64 / per_edge as f64;
            pts.push(Complex64::new(lo.re + s * (hi.re - lo.re), lo.im));
        }
        for k in 0..per_edge {
            let s = k as f64 / per_edge as f64;
            pts.push(Complex64::new(hi.re, lo.im + s * (hi.im - lo.im)));
        }
        for k in 0..per_edge {
            let s = k as f64 / per_edge as f64;
            pts.push(Complex64::new(hi.re - s * (hi.re - lo.re), hi.im));
        }
        for k in 0..per_edge {
            let s = k as f64 / per_edge as f64;
            pts.push(Complex64::new(lo.re, hi.im - s * (hi.im - lo.im)));
        }
        pts
    }

    /// Rescaled copy about the center; used to dodge zeros sitting on the
    /// counting contour.
    fn scaled(&self, s: f64) -> Rect {
        let c = self.center();
        Rect {
            lo: c + (self.lo - c) * s,
            hi: c + (self.hi - c) * s,
        }
    }

    /// Split into four children; `jitter` shifts the split point to dodge
    /// zeros sitting on the cut lines.
    fn split(&self, jitter: f64) -> [Rect; 4] {
        let c = self.center()
            + jitter * Complex64::new(self.hi.re - self.lo.re, self.hi.im - self.lo.im);
        [
            Rect { lo: self.lo, hi: c },
            Rect {
                lo: Complex64::new(c.re, self.lo.im),
                hi: Complex64::new(self.hi.re, c.im),
            },
            Rect {
                lo: Complex64::new(self.lo.re, c.im),
                hi: Complex64::new(c.re, self.hi.im),
            },
            Rect { lo: c, hi: self.hi },
        ]
    }
}

enum RectClass {
    Outside,
    /// Entirely interior, with the given boundary clearance.
    Inside(f64),
    Mixed,
}

impl ZeroSearch<'_> {
    /// Classifies a rectangle against the precomputed boundary polylines.
    fn classify(&self, rect: &Rect) -> RectClass {
        let m = self.boundary_margin;
        let mut clearance = f64::MAX;
        for pts in self.domain.dense_polylines() {
            for &p in pts {
                let d = rect.dist_to(p);
                if d < m {
                    return RectClass::Mixed;
                }
                clearance = clearance.min(d);
            }
        }
        if self.domain.contains(rect.center()) {
            RectClass::Inside(clearance)
        } else {
            RectClass::Outside
        }
    }

    fn count_in_rect(
        &self,
        rect: &Rect,
        clearance: f64,
        f: &mut EvalFn,
    ) -> Result<i64> {
        let mut per_edge = 8usize;
        let mut prev: Option<i64> = None;
        while per_edge <= 512 {
            let vals: Result<Vec<Complex64>> = rect
                .edge_samples(per_edge)
                .into_iter()
                .map(|z| f(z, clearance))
                .collect();
            match vals.and_then(|v| winding_of_loop(&v)) {
                Ok(w) => {
                    if prev == Some(w) {
                        return Ok(w);
                    }
                    prev = Some(w);
                }
                Err(_) => prev = None,
            }
            per_edge *= 2;
        }
        Err(Error::WindingFailure(format!(
            "rectangle count did not stabilize near {}",
            rect.center()
        )))
    }

    /// Locates all `expected` zeros of `f` in the domain. `f` and `df` are
    /// typically Cauchy-transform evaluations of a boundary trace.
    pub fn find(
        &self,
        expected: usize,
        f: &mut EvalFn,
        df: &mut EvalFn,
    ) -> Result<Vec<Complex64>> {
        if expected == 0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = self.domain.bounding_box();
        let pad = 0.01 * self.domain.diameter();
        let root = Rect {
            lo: lo - Complex64::new(pad, pad),
            hi: hi + Complex64::new(pad, pad),
        };
        let mut queue = vec![root];
        let mut zeros: Vec<Complex64> = Vec::new();
        let mut guard = 0usize;
        while let Some(rect) = queue.pop() {
            guard += 1;
            if guard > 40_000 {
                return Err(Error::WindingFailure(
                    "zero search exceeded its subdivision budget".into(),
                ));
            }
            match self.classify(&rect) {
                RectClass::Outside => continue,
                RectClass::Mixed => {
                    if rect.size() > 0.5 * self.boundary_margin {
                        queue.extend(rect.split(0.0));
                    }
                    // Small mixed rectangles are dropped: counting contours
                    // must stay clear of the boundary. A zero hiding there
                    // surfaces as a count mismatch below.
                    continue;
                }
                RectClass::Inside(clearance) => {
                    // Retry on slightly rescaled contours when samples land
                    // too near a zero; overlaps are harmless because the
                    // polished zeros are deduplicated at the end.
                    let mut count = None;
                    for scale in [1.0, 1.05, 0.95, 1.11, 0.89, 1.17] {
                        let r = rect.scaled(scale);
                        let cl = if scale <= 1.0 {
                            clearance
                        } else {
                            match self.classify(&r) {
                                RectClass::Inside(c) => c,
                                _ => continue,
                            }
                        };
                        if let Ok(w) = self.count_in_rect(&r, cl, f) {
                            count = Some((r, w));
                            break;
                        }
                    }
                    let Some((rect, w)) = count else {
                        return Err(Error::WindingFailure(format!(
                            "could not count zeros near {}",
                            rect.center()
                        )));
                    };
                    if w == 0 {
                        continue;
                    }
                    if w < 0 {
                        return Err(Error::WindingFailure(
                            "negative winding inside the domain (pole?)".into(),
                        ));
                    }
                    if rect.size() > self.min_box {
                        queue.extend(rect.split(0.003));
                        continue;
                    }
                    if w > 1 {
                        return Err(Error::InadmissibleBase(format!(
                            "zeros cluster within {:.3e} near {}",
                            rect.size(),
                            rect.center()
                        )));
                    }
                    let z = self.newton(rect.center(), f, df)?;
                    zeros.push(z);
                }
            }
        }
        // Deduplicate: rescaled contours may have captured a zero twice.
        let dedupe_radius = 1e-6 * self.domain.diameter();
        let mut unique: Vec<Complex64> = Vec::new();
        for z in zeros {
            if unique.iter().all(|u| (u - z).norm() > dedupe_radius) {
                unique.push(z);
            }
        }
        if unique.len() != expected {
            return Err(Error::InadmissibleBase(format!(
                "argument principle found {} zeros, expected {expected}",
                unique.len()
            )));
        }
        Ok(unique)
    }

    fn newton(&self, start: Complex64, f: &mut EvalFn, df: &mut EvalFn) -> Result<Complex64> {
        let mut z = start;
        for _ in 0..40 {
            let dist = self.domain.dist_to_boundary(z);
            let fz = f(z, dist)?;
            let dfz = df(z, dist)?;
            if dfz.norm() == 0.0 {
                return Err(Error::WindingFailure("newton hit a critical point".into()));
            }
            let step = fz / dfz;
            z -= step;
            if step.norm() < self.newton_step_tol {
                return Ok(z);
            }
        }
        Err(Error::WindingFailure(format!(
            "newton did not converge from {start}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_preset_domain, Preset};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polynomial_zeros_in_an_annulus() {
        let dom = make_preset_domain(Preset::Annulus, &[0.5]).unwrap();
        // (z - 0.7)(z + 0.6i - 0.1): zeros at 0.7 and 0.1 - 0.6i, both inside.
        let p = |z: Complex64| (z - c(0.7, 0.0)) * (z - c(0.1, -0.6));
        let dp = |z: Complex64| (z - c(0.7, 0.0)) + (z - c(0.1, -0.6));
        let search = ZeroSearch {
            domain: &dom,
            boundary_margin: 0.02,
            min_box: 1e-3,
            newton_step_tol: 1e-13,
        };
        let mut f = |z, _d: f64| Ok(p(z));
        let mut df = |z, _d: f64| Ok(dp(z));
        let mut zeros = search.find(2, &mut f, &mut df).unwrap();
        zeros.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((zeros[0] - c(0.1, -0.6)).norm() < 1e-12);
        assert!((zeros[1] - c(0.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zeros_in_holes_are_not_counted() {
        let dom = make_preset_domain(Preset::Annulus, &[0.5]).unwrap();
        // Zero at the origin sits in the hole; only z = -0.75 is in the domain.
        let p = |z: Complex64| z * (z + c(0.75, 0.0));
        let dp = |z: Complex64| 2.0 * z + c(0.75, 0.0);
        let search = ZeroSearch {
            domain: &dom,
            boundary_margin: 0.02,
            min_box: 1e-3,
            newton_step_tol: 1e-13,
        };
        let mut f = |z, _d: f64| Ok(p(z));
        let mut df = |z, _d: f64| Ok(dp(z));
        let zeros = search.find(1, &mut f, &mut df).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0] + c(0.75, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn count_mismatch_is_reported() {
        let dom = make_preset_domain(Preset::Disc, &[1.0]).unwrap();
        let search = ZeroSearch {
            domain: &dom,
            boundary_margin: 0.02,
            min_box: 1e-3,
            newton_step_tol: 1e-13,
        };
        let mut f = |z: Complex64, _d: f64| Ok(z - c(0.2, 0.0));
        let mut df = |_z, _d: f64| Ok(c(1.0, 0.0));
        let err = search.find(2, &mut f, &mut df).unwrap_err();
        assert!(err.to_string().contains("expected 2"));
    }

    #[test]
    fn loop_winding_detects_sparse_sampling() {
        // 4 samples of z^3 on the circle step by 3π/2 in argument: rejected.
        let vals: Vec<Complex64> = (0..4)
            .map(|k| Complex64::from_polar(1.0, 3.0 * 2.0 * std::f64::consts::PI * k as f64 / 4.0))
            .collect();
        assert!(winding_of_loop(&vals).is_err());
        let vals: Vec<Complex64> = (0..64)
            .map(|k| Complex64::from_polar(1.0, 3.0 * 2.0 * std::f64::consts::PI * k as f64 / 64.0))
            .collect();
        assert_eq!(winding_of_loop(&vals).unwrap(), 3);
    }
}
