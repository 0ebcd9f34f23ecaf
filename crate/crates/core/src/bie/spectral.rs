//! FFT utilities on per-curve periodic data: trigonometric upsampling,
//! spectral differentiation, and the discrete boundary values of the Cauchy
//! transform (Plemelj projection).

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::geometry::BoundaryGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(data: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let fft = if inverse {
            p.borrow_mut().plan_fft_inverse(data.len())
        } else {
            p.borrow_mut().plan_fft_forward(data.len())
        };
        fft.process(data);
    });
}

/// Trigonometric interpolation of one closed-curve sample set onto a grid
/// `factor ×` as fine. Input length must be even.
pub fn upsample_closed(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    if factor <= 1 {
        return values.to_vec();
    }
    let m = n * factor;
    let mut spec = values.to_vec();
    fft_in_place(&mut spec, false);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    padded[..half].copy_from_slice(&spec[..half]);
    for k in (half + 1)..n {
        padded[m - n + k] = spec[k];
    }
    // Split the Nyquist bin symmetrically.
    padded[half] = 0.5 * spec[half];
    padded[m - half] = 0.5 * spec[half];
    fft_in_place(&mut padded, true);
    let scale = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= scale);
    padded
}

/// Spectral derivative d/dt of one closed-curve sample set.
pub fn differentiate_closed(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut spec = values.to_vec();
    fft_in_place(&mut spec, false);
    let half = n / 2;
    for (k, v) in spec.iter_mut().enumerate() {
        let freq = if k < half {
            k as f64
        } else if k == half {
            0.0 // drop the Nyquist mode
        } else {
            k as f64 - n as f64
        };
        *v *= Complex64::new(0.0, freq);
    }
    fft_in_place(&mut spec, true);
    let scale = 1.0 / n as f64;
    spec.iter_mut().for_each(|v| *v *= scale);
    spec
}

/// Multiplies Fourier mode `m` by `sign(m)` (0 at m = 0 and at Nyquist).
pub fn sign_filter_closed(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut spec = values.to_vec();
    fft_in_place(&mut spec, false);
    let half = n / 2;
    for (k, v) in spec.iter_mut().enumerate() {
        let s = if k == 0 || k == half {
            0.0
        } else if k < half {
            1.0
        } else {
            -1.0
        };
        *v *= s;
    }
    fft_in_place(&mut spec, true);
    let scale = 1.0 / n as f64;
    spec.iter_mut().for_each(|v| *v *= scale);
    spec
}

/// Dense matrix of the discrete boundary Cauchy projection `C`: for a smooth
/// function `g` on the nodes, `(C g)_j` approximates the interior boundary
/// value of the Cauchy transform of `g` at node `j` (Plemelj: `g/2 + PV`).
/// Traces of functions holomorphic in the domain are fixed points of `C` up
/// to quadrature error.
///
/// Same-curve blocks split the kernel into `cot((t-s)/2)/2` — whose principal
/// value is applied exactly on trigonometric polynomials via the sign
/// filter — plus a smooth remainder handled by the plain trapezoid rule.
pub fn cauchy_projection_matrix(grid: &BoundaryGrid) -> DMatrix<Complex64> {
    let n = grid.total_nodes();
    let npc = grid.nodes_per_curve();
    let h = 2.0 * PI / npc as f64;
    let nodes = grid.nodes();
    let dparam = grid.dparam();
    let t = grid.t_values();
    let ci = grid.curve_index();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);

    let mut c = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        c[(j, j)] += Complex64::new(0.5, 0.0);
        for k in 0..n {
            if ci[j] != ci[k] {
                // Smooth cross-curve Cauchy kernel, dw = z'(t_k) h.
                c[(j, k)] += dparam[k] * h / ((nodes[k] - nodes[j]) * two_pi_i);
            } else if k != j {
                let cot = 0.5 / ((t[k] - t[j]) * 0.5).tan();
                let smooth = dparam[k] / (nodes[k] - nodes[j]) - cot;
                c[(j, k)] += smooth * h / two_pi_i;
            } else {
                // Diagonal limit of z'(t)/(z(t)-z(s)) - cot((t-s)/2)/2.
                let curve = grid.domain().curve(ci[j]);
                let smooth = curve.deriv2(t[j]) / (2.0 * curve.deriv(t[j]));
                c[(j, j)] += smooth * h / two_pi_i;
            }
        }
    }

    // Per-curve principal value of the cot part: 0.5 × sign filter.
    let mut unit = vec![Complex64::new(0.0, 0.0); npc];
    for curve in 0..grid.n_curves() {
        let base = curve * npc;
        for col in 0..npc {
            unit.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            unit[col] = Complex64::new(1.0, 0.0);
            let filtered = sign_filter_closed(&unit);
            for row in 0..npc {
                c[(base + row, base + col)] += 0.5 * filtered[row];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_grid, make_preset_domain, Preset};
    use std::sync::Arc;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn upsampling_reproduces_band_limited_data() {
        let n = 32;
        let f = |t: f64| c64((3.0 * t).cos() + 0.2, (5.0 * t).sin() - 1.0);
        let vals: Vec<Complex64> = (0..n)
            .map(|k| f(2.0 * PI * k as f64 / n as f64))
            .collect();
        let fine = upsample_closed(&vals, 4);
        for (k, v) in fine.iter().enumerate() {
            let t = 2.0 * PI * k as f64 / (4 * n) as f64;
            assert!((v - f(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_derivative_matches_closed_form() {
        let n = 64;
        let f = |t: f64| c64((4.0 * t).sin(), (2.0 * t).cos());
        let df = |t: f64| c64(4.0 * (4.0 * t).cos(), -2.0 * (2.0 * t).sin());
        let vals: Vec<Complex64> = (0..n)
            .map(|k| f(2.0 * PI * k as f64 / n as f64))
            .collect();
        let d = differentiate_closed(&vals);
        for (k, v) in d.iter().enumerate() {
            let t = 2.0 * PI * k as f64 / n as f64;
            assert!((v - df(t)).norm() < 1e-11);
        }
    }

    #[test]
    fn cauchy_projection_fixes_holomorphic_traces_on_the_disc() {
        let disc = Arc::new(make_preset_domain(Preset::Disc, &[1.0]).unwrap());
        let grid = boundary_grid(disc, 64).unwrap();
        let c = cauchy_projection_matrix(&grid);
        // Trace of z^m is fixed for m >= 0 and annihilated for m < 0.
        for m in [-5i32, -1, 0, 1, 7] {
            let g = nalgebra::DVector::from_iterator(
                grid.total_nodes(),
                grid.nodes().iter().map(|z| z.powi(m)),
            );
            let want = if m >= 0 { g.clone() } else { g.clone() * c64(0.0, 0.0) };
            let got = &c * &g;
            let err = (got - want).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "mode {m}: defect {err:.3e}");
        }
    }

    #[test]
    fn cauchy_projection_on_the_annulus_keeps_laurent_tails() {
        let ann = Arc::new(make_preset_domain(Preset::Annulus, &[0.5]).unwrap());
        let grid = boundary_grid(ann, 128).unwrap();
        let c = cauchy_projection_matrix(&grid);
        // 1/z is holomorphic in the annulus: fixed point.
        let g = nalgebra::DVector::from_iterator(
            grid.total_nodes(),
            grid.nodes().iter().map(|z| 1.0 / z),
        );
        let err = (&c * &g - &g).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "1/z defect {err:.3e}");
        // conj(z) is not a trace of any holomorphic function: large defect.
        let g = nalgebra::DVector::from_iterator(
            grid.total_nodes(),
            grid.nodes().iter().map(|z| z.conj()),
        );
        let err = (&c * &g - &g).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err > 1e-2, "conj(z) should not be fixed, defect {err:.3e}");
    }
}
