//! Independent reference values for the disc and the concentric annulus.
//!
//! Everything here is computed from closed forms or classical separable
//! series, never through the boundary-integral machinery, so these values can
//! serve as ground truth for it.

use num_complex::Complex64;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Unit-disc closed forms.
pub mod disc {
    use super::*;

    /// `S(z,w) = 1/(2π(1 - z conj(w)))`.
    pub fn szego(z: Complex64, w: Complex64) -> Complex64 {
        1.0 / (TWO_PI * (1.0 - z * w.conj()))
    }

    /// `L(z,w) = 1/(2π(z - w))`.
    pub fn garabedian(z: Complex64, w: Complex64) -> Complex64 {
        1.0 / (TWO_PI * (z - w))
    }

    /// Ahlfors (= Riemann) map `f_w(z) = (z-w)/(1 - conj(w) z)`.
    pub fn ahlfors(z: Complex64, w: Complex64) -> Complex64 {
        (z - w) / (1.0 - w.conj() * z)
    }

    /// `f_w'(z) = (1-|w|²)/(1 - conj(w) z)²`.
    pub fn ahlfors_deriv(z: Complex64, w: Complex64) -> Complex64 {
        (1.0 - w.norm_sqr()) / (1.0 - w.conj() * z).powi(2)
    }

    /// Carathéodory density `ρ(z) = 1/(1-|z|²)`.
    pub fn caratheodory(z: Complex64) -> f64 {
        1.0 / (1.0 - z.norm_sqr())
    }

    /// `G(z,w) = ln|(z-w)/(1 - z conj(w))| < 0`.
    pub fn green(z: Complex64, w: Complex64) -> f64 {
        ((z - w) / (1.0 - z * w.conj())).norm().ln()
    }

    /// `∂G/∂w = (1-|z|²) / (2 (w-z)(1 - conj(z) w))`.
    pub fn green_w(z: Complex64, w: Complex64) -> Complex64 {
        (1.0 - z.norm_sqr()) / (2.0 * (w - z) * (1.0 - z.conj() * w))
    }

    /// Poisson kernel `p(z,w) = (1-|z|²)/(2π |w-z|²)`, `|w| = 1`.
    pub fn poisson(z: Complex64, w: Complex64) -> f64 {
        (1.0 - z.norm_sqr()) / (TWO_PI * (w - z).norm_sqr())
    }

    /// Bergman kernel `K(z,w) = 1/(π (1 - z conj(w))²)`.
    pub fn bergman(z: Complex64, w: Complex64) -> Complex64 {
        1.0 / (PI * (1.0 - z * w.conj()).powi(2))
    }
}

/// Series oracles for the annulus `rho < |z| < 1`.
#[derive(Debug, Clone, Copy)]
pub struct AnnulusOracle {
    pub rho: f64,
    /// Series truncation order.
    terms: usize,
}

impl AnnulusOracle {
    pub fn new(rho: f64) -> Self {
        assert!(rho > 0.0 && rho < 1.0);
        Self { rho, terms: 420 }
    }

    /// Szegő kernel from the orthonormal Hardy-space basis `z^n`:
    /// `S(z,w) = Σ_{n∈ℤ} (z conj(w))^n / (2π (1 + rho^{2n+1}))`.
    pub fn szego(&self, z: Complex64, w: Complex64) -> Complex64 {
        let x = z * w.conj();
        let mut acc = Complex64::new(1.0 / (TWO_PI * (1.0 + self.rho)), 0.0);
        let mut pow_pos = Complex64::new(1.0, 0.0);
        let mut pow_neg = Complex64::new(1.0, 0.0);
        for n in 1..=self.terms as i32 {
            pow_pos *= x;
            pow_neg /= x;
            acc += pow_pos / (TWO_PI * (1.0 + self.rho.powi(2 * n + 1)));
            acc += pow_neg / (TWO_PI * (1.0 + self.rho.powi(-2 * n + 1)));
        }
        acc
    }

    /// Bergman kernel from the orthonormal `A²` basis:
    /// `K(z,w) = Σ_{n≠-1} (n+1)(z conj(w))^n / (π(1-rho^{2n+2}))
    ///           + (z conj(w))^{-1} / (2π ln(1/rho))`.
    pub fn bergman(&self, z: Complex64, w: Complex64) -> Complex64 {
        let x = z * w.conj();
        let mut acc = x.powi(-1) / (TWO_PI * (1.0 / self.rho).ln());
        for n in -(self.terms as i32)..=self.terms as i32 {
            if n == -1 {
                continue;
            }
            let denom = PI * (1.0 - self.rho.powi(2 * n + 2));
            acc += (n + 1) as f64 * x.powi(n) / denom;
        }
        acc
    }

    /// Harmonic measure of the inner circle: `ω₁(z) = ln|z| / ln(rho)`.
    pub fn omega1(&self, z: Complex64) -> f64 {
        z.norm().ln() / self.rho.ln()
    }

    /// Normalized basis element `u₁(z) = i/(2π z)` (unit period around the
    /// clockwise inner circle).
    pub fn u1(&self, z: Complex64) -> Complex64 {
        Complex64::new(0.0, 1.0) / (TWO_PI * z)
    }

    /// Green's function by separation of variables. The conditionally
    /// convergent part of the mode series is summed in closed form
    /// (`Σ x^m cos(mθ)/m = -ln|1-x e^{iθ}|`), leaving geometrically decaying
    /// corrections.
    pub fn green(&self, z: Complex64, w: Complex64) -> f64 {
        let (r, th) = (z.norm(), z.arg());
        let (s, ph) = (w.norm(), w.arg());
        let (r_lo, r_hi) = if r <= s { (r, s) } else { (s, r) };
        let dth = th - ph;
        let rho = self.rho;
        let x = r_lo / r_hi;
        let a = r_lo * r_hi;
        let b = rho * rho / a;
        let y = rho * rho / x;

        // m = 0 mode.
        let mut g = (r_lo / rho).ln() * r_hi.ln() / (1.0 / rho).ln();
        // Slow part in closed form.
        g += (1.0 - x * Complex64::new(0.0, dth).exp()).norm().ln();
        // Geometric corrections.
        let mut am = 1.0;
        let mut xm = 1.0;
        let mut bm = 1.0;
        let mut ym = 1.0;
        let mut r2m = 1.0;
        let rho2 = rho * rho;
        for m in 1..=self.terms {
            am *= a;
            xm *= x;
            bm *= b;
            ym *= y;
            r2m *= rho2;
            let d = am - xm - ym + bm;
            let term = (dth * m as f64).cos() / m as f64 * (am - ym + bm + d * r2m / (1.0 - r2m));
            g += term;
            if term.abs() < 1e-17 && m > 24 {
                break;
            }
        }
        g
    }

    /// The unique zero of `S(·,a)` for real `a ∈ (rho,1)`, located on the
    /// negative real axis by bisection on the basis series.
    pub fn szego_zero(&self, a: f64) -> f64 {
        let f = |x: f64| self.szego(Complex64::new(x, 0.0), Complex64::new(a, 0.0)).re;
        let mut lo = -1.0 + 1e-6;
        let mut hi = -self.rho - 1e-6;
        let (flo, fhi) = (f(lo), f(hi));
        assert!(
            flo * fhi < 0.0,
            "no sign change on the negative real axis: f({lo})={flo}, f({hi})={fhi}"
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
