use mckernels::bie::cauchy::cauchy_value;
use mckernels::geometry::{boundary_grid, make_preset_domain, Preset};
use mckernels::szego::SzegoEngine;
use num_complex::Complex64;
use std::sync::Arc;

fn main() {
    let dom = Arc::new(make_preset_domain(Preset::Blob3, &[]).unwrap());
    let grid = Arc::new(boundary_grid(dom.clone(), 192).unwrap());
    let eng = SzegoEngine::new(grid.clone()).unwrap();
    let a = Complex64::new(0.05, -0.25);
    let sol = eng.solution(a).unwrap();
    println!("max spacing {:.4}", grid.max_spacing());
    // Coarse scan of |S| over the domain
    let (lo, hi) = dom.bounding_box();
    let mut best: Vec<(f64, Complex64)> = vec![];
    let nmesh = 160;
    for i in 0..nmesh {
        for j in 0..nmesh {
            let z = Complex64::new(
                lo.re + (hi.re - lo.re) * i as f64 / (nmesh - 1) as f64,
                lo.im + (hi.im - lo.im) * j as f64 / (nmesh - 1) as f64,
            );
            if !dom.contains(z) || dom.dist_to_boundary(z) < 0.01 {
                continue;
            }
            let v = cauchy_value(sol.szego_trace(), z, 0).unwrap().norm();
            best.push((v, z));
        }
    }
    best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (v, z) in best.iter().take(12) {
        println!("|S| = {:.3e} at {:.3}{:+.3}i  (dist to bdry {:.3})", v, z.re, z.im, dom.dist_to_boundary(*z));
    }
}
