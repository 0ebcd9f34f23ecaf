use mckernels::ahlfors::*;
use mckernels::geometry::{boundary_grid, make_preset_domain, Preset};
use mckernels::szego::SzegoEngine;
use num_complex::Complex64;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let dom = Arc::new(make_preset_domain(Preset::Annulus, &[0.5]).unwrap());
    let grid = Arc::new(boundary_grid(dom, 128).unwrap());
    let eng = SzegoEngine::new(grid).unwrap();
    let a = Complex64::new(0.7, 0.0);
    let t = Instant::now();
    let map_a = ahlfors_map(&eng, a).unwrap();
    eprintln!("map_a built {:?}", t.elapsed());
    let t = Instant::now();
    let zeros = eng.szego_zeros(a).unwrap();
    eprintln!("zeros {:?} in {:?}", zeros, t.elapsed());
    let t = Instant::now();
    let samples = interior_samples(&eng, 10, 0.12, 0x1705);
    eprintln!("samples in {:?}: {:?}", t.elapsed(), &samples[..3]);
    for (i, &z) in samples.iter().enumerate() {
        let t = Instant::now();
        let target = map_a.eval(z).unwrap();
        let f = fiber(&eng, &map_a, target);
        eprintln!("fiber {i} target |{:.3}| -> {:?} in {:?}", target.norm(), f.map(|v| v.len()), t.elapsed());
    }
}
