use degenflow::ensemble::{self, EnsembleSpec, Family};
use degenflow::sobolev::{self, SeminormConfig};
use degenflow::{MGrid, SpectralParams};
use num_complex::Complex64;
fn main() {
    let grid = MGrid::graded(16, 2.0).unwrap();
    let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
    let spec = EnsembleSpec { params: p, kmax: 3, count: 1, seed: 5, family: Family::RandomDecay };
    let f = ensemble::generate(&spec, &grid).unwrap().remove(0);
    let factor = Complex64::new(0.0, 0.6523596853680468);
    let cfg = SeminormConfig { u_panels: 24, strip_panels: 16, ..Default::default() };
    let rf = sobolev::full_norm_with(&f, &p, &cfg).unwrap();
    let rg = sobolev::full_norm_with(&f.scaled(factor), &p, &cfg).unwrap();
    let c2 = factor.norm_sqr();
    println!("l2 rel err   : {:.3e}", (rg.l2_part - c2 * rf.l2_part).abs() / rg.l2_part);
    println!("semi rel err : {:.3e}", (rg.seminorm_part - c2 * rf.seminorm_part).abs() / rg.seminorm_part);
    println!("semi values  : {} vs scaled {}", rg.seminorm_part, c2 * rf.seminorm_part);
}
