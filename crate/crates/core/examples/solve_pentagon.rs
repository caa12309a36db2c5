//! Solve the Pentagon Riemann–Hilbert problem at u = 0 and check the jumps,
//! the reality condition and the contraction history.

use std::f64::consts::TAU;

use gmn::charge_lattice::{BpsSpectrum, Region, TorusAngles};
use gmn::rh_solver::{jump_check, ray_phases, reality_check, solve_with, ProblemSpec};
use gmn::spectral_periods::pentagon_periods;
use num_complex::Complex64 as C;

fn main() {
    let u = C::new(0.0, 0.0);
    let z = pentagon_periods(u).unwrap();
    for r in [1.0, 2.0] {
        let spec = ProblemSpec::new(z, BpsSpectrum::pentagon(Region::Inside), r, TorusAngles::new(0.7, 2.2));
        let (field, rep) = solve_with(&spec, 1e-15, 40).unwrap();
        println!("R = {r}: deltas {:?}", rep.deltas);
        println!("  e^(-2 pi R |Z_m|) = {:.3e}, fitted ratio {:?}", (-TAU * r * z[0].norm()).exp(), rep.ratio);
        for ph in ray_phases(&spec) {
            let j = jump_check(&spec, &field, ph, &[0.3, 1.0, 3.0]);
            println!("  ray at {ph:.4}: jump residual {:.2e}", j.residual);
        }
        let probes: Vec<C> = (0..8).map(|k| C::from_polar(0.8, 0.3 + 0.77 * k as f64)).collect();
        println!("  reality residual {:.2e}", reality_check(&spec, &field, &probes));
    }
}
