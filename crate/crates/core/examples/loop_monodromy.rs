//! Carry X̃_m once around u = 2. The BPS rays it crosses undo the
//! Picard–Lefschetz shift of the magnetic charge, so the value closes up.

use gmn::charge_lattice::TorusAngles;
use gmn::wall_gauge::{loop_around_singularity, PentagonSetup};
use num_complex::Complex64 as C;

fn main() {
    let rep = loop_around_singularity(&PentagonSetup::new(2.0), 0.3, 240, TorusAngles::new(0.4, 2.2), C::from_polar(0.9, 2.0)).unwrap();
    println!("lattice shift of gamma_m: {} gamma_e", rep.shift);
    for c in &rep.continuation.crossings {
        println!("step {:>3}: crossed ray of {} with exponent {}", c.step, c.charge, c.exponent);
    }
    println!("start     {:?}", rep.continuation.start);
    println!("continued {:?}", rep.continuation.continued);
    println!("relative residuals: X_m {:.2e}, X_e {:.2e}", rep.residual_m, rep.residual_e);
}
