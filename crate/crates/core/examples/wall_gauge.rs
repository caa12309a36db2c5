//! Gauge transformation ψ on both sides of each wall near u = 2, and the
//! circle map Q(θ_m) = θ_m + ψ.

use gmn::charge_lattice::TorusAngles;
use gmn::wall_gauge::{find_walls, q_map, wall_check, PentagonSetup};
use num_complex::Complex64 as C;

fn main() {
    for r in [2.0, 0.3] {
        let setup = PentagonSetup::new(r);
        for w in find_walls(0.3).unwrap() {
            let c = wall_check(&setup, w, TorusAngles::new(0.9, 2.4), 1e-7).unwrap();
            println!("R = {r} wall {:?}: psi_in {:+.6e} psi_out {:+.6e} gap {:.1e}", c.wall_type, c.psi_in, c.psi_out, c.discrepancy);
        }
    }
    let q = q_map(&PentagonSetup::new(0.5), C::new(1.75, 0.05), 2.0, 16, 1e-3).unwrap();
    println!("Q map: max |dpsi/dtheta_m| = {:.3e}, monotone {}, period defect {:.1e}", q.dpsi_max, q.monotone, q.period_defect);
}
