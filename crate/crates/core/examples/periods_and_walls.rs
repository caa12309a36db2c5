//! Pentagon periods near the singular fiber at u = 2 and the walls of
//! marginal stability crossing a small circle around it.

use gmn::spectral_periods::pentagon_periods;
use gmn::wall_gauge::{find_walls, pentagon_region, SINGULAR_U};
use num_complex::Complex64 as C;

fn main() {
    for u in [C::new(0.0, 0.0), C::new(1.0, 0.5), C::new(1.9, 0.0)] {
        let z = pentagon_periods(u).unwrap();
        println!("u = {u}: Z_1 = {:.6}, Z_2 = {:.6}, chamber {:?}", z[0], z[1], pentagon_region(z, u));
    }
    for rho in [0.3, 0.1] {
        for w in find_walls(rho).unwrap() {
            let z = pentagon_periods(w.u).unwrap();
            println!("|u - 2| = {rho}: wall {:?} at {:.8}, Im(Z1/Z2) = {:.1e}", w.wall_type, w.u, (z[0] / z[1]).im);
        }
    }
    println!("singular point {SINGULAR_U}");
}
