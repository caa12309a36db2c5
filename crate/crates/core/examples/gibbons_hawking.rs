//! The periodic Gibbons–Hawking data of the OV metric: V near the origin,
//! dA = *dV by finite differences and the Taub–NUT limit.

use std::f64::consts::PI;

use gmn::ov_exact::{check_curvature, metric_ov, potential_v, taub_nut, v0, DEFAULT_CUTOFF};

fn main() {
    for r in [1e-1, 1e-2, 1e-3, 1e-4] {
        let d = r / 3f64.sqrt();
        let v = potential_v([d, d, d], 1.0, DEFAULT_CUTOFF).unwrap();
        let diff = metric_ov([d, d, d], 1.0).unwrap() * (4.0 * PI) - taub_nut([d, d, d]);
        println!("r = {r:.0e}: 4 pi r V = {:.8}, |4 pi g - g_TN|_max = {:.4}", 4.0 * PI * r * v, diff.abs().max());
    }
    let x = [0.25, 0.2, 0.35];
    for h in [1e-3, 5e-4, 2.5e-4] {
        println!("h = {h:.1e}: |dA - *dV| = {:.3e}", check_curvature(x, 1.0, h, DEFAULT_CUTOFF).unwrap());
    }
    println!("V0(theta_e = pi, R = 1) = {:.10}", v0(PI, 1.0).unwrap());
}
