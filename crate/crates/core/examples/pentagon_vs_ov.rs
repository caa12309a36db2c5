//! Near u = 2 the Pentagon metric approaches the OV metric built on the
//! local expansion of Z_m. The comparison is made in the regular gauge.

use gmn::metric_extract::{pentagon_vs_ov, BasePoint, ExtractOptions};
use num_complex::Complex64 as C;

fn main() {
    let bases: Vec<BasePoint> = [0.1, 0.03, 0.01].iter().map(|&rho| BasePoint::new(C::new(2.0 - rho, 0.02 * rho), 2.0, 1.0)).collect();
    for r in [1.0, 0.5] {
        let cmp = pentagon_vs_ov(&bases, r, true, ExtractOptions::default()).unwrap();
        println!("R = {r} (local model closure {:.1e})", cmp.model_closure);
        for p in &cmp.points {
            println!("  |a| = {:.4}: bare frame {:.3e}, regular gauge {:.3e}", p.a.norm(), p.difference, p.difference_regular);
        }
    }
}
