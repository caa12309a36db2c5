//! Ooguri–Vafa magnetic coordinate: direct quadrature against the
//! Riemann–Hilbert solver, and the closed form on the singular fiber.

use std::f64::consts::PI;

use gmn::charge_lattice::{BpsSpectrum, Charge, TorusAngles};
use gmn::ov_exact::{xm_at_zero, xm_quadrature, xm_tilde, OvPoint};
use gmn::rh_solver::{evaluate, solve, ProblemSpec};
use gmn::spectral_periods::CentralChargeModel;
use num_complex::Complex64 as C;

fn main() {
    let model = CentralChargeModel::OvClassical;
    let p = OvPoint::new(C::new(0.3, 0.1), 2.0, 0.7, 1.0).unwrap();
    let z = model.basis(p.a).unwrap();
    let spec = ProblemSpec::new(z, BpsSpectrum::ooguri_vafa(), p.r, TorusAngles::new(p.theta_m, p.theta_e));
    let (field, rep) = solve(&spec).unwrap();
    println!("solver iterations {} deltas {:?}", rep.iterations, rep.deltas);
    for zeta in [C::from_polar(0.7, 0.9), C::from_polar(1.5, -2.2)] {
        let a = evaluate(&spec, &field, Charge::G1, zeta);
        let b = xm_quadrature(&p, zeta).unwrap();
        println!("zeta {zeta:.3}: solver {a:.10}  quadrature {b:.10}");
    }

    // Approach a = 0 along two directions at fixed regular-gauge angle.
    let zeta = C::from_polar(1.0, 0.4);
    let exact = xm_at_zero(PI / 2.0, 0.3, zeta).unwrap();
    for arg in [0.0, PI / 3.0] {
        let q = OvPoint::from_prime(C::from_polar(1e-5, arg), PI / 2.0, 0.3, 1.0).unwrap();
        let v = xm_tilde(&model, &q, zeta).unwrap();
        println!("arg a = {arg:.3}: {v:.8} vs closed form {exact:.8}");
    }
}
