//! Metric from the holomorphic symplectic form: semiflat check, solved
//! Pentagon field, and the OV metric on the singular fiber.

use gmn::metric_extract::{extract, ov_metric_at_zero, semiflat_omega3, BasePoint, ExtractOptions, FieldSource};
use gmn::rh_solver::SolverSettings;
use gmn::spectral_periods::CentralChargeModel;
use num_complex::Complex64 as C;

fn main() {
    let model = CentralChargeModel::PentagonCubic;
    let u = C::new(0.3, 0.2);
    let base = BasePoint::new(u, 2.0, 1.0);

    let sf = extract(&FieldSource::Semiflat { model: model.clone(), r: 1.0 }, base, ExtractOptions::default()).unwrap();
    let want = semiflat_omega3(&model, u, 1.0, 0.05).unwrap();
    println!("semiflat omega_3 vs closed form: {:.2e}", gmn::metric_extract::max_entry_diff(&sf.sample.omega3, &want));

    let src = FieldSource::Solved { model, r: 1.0, settings: SolverSettings::default() };
    let ex = extract(&src, base, ExtractOptions::default()).unwrap();
    println!("solved field: pole residual {:.2e}, eigenvalues {:?}", ex.sample.pole_residual, ex.metric.eigenvalues);
    for row in ex.metric.g {
        println!("  {:>12.6} {:>12.6} {:>12.6} {:>12.6}", row[0], row[1], row[2], row[3]);
    }

    let s = ov_metric_at_zero(2.0, 0.5, 1.0, 1e-4).unwrap();
    println!("OV at a = 0: V0 = {:.8}, ratios {:.10} {:.10}", s.v0, s.magnetic_ratio, s.electric_ratio);
}
