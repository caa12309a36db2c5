//! The pentagon identity in the truncated quantum torus, and what breaks when
//! the bound state is dropped.

use gmn::ks_algebra::{apply_k, mutated_pentagon_check, pentagon_check, Cone, TwistedSeries, GAMMA_E, GAMMA_M};

fn main() {
    let n = 8;
    let rep = pentagon_check(n).unwrap();
    println!("degree {n}: type I holds = {}, type II holds = {}", rep.type_one.holds, rep.type_two.holds);

    let x_m = TwistedSeries::x(Cone::type_one(), 4, GAMMA_M).unwrap();
    let image = apply_k(GAMMA_E, 1, &x_m).unwrap();
    println!("K_e X_m = {}", image.to_text());

    for d in [2, 3] {
        let mutated = mutated_pentagon_check(d).unwrap();
        match mutated.first_discrepancy {
            None => println!("without K_(e+m), degree {d}: agrees"),
            Some(x) => println!("without K_(e+m), degree {d}: differs at {:?} ({} vs {})", x.charge, x.lhs, x.rhs),
        }
    }
}
