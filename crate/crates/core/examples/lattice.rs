//! Charge lattice basics: the pairing, twisted angles and monodromy at infinity.

use gmn::charge_lattice::{monodromy_infinity, pair, picard_lefschetz, twisted_angle, BpsSpectrum, Charge, Region, TorusAngles};

fn main() {
    let (m, e) = (Charge::G1, Charge::G2);
    println!("<m, e> = {}", pair(m, e));
    let angles = TorusAngles::new(0.4, 1.1);
    for g in [m, e, m + e, m - e] {
        println!("theta_{g} = {:.6}", twisted_angle(angles, g));
    }
    println!("m around u = 2 (vanishing e): {}", picard_lefschetz(m, e).unwrap());

    let mut g = m;
    print!("orbit of m under M_inf:");
    for _ in 0..6 {
        g = monodromy_infinity(g);
        print!(" {g}");
    }
    println!();

    let outside = BpsSpectrum::pentagon(Region::OutsideI);
    let images: Vec<Charge> = outside.support().into_iter().map(monodromy_infinity).collect();
    println!("outside support {:?}\nimages          {:?}", outside.support(), images);
}
