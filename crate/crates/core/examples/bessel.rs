//! K₁ across its series and integral branches.

use gmn::bessel::bessel_k1;

fn main() {
    for x in [1e-4, 0.1, 1.0, 2.0, 5.0, 20.0] {
        let k = bessel_k1(x).unwrap();
        println!("x = {x:>7}: K1 = {k:.15e}, x K1 = {:.12}", x * k);
    }
}
