//! Run selected acceptance criteria, e.g.
//! `cargo run --example acceptance_table -- 1 5 12`. No arguments runs all.

fn main() {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    for r in gmn::acceptance::run(&ids) {
        println!("{}", r.line());
    }
}
