//! Drive the `gmn` command line in-process and print its JSON report.

fn main() {
    let code = gmn::cli::main_with_args(["gmn", "solve", "--model", "ov", "--u", "0.3,0.2", "--R", "1.5"]);
    eprintln!("exit code {code}");
}
