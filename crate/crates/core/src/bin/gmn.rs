fn main() {
    std::process::exit(gmn::cli::main_with_args(std::env::args_os()));
}
