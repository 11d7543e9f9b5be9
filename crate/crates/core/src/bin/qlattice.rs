fn main() {
    std::process::exit(qlattice::cli::main_with_args(std::env::args_os()));
}
