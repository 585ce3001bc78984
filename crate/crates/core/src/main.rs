fn main() {
    std::process::exit(ltc_prune::cli::run(std::env::args_os()));
}
