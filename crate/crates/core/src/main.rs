fn main() {
    std::process::exit(ruber::cli::main_with_args(std::env::args().collect()));
}
