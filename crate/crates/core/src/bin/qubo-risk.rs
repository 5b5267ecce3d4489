fn main() {
    std::process::exit(qubo_risk::cli::run(std::env::args_os()));
}
