fn main() {
    std::process::exit(barronpde::cli::run());
}
