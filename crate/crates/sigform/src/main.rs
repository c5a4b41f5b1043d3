fn main() {
    std::process::exit(sigform::cli::run());
}
