fn main() {
    std::process::exit(renormalab::cli::run(std::env::args_os()));
}
