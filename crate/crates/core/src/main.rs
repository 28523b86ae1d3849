fn main() {
    std::process::exit(lienard::cli::run(std::env::args_os()));
}
