fn main() {
    std::process::exit(sparsecast::cli::run(std::env::args_os()));
}
