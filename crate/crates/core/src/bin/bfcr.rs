fn main() {
    std::process::exit(bfcr::cli::run(std::env::args_os()));
}
