fn main() {
    std::process::exit(hybrid_rfm::cli::run(std::env::args_os()));
}
