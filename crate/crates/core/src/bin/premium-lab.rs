fn main() {
    std::process::exit(premium_lab::cli::run(std::env::args_os()));
}
