fn main() {
    std::process::exit(explore_core::cli::run(std::env::args_os()));
}
