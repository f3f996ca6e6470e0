fn main() {
    std::process::exit(brickwall::cli::run(std::env::args_os()));
}
