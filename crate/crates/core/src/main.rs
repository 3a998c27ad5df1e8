fn main() {
    std::process::exit(rootdensity::cli::run(std::env::args_os()));
}
