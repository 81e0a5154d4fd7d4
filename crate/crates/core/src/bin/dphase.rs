fn main() {
    std::process::exit(dphase::cli::run(std::env::args_os()));
}
