fn main() {
    std::process::exit(bootperc::cli::run(std::env::args().collect()));
}
