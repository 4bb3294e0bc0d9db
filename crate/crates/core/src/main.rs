fn main() {
    std::process::exit(tmfrac::cli::run(std::env::args_os()));
}
