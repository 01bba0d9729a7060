fn main() {
    std::process::exit(jumprec::cli::run(std::env::args_os()));
}
