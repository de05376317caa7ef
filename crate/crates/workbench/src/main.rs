fn main() {
    std::process::exit(arcell::cli::run(std::env::args_os()));
}
