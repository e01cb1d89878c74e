fn main() {
    std::process::exit(depol_cli::run(std::env::args_os()));
}
