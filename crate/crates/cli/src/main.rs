fn main() {
    std::process::exit(qhsl_cli::run_cli(std::env::args_os()));
}
