fn main() {
    std::process::exit(anyscan_cli::run_cli(std::env::args_os()));
}
