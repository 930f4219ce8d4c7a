fn main() {
    std::process::exit(pmqkd_cli::main_with_args(std::env::args_os()));
}
