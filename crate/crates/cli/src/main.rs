fn main() {
    std::process::exit(sinlaw_cli::main_with_args(std::env::args_os()));
}
