fn main() {
    std::process::exit(biaslens_cli::run_command(std::env::args_os()));
}
