fn main() {
    std::process::exit(dc_control_cli::run(std::env::args_os()));
}
