fn main() {
    std::process::exit(wsaug::harness::run_cli(std::env::args_os()));
}
