fn main() {
    std::process::exit(sls_cli::run(std::env::args_os()));
}
