fn main() {
    std::process::exit(dmultimads::cli::run_cli(std::env::args_os()));
}
