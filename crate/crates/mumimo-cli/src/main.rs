fn main() {
    std::process::exit(mumimo_cli::cli::cli_main(std::env::args_os()));
}
