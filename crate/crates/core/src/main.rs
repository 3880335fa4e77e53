fn main() {
    std::process::exit(fchs::runner::cli::cli_main(std::env::args_os()));
}
