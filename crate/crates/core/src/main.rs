fn main() {
    std::process::exit(saddle_escape::cli::run_cli(std::env::args_os()));
}
