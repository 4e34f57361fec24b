fn main() {
    std::process::exit(digitprep_cli::run(std::env::args_os()));
}
