fn main() {
    std::process::exit(ehjb_runner::cli::run(std::env::args_os()));
}
