fn main() {
    std::process::exit(delay_rc::cli::run_from(std::env::args_os()));
}
