fn main() {
    std::process::exit(eochain::cli::main_with_args(std::env::args_os()));
}
