fn main() {
    std::process::exit(bundlelift::cli::main_with_args(std::env::args_os()));
}
