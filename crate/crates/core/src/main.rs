fn main() {
    std::process::exit(iongrover::cli::main_with_args(std::env::args_os()));
}
