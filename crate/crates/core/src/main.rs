fn main() {
    std::process::exit(gch_core::cli::main_with_args(std::env::args_os()));
}
