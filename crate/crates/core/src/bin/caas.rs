fn main() {
    std::process::exit(caas_core::cli::main_with_args(std::env::args_os()));
}
