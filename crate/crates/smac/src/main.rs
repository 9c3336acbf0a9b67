fn main() {
    std::process::exit(smac::cli::main_with_args(std::env::args_os()));
}
