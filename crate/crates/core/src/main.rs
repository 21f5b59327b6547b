fn main() {
    std::process::exit(dexgrasp::cli::main_with_args(std::env::args_os()));
}
