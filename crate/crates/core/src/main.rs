fn main() {
    std::process::exit(algoselect::cli::main_with_args(std::env::args_os()));
}
