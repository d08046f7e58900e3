fn main() {
    std::process::exit(fairgrade::cli::main_with_args(std::env::args_os()));
}
