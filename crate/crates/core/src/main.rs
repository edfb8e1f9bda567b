fn main() {
    std::process::exit(ne_translit::cli::main_with_args(std::env::args_os()));
}
