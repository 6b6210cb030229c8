fn main() {
    std::process::exit(partial_copula::cli::main_with_args(std::env::args_os()));
}
