fn main() {
    std::process::exit(distsl::cli::main_with_args(std::env::args_os()));
}
