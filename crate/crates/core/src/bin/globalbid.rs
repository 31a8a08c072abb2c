fn main() {
    std::process::exit(globalbid::cli::main_with_args(std::env::args_os()));
}
