fn main() {
    std::process::exit(nmd::cli::main_with_args(std::env::args_os()));
}
