fn main() {
    std::process::exit(airforge::cli::main_with_args(std::env::args_os()));
}
