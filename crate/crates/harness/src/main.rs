fn main() {
    std::process::exit(burgerlab::cli::main_with(std::env::args_os()));
}
