fn main() {
    std::process::exit(interlock::cli::main_with(std::env::args_os()));
}
