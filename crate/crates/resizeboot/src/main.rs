fn main() {
    std::process::exit(resizeboot::cli::main_with(std::env::args_os()));
}
