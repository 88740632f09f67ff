fn main() {
    std::process::exit(lifetree::cli::main_with(std::env::args_os()));
}
