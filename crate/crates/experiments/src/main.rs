fn main() {
    let code = shortcut_experiments::cli::main_with_args(std::env::args().collect());
    std::process::exit(code);
}
