fn main() {
    std::process::exit(mriscreen_cli::main_with_args(std::env::args_os()));
}
