fn main() {
    std::process::exit(sglab_cli::main_with_args(std::env::args_os()));
}
