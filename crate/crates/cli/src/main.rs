fn main() {
    std::process::exit(kgfield_cli::main_with_args(std::env::args_os()));
}
