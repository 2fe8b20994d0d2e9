fn main() {
    std::process::exit(pottslab_cli::run_cli(std::env::args_os()));
}
