fn main() {
    std::process::exit(revsyn_cli::run(std::env::args_os()));
}
