fn main() {
    std::process::exit(gensol_cli::run(std::env::args_os()));
}
