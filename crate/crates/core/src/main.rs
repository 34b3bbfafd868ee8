fn main() {
    std::process::exit(sbheom::cli::run(std::env::args_os()));
}
