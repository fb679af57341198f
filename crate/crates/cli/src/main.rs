fn main() {
    std::process::exit(ahlab_cli::run(std::env::args_os()));
}
