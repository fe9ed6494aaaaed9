fn main() {
    std::process::exit(geobias::cli::run(std::env::args_os()));
}
