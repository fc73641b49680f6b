fn main() {
    std::process::exit(volclust::cli::run(std::env::args_os()));
}
