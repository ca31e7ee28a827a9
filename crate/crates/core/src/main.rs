fn main() {
    std::process::exit(gengeom::cli::run(std::env::args_os()));
}
