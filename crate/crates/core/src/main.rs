fn main() {
    std::process::exit(hypofem::cli::run(std::env::args_os()));
}
