fn main() {
    std::process::exit(synten::cli::run(std::env::args_os()));
}
