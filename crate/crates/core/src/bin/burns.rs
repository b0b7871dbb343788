fn main() {
    std::process::exit(burns::cli::run(std::env::args_os()));
}
