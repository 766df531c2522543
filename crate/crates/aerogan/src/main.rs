fn main() {
    std::process::exit(aerogan::cli::run(std::env::args_os()));
}
