fn main() {
    std::process::exit(fwtopic::cli::run(std::env::args_os()));
}
