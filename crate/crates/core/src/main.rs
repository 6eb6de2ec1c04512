fn main() {
    std::process::exit(qcodelab::protocols::cli::run(std::env::args_os()));
}
