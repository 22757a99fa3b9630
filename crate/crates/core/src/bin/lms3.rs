fn main() {
    std::process::exit(lms3::cli::run(std::env::args_os()));
}
