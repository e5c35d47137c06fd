fn main() {
    std::process::exit(drowsyrank::cli::run(std::env::args_os()));
}
