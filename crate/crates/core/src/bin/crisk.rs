fn main() {
    std::process::exit(competing_risks::cli::run(std::env::args_os()));
}
