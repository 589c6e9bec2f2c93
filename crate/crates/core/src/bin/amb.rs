fn main() {
    std::process::exit(rolecast::cli::execute(std::env::args_os()));
}
