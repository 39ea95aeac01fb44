fn main() {
    std::process::exit(ballbeam::cli::run(std::env::args_os()));
}
