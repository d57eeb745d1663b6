fn main() {
    std::process::exit(disparity_fusion::cli::run(std::env::args_os()));
}
