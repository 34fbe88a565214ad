fn main() {
    std::process::exit(fastgmr::cli::run_from_args(std::env::args_os()));
}
