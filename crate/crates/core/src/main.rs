fn main() {
    std::process::exit(dreidel_core::cli::dispatch(std::env::args_os()));
}
