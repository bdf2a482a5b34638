fn main() {
    std::process::exit(pontryagin::cli::execute(std::env::args_os()));
}
