fn main() {
    std::process::exit(tnarch::cli::run(std::env::args_os()));
}
