fn main() {
    std::process::exit(fkdv::cli::main_with_args(std::env::args_os()));
}
