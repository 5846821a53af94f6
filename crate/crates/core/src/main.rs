fn main() {
    std::process::exit(milpcert::cli::run(std::env::args_os()));
}
