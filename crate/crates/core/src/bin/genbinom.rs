fn main() {
    std::process::exit(genbinom::cli::run(std::env::args_os()));
}
