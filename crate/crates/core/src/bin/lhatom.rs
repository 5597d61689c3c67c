fn main() {
    std::process::exit(lhatom::cli::run(std::env::args_os()));
}
