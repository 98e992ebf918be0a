fn main() {
    std::process::exit(qnoise::cli::main_with_args(std::env::args_os()));
}
