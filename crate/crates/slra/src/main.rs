fn main() {
    std::process::exit(slra::cli::run(std::env::args_os()));
}
