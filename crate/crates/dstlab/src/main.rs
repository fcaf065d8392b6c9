fn main() {
    std::process::exit(dstlab::cli::run(std::env::args_os()));
}
