fn main() {
    std::process::exit(bfdr::cli::run());
}
