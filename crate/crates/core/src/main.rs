fn main() {
    std::process::exit(mkge::cli::run());
}
