fn main() {
    std::process::exit(biref_cli::run());
}
