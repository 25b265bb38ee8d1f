fn main() {
    std::process::exit(nasplit::cli::main());
}
