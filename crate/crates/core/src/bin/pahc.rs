fn main() {
    std::process::exit(pahc::cli::main());
}
