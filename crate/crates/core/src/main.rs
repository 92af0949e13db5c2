fn main() {
    std::process::exit(mqsym::cli::main());
}
