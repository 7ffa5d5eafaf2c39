fn main() {
    std::process::exit(reram_core::cli::main());
}
