fn main() {
    std::process::exit(cubicflow::cli::main_entry());
}
