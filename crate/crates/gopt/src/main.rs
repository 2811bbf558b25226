fn main() {
    std::process::exit(gopt::cli::main_entry());
}
