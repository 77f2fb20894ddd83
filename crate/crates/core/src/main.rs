fn main() {
    std::process::exit(tig_core::cli::main_entry());
}
