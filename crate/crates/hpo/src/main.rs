fn main() {
    std::process::exit(hpo::cli::main_entry());
}
