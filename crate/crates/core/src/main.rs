fn main() {
    std::process::exit(archipelago::cli::main_entry(std::env::args_os()));
}
