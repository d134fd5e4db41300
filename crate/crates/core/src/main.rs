fn main() {
    std::process::exit(hdwatson::cli::main());
}
