fn main() {
    std::process::exit(motifcar::cli::main_with(std::env::args_os()));
}
