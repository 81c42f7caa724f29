fn main() {
    std::process::exit(hhg_coherence::cli::parse_and_dispatch(std::env::args_os()));
}
