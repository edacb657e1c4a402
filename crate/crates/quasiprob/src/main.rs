fn main() {
    std::process::exit(quasiprob::cli::run());
}
