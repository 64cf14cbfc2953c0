fn main() {
    std::process::exit(wfbeta_cli::run_cli());
}
