fn main() {
    std::process::exit(lightcone::run::cli_main());
}
