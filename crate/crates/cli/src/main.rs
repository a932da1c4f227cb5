fn main() {
    std::process::exit(hbac_cli::run(std::env::args_os()));
}
