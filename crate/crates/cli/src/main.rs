fn main() {
    std::process::exit(siu_cli::run(std::env::args_os()));
}
