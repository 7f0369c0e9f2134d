fn main() {
    std::process::exit(zzbound_cli::run(std::env::args_os()));
}
