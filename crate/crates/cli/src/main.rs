fn main() {
    std::process::exit(vqf_cli::run(std::env::args_os()));
}
