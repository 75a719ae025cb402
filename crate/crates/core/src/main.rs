fn main() {
    env_logger::init();
    std::process::exit(smim::cli::run(std::env::args_os()));
}
