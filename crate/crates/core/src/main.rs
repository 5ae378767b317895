fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDSWEEP_LOG", "warn")).init();
    std::process::exit(gridsweep::cli::cli_main(std::env::args_os()));
}
