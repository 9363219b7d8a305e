fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRAPHRETRO_LOG", "info")).init();
    std::process::exit(graphretro::pipeline::cli::run(std::env::args_os()));
}
