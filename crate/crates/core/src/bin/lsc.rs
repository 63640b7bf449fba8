fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let env_seed = std::env::var(lsc::cli::SEED_ENV).ok();
    std::process::exit(lsc::cli::main_with_args(
        std::env::args_os(),
        env_seed.as_deref(),
    ));
}
