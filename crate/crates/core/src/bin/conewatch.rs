fn main() {
    let env_jobs = std::env::var("CONEWATCH_JOBS").ok();
    std::process::exit(conewatch::cli::main_with_args(std::env::args_os(), env_jobs.as_deref()));
}
