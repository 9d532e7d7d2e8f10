use beamforge::cli::{main_with_args, SEED_ENV};

fn main() {
    let seed = std::env::var(SEED_ENV).ok();
    std::process::exit(main_with_args(std::env::args_os(), seed.as_deref()));
}
