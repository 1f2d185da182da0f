fn main() {
    std::process::exit(sphere_filters::cli::main_from_env());
}
