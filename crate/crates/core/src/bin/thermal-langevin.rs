fn main() {
    std::process::exit(thermal_langevin::cli::main_with_args(std::env::args_os()));
}
