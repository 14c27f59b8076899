fn main() {
    std::process::exit(gaf_hole_cli::main_with_env());
}
