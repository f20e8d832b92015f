fn main() {
    std::process::exit(sml::cli::main_with(std::env::args_os()));
}
