fn main() {
    std::process::exit(rom_boundary::cli::run(std::env::args_os()));
}
