fn main() {
    std::process::exit(hypstab::cli::run_command(std::env::args_os()));
}
