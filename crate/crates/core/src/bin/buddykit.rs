fn main() -> std::process::ExitCode {
    buddykit::cli::main_from(std::env::args_os())
}
