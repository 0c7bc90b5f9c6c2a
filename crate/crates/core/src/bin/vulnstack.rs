fn main() -> std::process::ExitCode {
    vulnstack::cli::main_with_args(std::env::args_os())
}
