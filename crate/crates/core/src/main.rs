fn main() -> std::process::ExitCode {
    oup::cli::main_with_args(std::env::args_os())
}
