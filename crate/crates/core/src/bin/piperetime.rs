fn main() -> std::process::ExitCode {
    piperetime::cli::main()
}
