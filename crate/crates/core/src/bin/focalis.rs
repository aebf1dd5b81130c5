fn main() -> std::process::ExitCode {
    focalis::cli::main()
}
