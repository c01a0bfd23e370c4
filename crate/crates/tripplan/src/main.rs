fn main() -> std::process::ExitCode {
    tripplan::cli::main()
}
