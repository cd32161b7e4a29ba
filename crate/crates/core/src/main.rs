fn main() -> std::process::ExitCode {
    solvault::cli::main()
}
