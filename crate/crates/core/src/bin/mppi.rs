fn main() -> std::process::ExitCode {
    mppi::cli::main()
}
