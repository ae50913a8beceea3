fn main() -> std::process::ExitCode {
    chdim::cli::main()
}
