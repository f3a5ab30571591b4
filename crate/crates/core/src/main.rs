fn main() -> std::process::ExitCode {
    scenq::cli::main()
}
