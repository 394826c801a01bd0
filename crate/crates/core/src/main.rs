fn main() -> std::process::ExitCode {
    clustercf::cli::main()
}
