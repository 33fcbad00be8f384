fn main() -> std::process::ExitCode {
    prodreg::cli::main()
}
