fn main() -> std::process::ExitCode {
    rwre::cli::main()
}
