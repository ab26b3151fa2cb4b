fn main() -> std::process::ExitCode {
    mapstudy::cli::main()
}
