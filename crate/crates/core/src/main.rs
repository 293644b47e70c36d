fn main() -> std::process::ExitCode {
    simplicial_kan::cli::run()
}
