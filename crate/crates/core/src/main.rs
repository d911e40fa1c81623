fn main() -> std::process::ExitCode {
    deblur::cli::run()
}
