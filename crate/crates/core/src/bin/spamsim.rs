fn main() -> std::process::ExitCode {
    spamsim::cli::main_exit()
}
