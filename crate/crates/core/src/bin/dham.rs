fn main() {
    std::process::exit(delay_hamiltonian_core::cli::main_with_args(std::env::args_os()));
}
