fn main() {
    std::process::exit(rwre::cli::main_with_args(std::env::args_os()));
}
