fn main() {
    std::process::exit(music_core::cli::main_with_args(std::env::args_os()));
}
