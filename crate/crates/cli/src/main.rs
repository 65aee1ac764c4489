fn main() {
    std::process::exit(cubicwave_cli::dispatch(std::env::args_os()));
}
