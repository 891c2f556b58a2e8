fn main() {
    std::process::exit(fairfate::cli::dispatch(std::env::args_os()));
}
