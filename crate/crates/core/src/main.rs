fn main() {
    std::process::exit(weyl_lab::cli::run(std::env::args_os()));
}
