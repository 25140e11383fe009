fn main() {
    let code = dialcloze::cli::run(std::env::args_os());
    std::process::exit(code);
}
