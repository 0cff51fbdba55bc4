fn main() {
    std::process::exit(rasqp_cli::app::run(std::env::args_os()));
}
