fn main() { std::process::exit(softedge::cli::run(std::env::args_os())); }
