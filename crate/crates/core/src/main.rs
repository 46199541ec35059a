fn main() { std::process::exit(gplhr::cli::main_entry()) }
