fn main() {
    std::process::exit(hypercircle::harness::main_with(std::env::args_os()));
}
