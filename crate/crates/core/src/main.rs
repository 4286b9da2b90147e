fn main() {
    std::process::exit(ginflow::run());
}
