fn main() {
    let status = procpyramid::run(std::env::args_os());
    std::process::exit(status.code);
}
