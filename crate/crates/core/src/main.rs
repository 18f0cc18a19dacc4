fn main() {
    std::process::exit(mmcorpus::cli::dispatch(std::env::args_os()));
}
