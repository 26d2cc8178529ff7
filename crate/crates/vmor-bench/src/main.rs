fn main() {
    std::process::exit(vmor_bench::cli::cli_main(std::env::args_os()));
}
