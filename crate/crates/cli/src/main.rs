use std::io;

fn main() {
    let code = hgs_bench::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
