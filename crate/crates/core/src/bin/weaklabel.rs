use std::io::{self, Write};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdin = io::stdin();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr());
    let code = weaklabel::cli::main_with(std::env::args_os(), &mut stdin.lock(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
