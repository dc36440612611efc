use std::io;
use std::process::ExitCode;

use ternlab::cli::{execute, Env};

fn main() -> ExitCode {
    let code = execute(
        std::env::args_os(),
        &Env::from_process(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    ExitCode::from(code as u8)
}
