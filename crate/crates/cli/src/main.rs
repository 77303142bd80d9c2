use std::io::Write;
use std::process::ExitCode;

use sgforge_cli::cli::{self, Command};

fn main() -> ExitCode {
    let parsed = match cli::parse(std::env::args_os()) {
        Ok(c) => c,
        Err(out) => return emit(out),
    };
    if let Command::Serve { host, port, store } = &parsed.command {
        let runtime = match tokio::runtime::Runtime::new() {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: cannot start runtime: {e}");
                return ExitCode::from(2);
            }
        };
        return match runtime.block_on(sgforge_cli::service::serve(host, *port, cli::store_dir(store, std::env::var_os("SGFORGE_STORE")))) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        };
    }
    emit(cli::execute(&parsed))
}

fn emit(out: cli::Output) -> ExitCode {
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.exit)
}
