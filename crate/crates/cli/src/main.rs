use std::process::ExitCode;

use tg_align_core::Error;

fn fail(err: &Error) -> ExitCode {
    let msg = err.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", err.category());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cfg = match tg_align_cli::parse(std::env::args_os()) {
        Err(clap_err) => {
            use clap::error::ErrorKind;
            if matches!(clap_err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                clap_err.exit();
            }
            let text = clap_err.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
        Ok(Err(e)) => return fail(&e),
        Ok(Ok(cfg)) => cfg,
    };
    if let Err(e) = tg_align_cli::init_threads() {
        return fail(&e);
    }
    match tg_align_cli::execute(&cfg) {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
