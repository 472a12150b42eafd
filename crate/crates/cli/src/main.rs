use std::process::ExitCode;

use dicke_cli::{dispatch, error_line, parse_args, Invocation};

fn main() -> ExitCode {
    let outcome = parse_args(std::env::args_os()).and_then(|inv| match inv {
        Invocation::Info(text) => {
            print!("{text}");
            Ok(())
        }
        Invocation::Run(cfg, figure, command) => {
            let m = dispatch(&cfg, &command, figure)?;
            println!(
                "{}: {} artifacts, {} warnings -> {}",
                m.command,
                m.artifacts.len(),
                m.warnings_count,
                cfg.out_dir.display()
            );
            Ok(())
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
