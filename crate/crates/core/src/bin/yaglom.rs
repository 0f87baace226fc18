use clap::Parser;
use yaglom::cli_io::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            std::process::exit(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("yaglom: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
