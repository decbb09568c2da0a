use clap::Parser;
use poiseuille_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(inv) => {
            for f in &inv.files {
                println!("{}", cli.out.join(f).display());
            }
        }
        Err(e) => {
            eprintln!("poiseuille {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
