use clap::Parser;
use expforge_cli::cli::Cli;

fn main() {
    let cli = Cli::parse();
    match expforge_cli::run(&cli) {
        Ok(manifest) => {
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, o.path);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
