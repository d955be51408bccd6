use clap::Parser;
use taskbot_cli::commands::{run, Cli};

fn main() -> anyhow::Result<()> {
    run(Cli::parse())
}
