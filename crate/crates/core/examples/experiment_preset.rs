//! Runs a shrunken Table-1 style experiment from a preset and prints the
//! result table as CSV.

use prodreg::cli::config::preset;
use prodreg::cli::experiment::{results_table, simulate_rows, with_jobs};

fn main() -> prodreg::Result<()> {
    let mut cfg = preset("table1")?;
    cfg.replicates = 4;
    cfg.grid.truncate(1);
    cfg.criteria.retain(|c| c.to_string() != "cv");
    println!("# config\n{}", cfg.to_toml()?);
    let rows = with_jobs(2, || simulate_rows(&cfg));
    results_table(&cfg.name, &rows).write(std::io::stdout())?;
    Ok(())
}
