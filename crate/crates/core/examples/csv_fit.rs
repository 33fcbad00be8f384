//! Writes a simulated dataset to CSV, reads it back and fits it the way
//! `prodreg fit` does.

use prodreg::cli::commands::{dataset_from_instance, run_fit, FitOptions};
use prodreg::cli::data::{read_dataset, write_dataset};
use prodreg::simgen::{generate, CoefMode, Model, SimParams};
use prodreg::transform::{QChoice, TransformSpec};
use prodreg::tuning::{Criterion, PenaltyKind};

fn main() -> prodreg::Result<()> {
    let params = SimParams {
        n: 150,
        p: 60,
        k: 5,
        rho: None,
        coef_mode: CoefMode::One,
        heteroscedastic: false,
    };
    let inst = generate(Model::M1, &params, 8)?;
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, &dataset_from_instance(&inst))?;
    let data = read_dataset(bytes.as_slice(), Some("y"))?;

    let opts = FitOptions {
        transform: TransformSpec::Licm { q: QChoice::Auto },
        penalty: PenaltyKind::Lasso,
        criterion: Criterion::Bic,
        ..FitOptions::default()
    };
    let (table, summary) = run_fit(&data, &opts)?;
    println!("selected {:?} at lambda {:.5}, {:?}", summary.support, summary.selected_lambda, summary.transform);
    table.write(std::io::stdout())?;
    Ok(())
}
