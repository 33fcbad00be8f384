//! Draws one instance from each simulation model and summarizes it.

use prodreg::simgen::{generate, CoefMode, Model, SimParams};
use prodreg::transform::{default_l_max, estimate_factors_er};

fn main() -> prodreg::Result<()> {
    let setups = [
        (Model::M1, None, CoefMode::Dirac05),
        (Model::M2, None, CoefMode::Unif01),
        (Model::M3, Some(0.7), CoefMode::Dirac05),
        (Model::M4, None, CoefMode::One),
        (Model::M5, Some(0.8), CoefMode::One),
    ];
    for (model, rho, coef_mode) in setups {
        let params = SimParams {
            n: 250,
            p: 200,
            k: 10,
            rho,
            coef_mode,
            heteroscedastic: false,
        };
        let inst = generate(model, &params, 7)?;
        let signal: f64 = inst.beta_true.iter().sum();
        let er = estimate_factors_er(&inst.x, default_l_max(inst.x.ncols().min(inst.x.nrows())))?;
        println!(
            "{model:?}: x {}x{}, support {:?}, sum(beta) {signal:.2}, noise sd {}, ER factors {er}",
            inst.x.nrows(),
            inst.x.ncols(),
            inst.support_true,
            model.noise_sd(),
        );
    }
    Ok(())
}
