//! Irrepresentable-condition values before and after LICM, and the minimum
//! signal strength each design needs for sign recovery.

use prodreg::diagnostics::{example_one_design, irrepresentable_value_prod, min_signal_strength};
use prodreg::transform::{QChoice, TransformSpec};

fn main() -> prodreg::Result<()> {
    let spec = TransformSpec::Licm { q: QChoice::Fixed(2) };
    for loading in [0.5, 1.0, 1.5, 2.0] {
        let (x, s) = example_one_design(1000, 100, 5, 2, loading, 3)?;
        let ic = irrepresentable_value_prod(&x, &spec, &s)?;
        print!(
            "loading {loading}: IC raw {:.3}, after LICM {:.3}",
            ic.value_raw, ic.value_prod
        );
        match min_signal_strength(&x, &spec, &s, 1.0) {
            Ok(r) => println!(", q1 {:.3}, q2 {:.3}", r.q1, r.q2),
            Err(e) => println!(", signal bound unavailable: {e}"),
        }
    }
    Ok(())
}
