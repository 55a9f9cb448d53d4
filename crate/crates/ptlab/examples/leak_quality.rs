//! Quality of a leak: how much of the input the environment can win back.
//! Broadcasting scores 1, constant leaks score 0, and mixtures
//! interpolate linearly.

use ptlab::leak::{self, MixedLeakParams, QualityOptions};
use ptlab::mat::Tolerance;
use ptlab::process;

fn main() -> Result<(), ptlab::PtError> {
    let tol = Tolerance::default();
    let opts = QualityOptions::default();
    let rho = process::classical_state(&[0.25, 0.75])?;
    for c in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let leak = leak::mixed_leak(&MixedLeakParams {
            c,
            state: rho.clone(),
        })?;
        let q = leak::quality(&leak, tol, opts)?;
        println!(
            "mixture c = {c:.2}: raw = {:.6}, circle = {}, normalized = {:.6}",
            q.raw, q.circle, q.normalized
        );
    }

    // A quantum constant leak: nothing to restore.
    let mixed = process::maximally_mixed(2);
    let constant = leak::constant_leak(&ptlab::SystemType::quantum(2), &mixed);
    let q = leak::quality(&constant, tol, opts)?;
    println!(
        "qubit constant leak: raw = {:.6}, normalized = {:.6}",
        q.raw, q.normalized
    );
    Ok(())
}
