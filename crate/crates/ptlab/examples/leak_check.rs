//! Run the leak predicate and classifier over the basic leak families:
//! broadcasting, constant leaks, canonical classical leaks, and a
//! non-example.

use ptlab::leak::{self, LeakKind};
use ptlab::mat::{CMatrix, Tolerance};
use ptlab::process::{self, Process, SystemType};

fn describe(name: &str, candidate: &Process, tol: Tolerance) {
    match leak::is_leak(candidate, tol) {
        Ok(cert) => {
            let kind = match &cert.kind {
                Some(LeakKind::Broadcast) => "broadcast",
                Some(LeakKind::Constant(_)) => "constant",
                Some(LeakKind::ClassicalCanonical(_)) => "classical canonical",
                Some(LeakKind::CqCanonical(_)) => "cq canonical",
                Some(LeakKind::Other) => "other",
                None => "none",
            };
            println!(
                "{name}: leak = {}, residual = {:.2e}, kind = {kind}",
                cert.is_leak, cert.residual
            );
        }
        Err(e) => println!("{name}: {e}"),
    }
}

fn main() -> Result<(), ptlab::PtError> {
    let tol = Tolerance::default();
    describe("broadcast on classical(3)", &process::broadcast(3), tol);

    let rho = process::classical_state(&[0.3, 0.7])?;
    let constant = leak::constant_leak(&SystemType::classical(2), &rho);
    describe("id ⊗ rho", &constant, tol);

    // A canonical classical leak built from an arbitrary causal side
    // channel l.
    let l = Process::new(
        SystemType::classical(2),
        SystemType::classical(3),
        CMatrix::from_real(3, 2, &[0.5, 0.1, 0.25, 0.2, 0.25, 0.7])?,
    )?;
    let canonical = leak::build_classical_leak(&l)?;
    describe("(id ⊗ l) ∘ copy", &canonical, tol);

    // The dephasing copy keeps only diagonal information, so it fails the
    // leak equation outright.
    describe("qubit basis copy", &process::dephasing_copy(2), tol);
    Ok(())
}
