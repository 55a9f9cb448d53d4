//! The leak construction in its decoherence instance: restricting qubit
//! channels to those fixed by full dephasing yields classical probability
//! theory, and the basis-copy pre-leak becomes classical broadcasting.

use ptlab::construct;
use ptlab::mat::{CMatrix, Tolerance};
use ptlab::process::{self, Atom, SystemType};

fn main() -> Result<(), ptlab::PtError> {
    let tol = Tolerance::default();
    let theory = construct::dephasing_construction(2, tol)?;

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = process::unitary_channel(&CMatrix::from_real(2, 2, &[s, s, s, -s])?)?;
    println!(
        "Hadamard conjugation is a member: {}",
        theory.member(&hadamard, tol)?
    );
    let projected = theory.project(&hadamard)?;
    let extracted = theory.extract_classical(&projected, tol)?;
    println!("its dephased shadow, as a stochastic matrix:");
    for r in 0..2 {
        println!(
            "  [{:.2}, {:.2}]",
            extracted.transfer().get(r, 0).re,
            extracted.transfer().get(r, 1).re
        );
    }

    let induced = theory.induced_leak(Atom::Quantum(2))?;
    let q = SystemType::quantum(2);
    let embedded = theory.embed_classical(
        process::broadcast(2).transfer(),
        &q,
        &q.tensor(&q),
        tol,
    )?;
    println!(
        "induced leak equals embedded classical broadcasting: {}",
        process::process_approx_eq(&induced, &embedded, tol)
    );
    println!(
        "leak equation residual in the new theory: {:.2e}",
        theory.induced_leak_residual(Atom::Quantum(2))?
    );
    Ok(())
}
