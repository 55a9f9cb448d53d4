//! Leak-aware purity across the three regimes: Kraus rank for quantum
//! channels, support patterns for classical maps, and block structure for
//! classical-quantum maps, plus the no-go for plain classical wires.

use num_complex::Complex64;
use ptlab::mat::{CMatrix, Tolerance};
use ptlab::process::{self, Process, SystemType};
use ptlab::purity;

fn main() -> Result<(), ptlab::PtError> {
    let tol = Tolerance::default();

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = process::unitary_channel(&CMatrix::from_real(2, 2, &[s, s, s, -s])?)?;
    let v = purity::is_pure_quantum(&h, tol)?;
    println!("Hadamard: pure = {}, Kraus rank = {:?}", v.pure, v.quantum_kraus_rank);
    let v = purity::is_pure_quantum(&process::dephasing_channel(2), tol)?;
    println!("dephasing: pure = {}, Kraus rank = {:?}", v.pure, v.quantum_kraus_rank);

    let weighted = Process::new(
        SystemType::classical(2),
        SystemType::classical(2),
        CMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.2])?,
    )?;
    let v = purity::is_pure_classical(&weighted, tol)?;
    let form = v.classical_form.unwrap();
    println!(
        "diagonal weights: pure = {}, pattern = {:?}, weights = {:?}",
        v.pure, form.pattern, form.weights
    );

    // Basis measurement of a qubit: every block is fine but the pattern
    // concentrates a whole column, so the map is impure.
    let mut t = CMatrix::zeros(2, 4);
    t[(0, 0)] = Complex64::new(1.0, 0.0);
    t[(1, 3)] = Complex64::new(1.0, 0.0);
    let meas = Process::new(SystemType::quantum(2), SystemType::classical(2), t)?;
    let v = purity::is_pure_cq(&meas, tol)?;
    println!("basis measurement: pure = {} ({})", v.pure, v.violation.unwrap());

    println!(
        "gap between broadcasting and the nearest constant leak on a bit: {:.3}",
        purity::identity_impurity_gap(2, 100)?
    );
    println!(
        "so the classical identity is not separation-pure: {}",
        purity::identity_impurity_nogo(2, tol)?
    );
    Ok(())
}
