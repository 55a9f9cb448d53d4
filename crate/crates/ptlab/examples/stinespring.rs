//! Purify an idempotent channel: Kraus operators assemble into an
//! isometric pre-leak with the same marginal, and complete to a unitary
//! interaction with an environment in a fixed state.

use ptlab::construct;
use ptlab::mat::{self, Tolerance};
use ptlab::process::{self, SystemType};

fn main() -> Result<(), ptlab::PtError> {
    let tol = Tolerance::default();
    let p = construct::block_dephasing(4, &[2, 2])?;
    let purified = construct::purify_idempotent(&p, tol)?;
    println!(
        "block dephasing on quantum(4): {} Kraus operator(s), environment dimension {}",
        purified.kraus.len(),
        purified.ancilla_dim
    );

    let q = SystemType::quantum(4);
    let env = SystemType::quantum(purified.ancilla_dim);
    let marginal = process::compose_seq(
        &process::compose_par(&process::identity(&q), &process::discard(&env)),
        &purified.preleak,
    )?;
    println!(
        "pre-leak marginal reproduces the channel: {}",
        process::process_approx_eq(&marginal, &p, tol)
    );

    let n = 4 * purified.ancilla_dim;
    let gram = mat::matmul(&purified.unitary.conj_transpose(), &purified.unitary)?;
    let unitary_residual = mat::max_abs_diff(&gram, &ptlab::CMatrix::identity(n))?;
    println!("unitary completion residual: {unitary_residual:.2e}");

    let joint = q.tensor(&env);
    let u_chan = process::from_kraus(&joint, &joint, std::slice::from_ref(&purified.unitary))?;
    let dilated = process::compose_seq(
        &process::compose_par(&process::identity(&q), &process::discard(&env)),
        &process::compose_seq(
            &u_chan,
            &process::compose_par(&process::identity(&q), &purified.ancilla),
        )?,
    )?;
    println!(
        "unitary dilation with a fixed ancilla reproduces the channel: {}",
        process::process_approx_eq(&dilated, &p, tol)
    );
    Ok(())
}
