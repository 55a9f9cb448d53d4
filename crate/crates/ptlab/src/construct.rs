//! The leak construction: adjoin leaks to a theory by restricting processes
//! to those sandwiched by the idempotent marginals of pre-leaks.
//!
//! A pre-leak is a causal process `A → A ⊗ L` whose marginal
//! `(id ⊗ discard) ∘ f` is idempotent. The constructed theory keeps the
//! systems and restricts processes to `P_cod ∘ f ∘ P_dom`; pre-leaks become
//! leaks there. The decoherence instance (basis-copy pre-leak on a quantum
//! system) yields classical probability theory.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::PtError;
use crate::mat::{self, CMatrix, Tolerance};
use crate::process::{
    self, compose_par, compose_seq, discard, identity, Atom, Process, SystemType,
};

/// A validated pre-leak on a single atomic system.
#[derive(Debug, Clone)]
pub struct PreLeak {
    system: Atom,
    process: Process,
    induced_idempotent: Process,
}

impl PreLeak {
    pub fn system(&self) -> Atom {
        self.system
    }

    pub fn process(&self) -> &Process {
        &self.process
    }

    pub fn induced_idempotent(&self) -> &Process {
        &self.induced_idempotent
    }
}

/// Validate a pre-leak: causal, with idempotent marginal.
pub fn make_preleak(process: &Process, tol: Tolerance) -> Result<PreLeak, PtError> {
    let system = match process.dom().factors() {
        [a] => *a,
        _ => {
            return Err(PtError::InvalidArgument(
                "a pre-leak lives on a single atomic system".into(),
            ))
        }
    };
    let cod = process.cod();
    if cod.factors().first() != Some(&system) {
        return Err(PtError::TypeMismatch(format!(
            "pre-leak codomain {} must start with its system {}",
            cod, system
        )));
    }
    let causal_residual = process::causality_residual(process);
    let bound = tol.abs_eps + tol.rel_eps * process.transfer().max_abs().max(1.0);
    if causal_residual > bound {
        return Err(PtError::NotCausal {
            residual: causal_residual,
        });
    }
    let leaked = cod.slice(1..cod.factors().len());
    let marginal = compose_seq(
        &compose_par(&identity(process.dom()), &discard(&leaked)),
        process,
    )?;
    let squared = compose_seq(&marginal, &marginal)?;
    let idem_residual = mat::max_abs_diff(squared.transfer(), marginal.transfer())?;
    if idem_residual > bound {
        return Err(PtError::NotIdempotent {
            residual: idem_residual,
        });
    }
    Ok(PreLeak {
        system,
        process: process.clone(),
        induced_idempotent: marginal,
    })
}

/// A theory constructed by splitting pre-leak idempotents: per-atom
/// assignments, with composite projectors given coherently by tensoring.
#[derive(Debug, Clone, Default)]
pub struct ConstructedTheory {
    assignments: HashMap<Atom, PreLeak>,
}

impl ConstructedTheory {
    pub fn new() -> Self {
        ConstructedTheory::default()
    }

    pub fn assign(&mut self, preleak: PreLeak) {
        self.assignments.insert(preleak.system, preleak);
    }

    pub fn with(mut self, preleak: PreLeak) -> Self {
        self.assign(preleak);
        self
    }

    /// Assign the trivial (identity) pre-leak to an atom.
    pub fn assign_identity(&mut self, atom: Atom) {
        let ty = SystemType::atom(atom);
        let id = identity(&ty);
        self.assignments.insert(
            atom,
            PreLeak {
                system: atom,
                process: id.clone(),
                induced_idempotent: id,
            },
        );
    }

    pub fn preleak(&self, atom: Atom) -> Option<&PreLeak> {
        self.assignments.get(&atom)
    }

    /// Coherent composite projector: the Kronecker product of the per-atom
    /// idempotents.
    pub fn projector(&self, ty: &SystemType) -> Result<Process, PtError> {
        let mut p = process::number(Complex64::new(1.0, 0.0));
        for atom in ty.factors() {
            let pre = self.assignments.get(atom).ok_or_else(|| {
                PtError::InvalidArgument(format!("no pre-leak assigned to atom {atom}"))
            })?;
            p = compose_par(&p, &pre.induced_idempotent);
        }
        Ok(p)
    }

    /// Restrict a process to the constructed theory: `P_cod ∘ f ∘ P_dom`.
    pub fn project(&self, f: &Process) -> Result<Process, PtError> {
        let p_dom = self.projector(f.dom())?;
        let p_cod = self.projector(f.cod())?;
        compose_seq(&p_cod, &compose_seq(f, &p_dom)?)
    }

    /// Membership: `f` is fixed by projection.
    pub fn member(&self, f: &Process, tol: Tolerance) -> Result<bool, PtError> {
        let projected = self.project(f)?;
        Ok(process::process_approx_eq(&projected, f, tol))
    }

    pub fn membership_residual(&self, f: &Process) -> Result<f64, PtError> {
        let projected = self.project(f)?;
        mat::max_abs_diff(projected.transfer(), f.transfer())
    }

    /// The assigned pre-leak viewed in the new theory: projectors applied on
    /// both sides. Satisfies the new-theory leak equation
    /// `(id ⊗ discard) ∘ induced ≈ P`.
    pub fn induced_leak(&self, atom: Atom) -> Result<Process, PtError> {
        let pre = self.assignments.get(&atom).ok_or_else(|| {
            PtError::InvalidArgument(format!("no pre-leak assigned to atom {atom}"))
        })?;
        self.project(&pre.process)
    }

    /// Residual of the new-theory leak equation for the induced leak.
    pub fn induced_leak_residual(&self, atom: Atom) -> Result<f64, PtError> {
        let pre = self.assignments.get(&atom).ok_or_else(|| {
            PtError::InvalidArgument(format!("no pre-leak assigned to atom {atom}"))
        })?;
        let induced = self.induced_leak(atom)?;
        let cod = induced.cod();
        let leaked = cod.slice(1..cod.factors().len());
        let marginal = compose_seq(
            &compose_par(&identity(induced.dom()), &discard(&leaked)),
            &induced,
        )?;
        mat::max_abs_diff(
            marginal.transfer(),
            pre.induced_idempotent.transfer(),
        )
    }

    /// True when every atom of `ty` carries a full-dephasing idempotent,
    /// i.e. the construction restricted to `ty` is the decoherence instance.
    pub fn is_dephasing_instance(&self, ty: &SystemType, tol: Tolerance) -> bool {
        ty.factors().iter().all(|atom| match atom {
            Atom::Quantum(d) => self.assignments.get(atom).is_some_and(|pre| {
                process::process_approx_eq(
                    &pre.induced_idempotent,
                    &process::dephasing_channel(*d),
                    tol,
                )
            }),
            Atom::Classical(_) => false,
        })
    }

    /// Extract the classical matrix of a member of the dephasing
    /// construction: entry `(k, l)` is the value of `f` on the basis
    /// transition `|l⟩⟨l| → |k⟩⟨k|`, taken atom-wise on composites.
    pub fn extract_classical(&self, f: &Process, tol: Tolerance) -> Result<Process, PtError> {
        if !self.is_dephasing_instance(f.dom(), tol) || !self.is_dephasing_instance(f.cod(), tol) {
            return Err(PtError::InvalidArgument(
                "extract_classical requires the dephasing construction on all atoms".into(),
            ));
        }
        let residual = self.membership_residual(f)?;
        let bound = tol.abs_eps + tol.rel_eps * f.transfer().max_abs().max(1.0);
        if residual > bound {
            return Err(PtError::NotMember { residual });
        }
        let dom_dims: Vec<usize> = quantum_atom_dims(f.dom())?;
        let cod_dims: Vec<usize> = quantum_atom_dims(f.cod())?;
        let rows: usize = cod_dims.iter().product();
        let cols: usize = dom_dims.iter().product();
        let transfer = CMatrix::from_fn(rows, cols, |k, l| {
            f.transfer()
                .get(diag_carrier_index(&cod_dims, k), diag_carrier_index(&dom_dims, l))
        });
        Process::new(
            classical_shadow(f.dom()),
            classical_shadow(f.cod()),
            transfer,
        )
    }

    /// Inverse of [`Self::extract_classical`]: embed a matrix with
    /// nonnegative entries as a member process of the dephasing
    /// construction.
    pub fn embed_classical(
        &self,
        m: &CMatrix,
        dom: &SystemType,
        cod: &SystemType,
        tol: Tolerance,
    ) -> Result<Process, PtError> {
        if !self.is_dephasing_instance(dom, tol) || !self.is_dephasing_instance(cod, tol) {
            return Err(PtError::InvalidArgument(
                "embed_classical requires the dephasing construction on all atoms".into(),
            ));
        }
        let dom_dims = quantum_atom_dims(dom)?;
        let cod_dims = quantum_atom_dims(cod)?;
        let rows: usize = cod_dims.iter().product();
        let cols: usize = dom_dims.iter().product();
        if m.rows() != rows || m.cols() != cols {
            return Err(PtError::ShapeMismatch {
                context: "embed_classical",
                expected: format!("{rows}x{cols}"),
                found: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        let mut transfer = CMatrix::zeros(cod.carrier_dim(), dom.carrier_dim());
        for k in 0..rows {
            for l in 0..cols {
                transfer[(diag_carrier_index(&cod_dims, k), diag_carrier_index(&dom_dims, l))] =
                    m.get(k, l);
            }
        }
        Process::new(dom.clone(), cod.clone(), transfer)
    }
}

fn quantum_atom_dims(ty: &SystemType) -> Result<Vec<usize>, PtError> {
    ty.factors()
        .iter()
        .map(|a| match a {
            Atom::Quantum(d) => Ok(*d),
            Atom::Classical(_) => Err(PtError::InvalidArgument(
                "expected a purely quantum system".into(),
            )),
        })
        .collect()
}

/// The classical system type shadowing a purely quantum one.
fn classical_shadow(ty: &SystemType) -> SystemType {
    SystemType::from_atoms(
        ty.factors()
            .iter()
            .map(|a| match a {
                Atom::Quantum(d) => Atom::Classical(*d),
                Atom::Classical(n) => Atom::Classical(*n),
            })
            .collect(),
    )
}

/// Carrier index of the all-diagonal vectorized basis element `|K⟩⟨K|`
/// for composite classical index `k` over per-atom dimensions `dims`.
fn diag_carrier_index(dims: &[usize], mut k: usize) -> usize {
    let mut per_atom = vec![0usize; dims.len()];
    for (pos, &d) in dims.iter().enumerate().rev() {
        per_atom[pos] = k % d;
        k /= d;
    }
    let mut flat = 0;
    for (pos, &d) in dims.iter().enumerate() {
        flat = flat * (d * d) + per_atom[pos] * d + per_atom[pos];
    }
    flat
}

/// Stinespring data for a purified idempotent.
#[derive(Debug, Clone)]
pub struct Purification {
    /// The isometry pre-leak `A → A ⊗ E` with Choi rank 1.
    pub preleak: Process,
    /// Kraus operators of the original idempotent.
    pub kraus: Vec<CMatrix>,
    /// Unitary on `A ⊗ E` completing the isometry.
    pub unitary: CMatrix,
    /// Dimension of the environment `E`.
    pub ancilla_dim: usize,
    /// The fixed ancilla state `|0⟩⟨0|` on `E` used by the dilation.
    pub ancilla: Process,
}

/// Purify a CP causal idempotent on a single quantum atom: Kraus operators
/// from the Choi eigendecomposition assemble into an isometry
/// `V = Σ_m K_m ⊗ |m⟩`, which is both a pure pre-leak with the same
/// marginal and, completed to a unitary, a reversible interaction with an
/// environment in a fixed state.
pub fn purify_idempotent(p: &Process, tol: Tolerance) -> Result<Purification, PtError> {
    let d = match p.dom().factors() {
        [Atom::Quantum(d)] if p.cod() == p.dom() => *d,
        _ => {
            return Err(PtError::InvalidArgument(
                "purify_idempotent expects an endo-channel on a single quantum atom".into(),
            ))
        }
    };
    if !process::is_cp(p, tol) {
        return Err(PtError::NotCompletelyPositive);
    }
    let kraus = process::kraus_from_choi(p, tol)?;
    let r = kraus.len().max(1);
    let mut v = CMatrix::zeros(d * r, d);
    for (m, k) in kraus.iter().enumerate() {
        for row in 0..d {
            for col in 0..d {
                v[(row * r + m, col)] = k.get(row, col);
            }
        }
    }
    let env = SystemType::quantum(r);
    let cod = p.dom().tensor(&env);
    let preleak = process::from_kraus(p.dom(), &cod, std::slice::from_ref(&v))?;
    // Unitary completion: place the isometry columns at the |i⟩⊗|0⟩ slots
    // and Gram-Schmidt the rest.
    let n = d * r;
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for i in 0..d {
        columns.push((0..n).map(|row| v.get(row, i)).collect());
    }
    let mut basis_pool = (0..n).map(|b| {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[b] = Complex64::new(1.0, 0.0);
        e
    });
    while columns.len() < n {
        let mut cand = match basis_pool.next() {
            Some(c) => c,
            None => {
                return Err(PtError::InvalidArgument(
                    "unitary completion failed: exhausted basis candidates".into(),
                ))
            }
        };
        for existing in &columns {
            let overlap: Complex64 = existing
                .iter()
                .zip(&cand)
                .map(|(e, c)| e.conj() * c)
                .sum();
            for (c, e) in cand.iter_mut().zip(existing) {
                *c -= overlap * e;
            }
        }
        let norm: f64 = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for z in cand.iter_mut() {
            *z /= norm;
        }
        columns.push(cand);
    }
    // Column order: V-columns occupy the i·r slots, completion fills the
    // remaining ancilla slots in discovery order.
    let mut unitary = CMatrix::zeros(n, n);
    let mut extra = columns.iter().skip(d);
    for i in 0..d {
        for m in 0..r {
            let col_idx = i * r + m;
            let source: &Vec<Complex64> = if m == 0 {
                &columns[i]
            } else {
                extra.next().expect("enough completion columns")
            };
            for (row, z) in source.iter().enumerate() {
                unitary[(row, col_idx)] = *z;
            }
        }
    }
    let mut ancilla_rho = CMatrix::zeros(r, r);
    ancilla_rho[(0, 0)] = Complex64::new(1.0, 0.0);
    let ancilla = process::quantum_state(&ancilla_rho)?;
    Ok(Purification {
        preleak,
        kraus,
        unitary,
        ancilla_dim: r,
        ancilla,
    })
}

/// Block-dephasing idempotent on `Quantum(d)`: project onto the block
/// diagonal given by consecutive block sizes (coherence survives within a
/// block, dies across blocks).
pub fn block_dephasing(d: usize, blocks: &[usize]) -> Result<Process, PtError> {
    if blocks.iter().sum::<usize>() != d || blocks.iter().any(|&b| b == 0) {
        return Err(PtError::InvalidArgument(format!(
            "block sizes {blocks:?} do not partition dimension {d}"
        )));
    }
    let ty = SystemType::quantum(d);
    let mut kraus = Vec::with_capacity(blocks.len());
    let mut offset = 0;
    for &b in blocks {
        let mut proj = CMatrix::zeros(d, d);
        for i in offset..offset + b {
            proj[(i, i)] = Complex64::new(1.0, 0.0);
        }
        kraus.push(proj);
        offset += b;
    }
    process::from_kraus(&ty, &ty, &kraus)
}

/// The full decoherence construction on `Quantum(d)` (basis-copy pre-leak).
pub fn dephasing_construction(d: usize, tol: Tolerance) -> Result<ConstructedTheory, PtError> {
    let pre = make_preleak(&process::dephasing_copy(d), tol)?;
    Ok(ConstructedTheory::new().with(pre))
}
