//! Leak predicate, leak algebra, canonical forms, and leak quality.
//!
//! A leak is a process `A → A ⊗ L` for which discarding the leaked output
//! returns the identity on `A`. Broadcasting is the maximal classical leak;
//! quantum systems only admit constant leaks.

use num_complex::Complex64;

use crate::error::PtError;
use crate::mat::{self, CMatrix, Tolerance};
use crate::process::{
    self, broadcast, compose_par, compose_seq, discard, identity, is_causal, permute_atoms,
    Atom, Process, SystemType,
};

/// What a leak looks like once classified.
#[derive(Debug, Clone)]
pub enum LeakKind {
    /// `L = A` and discarding is also a left counit.
    Broadcast,
    /// `id_A ⊗ ρ` for a causal state ρ (carried here).
    Constant(Process),
    /// Classical canonical form `(id ⊗ l) ∘ copy` with the extracted `l`.
    ClassicalCanonical(Process),
    /// Classical-quantum canonical form with the extracted classical-input
    /// map `L`.
    CqCanonical(Process),
    /// Passes the leak equation but matches no canonical family we extract.
    Other,
}

/// Verdict of the leak predicate.
#[derive(Debug, Clone)]
pub struct LeakCertificate {
    pub is_leak: bool,
    /// Max-norm deviation in the defining equation.
    pub residual: f64,
    pub kind: Option<LeakKind>,
}

/// Split the codomain of a candidate leak into the `A` prefix (equal to the
/// domain) and the leaked remainder `L`.
fn split_cod(candidate: &Process) -> Result<(SystemType, SystemType), PtError> {
    let a = candidate.dom().clone();
    let n = a.factors().len();
    let cod = candidate.cod();
    if cod.factors().len() < n || cod.factors()[..n] != *a.factors() {
        return Err(PtError::TypeMismatch(format!(
            "leak candidate codomain {} does not start with its domain {}",
            cod, a
        )));
    }
    Ok((a, cod.slice(n..cod.factors().len())))
}

/// Max-norm deviation from the leak equation
/// `(id_A ⊗ discard(L)) ∘ candidate = id_A`.
pub fn leak_residual(candidate: &Process) -> Result<f64, PtError> {
    let (a, l) = split_cod(candidate)?;
    let marginal = compose_seq(&compose_par(&identity(&a), &discard(&l)), candidate)?;
    mat::max_abs_diff(marginal.transfer(), identity(&a).transfer())
}

/// The marginal `(discard(A) ⊗ id_L) ∘ candidate : A → L` obtained by
/// discarding the retained output.
fn leaked_marginal(candidate: &Process) -> Result<Process, PtError> {
    let (a, l) = split_cod(candidate)?;
    compose_seq(&compose_par(&discard(&a), &identity(&l)), candidate)
}

/// Causal product state: uniform distribution on classical atoms, maximally
/// mixed on quantum atoms.
pub fn uniform_state(ty: &SystemType) -> Process {
    let mut s = process::number(Complex64::new(1.0, 0.0));
    for atom in ty.factors() {
        let part = match *atom {
            Atom::Classical(n) => {
                process::classical_state(&vec![1.0 / n as f64; n]).expect("valid")
            }
            Atom::Quantum(d) => process::maximally_mixed(d),
        };
        s = compose_par(&s, &part);
    }
    s
}

fn all_classical(ty: &SystemType) -> bool {
    ty.factors().iter().all(|a| matches!(a, Atom::Classical(_)))
}

/// Leak predicate with classification.
pub fn is_leak(candidate: &Process, tol: Tolerance) -> Result<LeakCertificate, PtError> {
    let residual = leak_residual(candidate)?;
    let bound = tol.abs_eps + tol.rel_eps * candidate.transfer().max_abs().max(1.0);
    if residual > bound {
        return Ok(LeakCertificate {
            is_leak: false,
            residual,
            kind: None,
        });
    }
    Ok(LeakCertificate {
        is_leak: true,
        residual,
        kind: Some(classify(candidate, tol)?),
    })
}

/// Classification order: broadcast, constant, canonical extraction, other.
fn classify(candidate: &Process, tol: Tolerance) -> Result<LeakKind, PtError> {
    let (a, l) = split_cod(candidate)?;
    if l == a && is_broadcast(candidate, tol)? {
        return Ok(LeakKind::Broadcast);
    }
    // Constant: candidate ≈ id_A ⊗ ρ with ρ recovered from the uniform
    // input state.
    let rho = compose_seq(&leaked_marginal(candidate)?, &uniform_state(&a))?;
    let constant = compose_par(&identity(&a), &rho);
    if process::process_approx_eq(&constant, candidate, tol) {
        return Ok(LeakKind::Constant(rho));
    }
    match a.factors() {
        [Atom::Classical(_)] if all_classical(&l) => {
            let (lmap, err) = classify_classical_leak(candidate, tol)?;
            let bound = tol.abs_eps + tol.rel_eps * candidate.transfer().max_abs().max(1.0);
            if err <= bound {
                return Ok(LeakKind::ClassicalCanonical(lmap));
            }
        }
        [Atom::Classical(_), Atom::Quantum(_)] => {
            if let Ok((lmap, err)) = classify_cq_leak(candidate, tol) {
                let bound = tol.abs_eps + tol.rel_eps * candidate.transfer().max_abs().max(1.0);
                if err <= bound {
                    return Ok(LeakKind::CqCanonical(lmap));
                }
            }
        }
        _ => {}
    }
    Ok(LeakKind::Other)
}

/// Consistency assertion for "all leaks are causal": requires the candidate
/// to pass the leak predicate, then reports its causality.
pub fn leaks_are_causal(candidate: &Process, tol: Tolerance) -> Result<bool, PtError> {
    let cert = is_leak(candidate, tol)?;
    if !cert.is_leak {
        return Err(PtError::NotLeak {
            residual: cert.residual,
        });
    }
    Ok(is_causal(candidate, tol))
}

/// Broadcasting: discarding is both a right and a left counit. Requires
/// `L = A`.
pub fn is_broadcast(candidate: &Process, tol: Tolerance) -> Result<bool, PtError> {
    let (a, l) = split_cod(candidate)?;
    if l != a {
        return Err(PtError::TypeMismatch(format!(
            "broadcast check requires L = A, got L = {l} and A = {a}"
        )));
    }
    let bound = tol.abs_eps + tol.rel_eps * candidate.transfer().max_abs().max(1.0);
    if leak_residual(candidate)? > bound {
        return Ok(false);
    }
    let left = compose_seq(&compose_par(&discard(&a), &identity(&a)), candidate)?;
    Ok(mat::max_abs_diff(left.transfer(), identity(&a).transfer())? <= bound)
}

/// Sequential composition of two leaks on the same system: nest the second
/// leak on the retained output, then reorder the leaked wires to `L₁ ⊗ L₂`.
pub fn compose_leaks_seq(a: &Process, b: &Process, tol: Tolerance) -> Result<Process, PtError> {
    for leak in [a, b] {
        let cert = is_leak(leak, tol)?;
        if !cert.is_leak {
            return Err(PtError::NotLeak {
                residual: cert.residual,
            });
        }
    }
    let (sys, l1) = split_cod(a)?;
    let (sys_b, l2) = split_cod(b)?;
    if sys != sys_b {
        return Err(PtError::TypeMismatch(format!(
            "leaks live on different systems: {sys} vs {sys_b}"
        )));
    }
    // (b ⊗ id_L1) ∘ a : A → A ⊗ L2 ⊗ L1, then swap the leak outputs.
    let nested = compose_seq(&compose_par(b, &identity(&l1)), a)?;
    let na = sys.factors().len();
    let n2 = l2.factors().len();
    let n1 = l1.factors().len();
    let mut perm: Vec<usize> = (0..na).collect();
    perm.extend(na + n2..na + n2 + n1);
    perm.extend(na..na + n2);
    compose_seq(&permute_atoms(nested.cod(), &perm)?, &nested)
}

/// Parallel composition of leaks on different systems, with the wire
/// permutation interleaving the retained and leaked outputs.
pub fn compose_leaks_par(a: &Process, b: &Process, tol: Tolerance) -> Result<Process, PtError> {
    for leak in [a, b] {
        let cert = is_leak(leak, tol)?;
        if !cert.is_leak {
            return Err(PtError::NotLeak {
                residual: cert.residual,
            });
        }
    }
    let (sys_a, la) = split_cod(a)?;
    let (sys_b, lb) = split_cod(b)?;
    let par = compose_par(a, b); // A⊗LA⊗B⊗LB -> reorder to A⊗B⊗LA⊗LB
    let (na, nla, nb, nlb) = (
        sys_a.factors().len(),
        la.factors().len(),
        sys_b.factors().len(),
        lb.factors().len(),
    );
    let mut perm: Vec<usize> = (0..na).collect();
    perm.extend(na + nla..na + nla + nb);
    perm.extend(na..na + nla);
    perm.extend(na + nla + nb..na + nla + nb + nlb);
    compose_seq(&permute_atoms(par.cod(), &perm)?, &par)
}

/// Build the canonical classical leak `(id ⊗ l) ∘ copy` from a causal
/// classical map `l : Classical(n) → L`.
pub fn build_classical_leak(l: &Process) -> Result<Process, PtError> {
    let n = match l.dom().factors() {
        [Atom::Classical(n)] => *n,
        _ => {
            return Err(PtError::TypeMismatch(
                "canonical classical leak needs l with a single classical input".into(),
            ))
        }
    };
    compose_seq(&compose_par(&identity(l.dom()), l), &broadcast(n))
}

/// Extract the canonical `l` from a classical leak and report the
/// reconstruction error of `(id ⊗ l) ∘ copy`.
///
/// The extraction contracts the leak against the cap, which picks the
/// diagonal slice of the leak tensor; the support condition
/// `Δ^{ij}_k = Δ^{ij}_k δ^i_k` is asserted alongside.
pub fn classify_classical_leak(
    leak: &Process,
    tol: Tolerance,
) -> Result<(Process, f64), PtError> {
    let (a, lsys) = split_cod(leak)?;
    let n = match a.factors() {
        [Atom::Classical(n)] if all_classical(&lsys) => *n,
        _ => {
            return Err(PtError::TypeMismatch(
                "classify_classical_leak requires a classical leak".into(),
            ))
        }
    };
    let cert_residual = leak_residual(leak)?;
    let bound = tol.abs_eps + tol.rel_eps * leak.transfer().max_abs().max(1.0);
    if cert_residual > bound {
        return Err(PtError::NotLeak {
            residual: cert_residual,
        });
    }
    let m = lsys.carrier_dim();
    // l[j, i] = Δ^{ij}_i : the diagonal-in-A slice of the leak tensor.
    let lmat = CMatrix::from_fn(m, n, |j, i| leak.transfer().get(i * m + j, i));
    let lmap = Process::new(a.clone(), lsys.clone(), lmat)?;
    // Support condition: off-diagonal-in-A entries vanish.
    let mut support_violation = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            for j in 0..m {
                support_violation = support_violation.max(leak.transfer().get(i * m + j, k).norm());
            }
        }
    }
    let rebuilt = build_classical_leak(&lmap)?;
    let recon = mat::max_abs_diff(rebuilt.transfer(), leak.transfer())?;
    Ok((lmap, recon.max(support_violation)))
}

/// Extract the canonical classical-input map `L : Classical(n) → L_sys` from
/// a leak on `Classical(n) ⊗ Quantum(d)`, asserting the canonical
/// reconstruction and that the induced quantum leak is constant.
pub fn classify_cq_leak(leak: &Process, tol: Tolerance) -> Result<(Process, f64), PtError> {
    let (a, lsys) = split_cod(leak)?;
    let (n, d) = match a.factors() {
        [Atom::Classical(n), Atom::Quantum(d)] => (*n, *d),
        _ => {
            return Err(PtError::TypeMismatch(
                "classify_cq_leak requires a Classical(n) ⊗ Quantum(d) leak".into(),
            ))
        }
    };
    let cert_residual = leak_residual(leak)?;
    let bound = tol.abs_eps + tol.rel_eps * leak.transfer().max_abs().max(1.0);
    if cert_residual > bound {
        return Err(PtError::NotLeak {
            residual: cert_residual,
        });
    }
    // Column i of L: feed |i⟩ ⊗ (maximally mixed) and discard the retained
    // output.
    let marg = leaked_marginal(leak)?;
    let ml = lsys.carrier_dim();
    let mut lcols = CMatrix::zeros(ml, n);
    for i in 0..n {
        let input = compose_par(&process::point_state(n, i), &process::maximally_mixed(d));
        let col = compose_seq(&marg, &input)?;
        for j in 0..ml {
            lcols[(j, i)] = col.transfer().get(j, 0);
        }
    }
    let lmap = Process::new(SystemType::classical(n), lsys.clone(), lcols)?;
    // Canonical form: copy the classical wire, keep the quantum wire, feed
    // the classical copy to L.
    let copy_q = compose_par(&broadcast(n), &identity(&SystemType::quantum(d)));
    let to_cql = permute_atoms(copy_q.cod(), &[0, 2, 1])?; // C⊗C⊗Q -> C⊗Q⊗C
    let canonical = compose_seq(
        &compose_par(&identity(&a), &lmap),
        &compose_seq(&to_cql, &copy_q)?,
    )?;
    let recon = mat::max_abs_diff(canonical.transfer(), leak.transfer())?;
    // Induced quantum leak: close the classical input with the uniform
    // state (the causal 1/D-normalized cup marginal) and bundle the
    // classical output into the leaked system; it must be a constant leak.
    let with_uniform = compose_seq(
        leak,
        &compose_par(
            &process::classical_state(&vec![1.0 / n as f64; n])?,
            &identity(&SystemType::quantum(d)),
        ),
    )?;
    let mut perm = vec![1usize, 0];
    perm.extend(2..with_uniform.cod().factors().len());
    let q_first = compose_seq(&permute_atoms(with_uniform.cod(), &perm)?, &with_uniform)?;
    let qcert = is_leak(&q_first, tol)?;
    let quantum_constant = qcert.is_leak && matches!(qcert.kind, Some(LeakKind::Constant(_)));
    let err = if quantum_constant {
        recon
    } else {
        recon.max(qcert.residual.max(1.0))
    };
    Ok((lmap, err))
}

/// Mixture of broadcasting and a constant leak with weights `c` and
/// `q = 1 − c`.
#[derive(Debug, Clone)]
pub struct MixedLeakParams {
    pub c: f64,
    pub state: Process,
}

impl MixedLeakParams {
    pub fn q(&self) -> f64 {
        1.0 - self.c
    }
}

/// Build `c · broadcast + (1−c) · (id ⊗ ρ)` on a classical atom.
pub fn mixed_leak(params: &MixedLeakParams) -> Result<Process, PtError> {
    let MixedLeakParams { c, state } = params;
    if !(0.0..=1.0).contains(c) {
        return Err(PtError::InvalidArgument(format!(
            "mixture weight c = {c} outside [0, 1]"
        )));
    }
    let n = match state.cod().factors() {
        [Atom::Classical(n)] => *n,
        _ => {
            return Err(PtError::TypeMismatch(
                "mixed leak needs a classical state".into(),
            ))
        }
    };
    let bcast = broadcast(n);
    let constant = compose_par(&identity(&SystemType::classical(n)), state);
    let transfer = mat::add(
        &mat::scale(Complex64::new(*c, 0.0), bcast.transfer()),
        &mat::scale(Complex64::new(1.0 - c, 0.0), constant.transfer()),
    )?;
    Process::new(bcast.dom().clone(), bcast.cod().clone(), transfer)
}

/// Constant leak `id_A ⊗ ρ`.
pub fn constant_leak(a: &SystemType, state: &Process) -> Process {
    compose_par(&identity(a), state)
}

/// Result of the quality computation.
#[derive(Debug, Clone)]
pub struct QualityReport {
    /// Max over causal restorations of the feedback-loop value.
    pub raw: f64,
    /// Loop value of the plain wire.
    pub circle: f64,
    /// `(raw − 1) / (circle − 1)`, or 0 when circle = 1.
    pub normalized: f64,
    pub optimal_restoration: Process,
}

/// Knobs for the quantum (projected-gradient-ascent) branch of the quality
/// search.
#[derive(Debug, Clone, Copy)]
pub struct QualityOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for QualityOptions {
    fn default() -> Self {
        QualityOptions {
            restarts: 5,
            iterations: 500,
            step: 0.1,
            seed: 0,
        }
    }
}

/// The feedback-loop value of a restoration `r : L → A` against a leak:
/// the trace of `r ∘ (discard(A) ⊗ id_L) ∘ leak`.
pub fn restoration_value(leak: &Process, r: &Process) -> Result<f64, PtError> {
    let marg = leaked_marginal(leak)?;
    let looped = compose_seq(r, &marg)?;
    Ok(looped.transfer().trace().re)
}

/// Quality of a leak on a single classical or quantum atom.
pub fn quality(
    leak: &Process,
    tol: Tolerance,
    opts: QualityOptions,
) -> Result<QualityReport, PtError> {
    let cert = is_leak(leak, tol)?;
    if !cert.is_leak {
        return Err(PtError::NotLeak {
            residual: cert.residual,
        });
    }
    let (a, lsys) = split_cod(leak)?;
    match a.factors() {
        [Atom::Classical(n)] if all_classical(&lsys) => quality_classical(leak, *n, &lsys),
        [Atom::Quantum(d)] => quality_quantum(leak, *d, &lsys, opts),
        _ => Err(PtError::InvalidArgument(format!(
            "quality supports single classical or quantum atoms, got {a} with leak system {lsys}"
        ))),
    }
}

/// Exact classical optimum: the objective `Σ_{i,j} r[i,j]·M[j,i]` is linear
/// over the stochastic polytope, so the maximum sits at a deterministic
/// restoration, found column by column.
fn quality_classical(
    leak: &Process,
    n: usize,
    lsys: &SystemType,
) -> Result<QualityReport, PtError> {
    let marg = leaked_marginal(leak)?;
    let m = lsys.carrier_dim();
    let mut raw = 0.0;
    let mut r = CMatrix::zeros(n, m);
    for j in 0..m {
        let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
        for i in 0..n {
            let v = marg.transfer().get(j, i).re;
            if v > best {
                best = v;
                best_i = i;
            }
        }
        raw += best;
        r[(best_i, j)] = Complex64::new(1.0, 0.0);
    }
    let restoration = Process::new(lsys.clone(), SystemType::classical(n), r)?;
    let circle = n as f64;
    let normalized = if (circle - 1.0).abs() < f64::EPSILON {
        0.0
    } else {
        (raw - 1.0) / (circle - 1.0)
    };
    Ok(QualityReport {
        raw,
        circle,
        normalized,
        optimal_restoration: restoration,
    })
}

/// Quantum branch: projected gradient ascent over the Choi matrix of the
/// restoration channel, alternating PSD and trace-preserving projections.
fn quality_quantum(
    leak: &Process,
    da: usize,
    lsys: &SystemType,
    opts: QualityOptions,
) -> Result<QualityReport, PtError> {
    use rand::Rng;
    use rand::SeedableRng;

    let dl = match lsys.factors() {
        [Atom::Quantum(d)] => *d,
        _ => {
            return Err(PtError::InvalidArgument(format!(
                "quantum quality needs a single quantum leak system, got {lsys}"
            )))
        }
    };
    let tol = Tolerance::default();
    let marg = leaked_marginal(leak)?; // A -> L, (dl²) x (da²)
    // Objective on the Choi of r: J(C) = Σ A[x,y]·C[x,y] with
    // A[(i,k),(j,l)] = M[(i,j),(k,l)], i,j over L kets, k,l over A kets.
    let dim = dl * da;
    let a_mat = CMatrix::from_fn(dim, dim, |x, y| {
        let (i, k) = (x / da, x % da);
        let (j, l) = (y / da, y % da);
        marg.transfer().get(i * dl + j, k * da + l)
    });
    let grad = CMatrix::from_fn(dim, dim, |x, y| {
        (a_mat.get(x, y).conj() + a_mat.get(y, x)) * 0.5
    });
    let objective = |c: &CMatrix| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..dim {
            for y in 0..dim {
                acc += a_mat.get(x, y) * c.get(x, y);
            }
        }
        acc.re
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_val = f64::NEG_INFINITY;
    let mut best_choi: Option<CMatrix> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut choi = if restart == 0 {
            // Start from the fully depolarising restoration.
            CMatrix::from_fn(dim, dim, |x, y| {
                let (i, k) = (x / da, x % da);
                let (j, l) = (y / da, y % da);
                if i == j && k == l {
                    Complex64::new(1.0 / da as f64, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        } else {
            let g = CMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let psd = mat::matmul(&g, &g.conj_transpose())?;
            project_cptp_choi(&psd, dl, da, tol)?
        };
        let mut prev = objective(&choi);
        for _ in 0..opts.iterations {
            let stepped = mat::add(&choi, &mat::scale(Complex64::new(opts.step, 0.0), &grad))?;
            choi = project_cptp_choi(&stepped, dl, da, tol)?;
            let val = objective(&choi);
            if (val - prev).abs() < 1e-13 {
                break;
            }
            prev = val;
        }
        let val = objective(&choi);
        if val > best_val {
            best_val = val;
            best_choi = Some(choi);
        }
    }
    let choi = best_choi.expect("at least one restart");
    // Back to a transfer matrix: R[(k,l),(i,j)] = C[(i,k),(j,l)].
    let r_transfer = CMatrix::from_fn(da * da, dl * dl, |row, col| {
        let (k, l) = (row / da, row % da);
        let (i, j) = (col / dl, col % dl);
        choi.get(i * da + k, j * da + l)
    });
    let restoration = Process::new(lsys.clone(), SystemType::quantum(da), r_transfer)?;
    let raw = best_val;
    let circle = (da * da) as f64;
    let normalized = if (circle - 1.0).abs() < f64::EPSILON {
        0.0
    } else {
        (raw - 1.0) / (circle - 1.0)
    };
    Ok(QualityReport {
        raw,
        circle,
        normalized,
        optimal_restoration: restoration,
    })
}

/// Project a Hermitian matrix onto the CPTP Choi set (PSD with
/// `Tr_out C = I_in`) by alternating projections.
fn project_cptp_choi(
    c: &CMatrix,
    d_in: usize,
    d_out: usize,
    tol: Tolerance,
) -> Result<CMatrix, PtError> {
    let dim = d_in * d_out;
    let mut m = CMatrix::from_fn(dim, dim, |x, y| (c.get(x, y) + c.get(y, x).conj()) * 0.5);
    for _ in 0..200 {
        // PSD projection: clip negative eigenvalues.
        let (vals, vecs) = mat::eig_hermitian(&m, tol)?;
        let mut psd = CMatrix::zeros(dim, dim);
        for (idx, &lam) in vals.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            for x in 0..dim {
                let vx = vecs.get(x, idx) * lam;
                for y in 0..dim {
                    psd[(x, y)] += vx * vecs.get(y, idx).conj();
                }
            }
        }
        // TP projection: shift the output-traced part back to the identity.
        let mut partial = CMatrix::zeros(d_in, d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                for k in 0..d_out {
                    partial[(i, j)] += psd.get(i * d_out + k, j * d_out + k);
                }
            }
        }
        let mut tp_residual = 0.0f64;
        for i in 0..d_in {
            for j in 0..d_in {
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                tp_residual = tp_residual.max((partial.get(i, j) - target).norm());
            }
        }
        let min_eig = vals.iter().cloned().fold(0.0f64, f64::min);
        if tp_residual < 1e-12 && min_eig > -1e-12 {
            return Ok(psd);
        }
        let correction = 1.0 / d_out as f64;
        m = CMatrix::from_fn(dim, dim, |x, y| {
            let (i, k) = (x / d_out, x % d_out);
            let (j, l) = (y / d_out, y % d_out);
            let mut v = psd.get(x, y);
            if k == l {
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                v -= (partial.get(i, j) - target) * correction;
            }
            v
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{dephasing_copy, process_approx_eq, spider};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn stochastic(rows: usize, cols: usize, seed: &mut u64) -> CMatrix {
        let mut next = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 33) as f64 / (1u64 << 32) as f64) + 0.25
        };
        let mut m = CMatrix::zeros(rows, cols);
        for j in 0..cols {
            let col: Vec<f64> = (0..rows).map(|_| next()).collect();
            let total: f64 = col.iter().sum();
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = Complex64::new(v / total, 0.0);
            }
        }
        m
    }

    #[test]
    fn broadcasting_is_a_broadcast_leak() {
        for n in 2..=4 {
            let cert = is_leak(&broadcast(n), tol()).unwrap();
            assert!(cert.is_leak);
            assert!(matches!(cert.kind, Some(LeakKind::Broadcast)));
        }
    }

    #[test]
    fn constant_leak_detected() {
        let rho = process::classical_state(&[0.2, 0.8]).unwrap();
        let leak = constant_leak(&SystemType::classical(3), &rho);
        let cert = is_leak(&leak, tol()).unwrap();
        assert!(cert.is_leak);
        assert!(matches!(cert.kind, Some(LeakKind::Constant(_))));
        assert!(leaks_are_causal(&leak, tol()).unwrap());
    }

    #[test]
    fn quantum_dephasing_copy_is_only_a_pre_leak() {
        let cert = is_leak(&dephasing_copy(2), tol()).unwrap();
        assert!(!cert.is_leak);
        assert!(cert.residual >= 0.5);
    }

    #[test]
    fn non_causal_constant_fails_both_checks() {
        // A trace-2 state: the leak equation itself picks up the factor 2,
        // so neither the leak predicate nor causality survives.
        let rho = process::classical_state(&[1.5, 0.5]).unwrap();
        let leak = constant_leak(&SystemType::classical(2), &rho);
        let cert = is_leak(&leak, tol()).unwrap();
        assert!(!cert.is_leak);
        assert!(!is_causal(&leak, tol()));
    }

    #[test]
    fn leaks_compose_sequentially_to_triple_copy() {
        let b = broadcast(2);
        let seq = compose_leaks_seq(&b, &b, tol()).unwrap();
        assert!(is_leak(&seq, tol()).unwrap().is_leak);
        assert!(process_approx_eq(&seq, &spider(2, 1, 3).unwrap(), tol()));
    }

    #[test]
    fn constant_leaks_compose_in_parallel() {
        let rho = process::classical_state(&[0.3, 0.7]).unwrap();
        let sigma = process::classical_state(&[0.5, 0.5]).unwrap();
        let a = constant_leak(&SystemType::classical(2), &rho);
        let b = constant_leak(&SystemType::classical(2), &sigma);
        let par = compose_leaks_par(&a, &b, tol()).unwrap();
        let cert = is_leak(&par, tol()).unwrap();
        assert!(cert.is_leak);
        assert!(matches!(cert.kind, Some(LeakKind::Constant(_))));
    }

    #[test]
    fn broadcast_then_constant_is_still_a_leak() {
        let rho = process::classical_state(&[0.4, 0.6]).unwrap();
        let b = broadcast(2);
        let cst = constant_leak(&SystemType::classical(2), &rho);
        let seq = compose_leaks_seq(&b, &cst, tol()).unwrap();
        assert!(is_leak(&seq, tol()).unwrap().is_leak);
    }

    #[test]
    fn is_broadcast_rejects_constants() {
        let rho = process::classical_state(&[0.2, 0.8]).unwrap();
        let leak = constant_leak(&SystemType::classical(2), &rho);
        assert!(!is_broadcast(&leak, tol()).unwrap());
        assert!(is_broadcast(&broadcast(3), tol()).unwrap());
    }

    #[test]
    fn classical_canonical_round_trip() {
        let mut seed = 31;
        for _ in 0..20 {
            let lmat = stochastic(3, 2, &mut seed);
            let l = Process::new(
                SystemType::classical(2),
                SystemType::classical(3),
                lmat.clone(),
            )
            .unwrap();
            let leak = build_classical_leak(&l).unwrap();
            let (extracted, err) = classify_classical_leak(&leak, tol()).unwrap();
            assert!(err < 1e-12);
            assert!(mat::max_abs_diff(extracted.transfer(), &lmat).unwrap() < 1e-12);
        }
    }

    #[test]
    fn classical_canonical_special_cases() {
        let (l, err) = classify_classical_leak(&broadcast(3), tol()).unwrap();
        assert!(err < 1e-12);
        assert!(process_approx_eq(
            &l,
            &identity(&SystemType::classical(3)),
            tol()
        ));
        let rho = process::classical_state(&[0.1, 0.9]).unwrap();
        let leak = constant_leak(&SystemType::classical(2), &rho);
        let (l, err) = classify_classical_leak(&leak, tol()).unwrap();
        assert!(err < 1e-12);
        let const_map = compose_seq(&rho, &discard(&SystemType::classical(2))).unwrap();
        assert!(process_approx_eq(&l, &const_map, tol()));
    }

    #[test]
    fn cq_canonical_round_trip() {
        let rho = process::maximally_mixed(2);
        // L pairs a classical copy with a quantum constant.
        let lmat = CMatrix::from_fn(3 * 4, 3, |row, col| {
            let (c, qv) = (row / 4, row % 4);
            if c == col {
                rho.transfer().get(qv, 0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let lsys = SystemType::from_atoms(vec![Atom::Classical(3), Atom::Quantum(2)]);
        let lmap = Process::new(SystemType::classical(3), lsys, lmat).unwrap();
        // Build the canonical CQ leak from it.
        let a = SystemType::from_atoms(vec![Atom::Classical(3), Atom::Quantum(2)]);
        let copy_q = compose_par(&broadcast(3), &identity(&SystemType::quantum(2)));
        let to_cql = permute_atoms(copy_q.cod(), &[0, 2, 1]).unwrap();
        let leak = compose_seq(
            &compose_par(&identity(&a), &lmap),
            &compose_seq(&to_cql, &copy_q).unwrap(),
        )
        .unwrap();
        let cert = is_leak(&leak, tol()).unwrap();
        assert!(cert.is_leak);
        let (extracted, err) = classify_cq_leak(&leak, tol()).unwrap();
        assert!(err < 1e-9, "err = {err}");
        assert!(mat::max_abs_diff(extracted.transfer(), lmap.transfer()).unwrap() < 1e-9);
    }

    #[test]
    fn quality_broadcasting_and_constant() {
        for n in 2..=4 {
            let q = quality(&broadcast(n), tol(), QualityOptions::default()).unwrap();
            assert!((q.raw - n as f64).abs() < 1e-12);
            assert!((q.normalized - 1.0).abs() < 1e-12);
        }
        let rho = process::classical_state(&[0.3, 0.7]).unwrap();
        let leak = constant_leak(&SystemType::classical(2), &rho);
        let q = quality(&leak, tol(), QualityOptions::default()).unwrap();
        assert!((q.raw - 1.0).abs() < 1e-12);
        assert!(q.normalized.abs() < 1e-12);
    }

    #[test]
    fn quality_matches_column_max_formula() {
        let lmat = CMatrix::from_real(2, 2, &[0.6, 0.3, 0.4, 0.7]).unwrap();
        let l = Process::new(SystemType::classical(2), SystemType::classical(2), lmat).unwrap();
        let leak = build_classical_leak(&l).unwrap();
        let q = quality(&leak, tol(), QualityOptions::default()).unwrap();
        assert!((q.raw - 1.3).abs() < 1e-12);
        assert!((q.normalized - 0.3).abs() < 1e-12);
        // Brute force over all deterministic restorations.
        let mut best = f64::NEG_INFINITY;
        for r0 in 0..2 {
            for r1 in 0..2 {
                let mut r = CMatrix::zeros(2, 2);
                r[(r0, 0)] = Complex64::new(1.0, 0.0);
                r[(r1, 1)] = Complex64::new(1.0, 0.0);
                let rp = Process::new(
                    SystemType::classical(2),
                    SystemType::classical(2),
                    r,
                )
                .unwrap();
                best = best.max(restoration_value(&leak, &rp).unwrap());
            }
        }
        assert!((q.raw - best).abs() < 1e-12);
    }

    #[test]
    fn quality_mixture_is_the_mixing_weight() {
        let rho = process::classical_state(&[0.25; 4]).unwrap();
        let leak = mixed_leak(&MixedLeakParams { c: 0.3, state: rho }).unwrap();
        let q = quality(&leak, tol(), QualityOptions::default()).unwrap();
        assert!((q.normalized - 0.3).abs() < 1e-12);
    }

    #[test]
    fn quality_mixture_monotone_in_c() {
        let rho = process::classical_state(&[0.5, 0.3, 0.2]).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for step in 0..=10 {
            let c = step as f64 / 10.0;
            let leak = mixed_leak(&MixedLeakParams {
                c,
                state: rho.clone(),
            })
            .unwrap();
            let q = quality(&leak, tol(), QualityOptions::default()).unwrap();
            assert!(q.normalized > prev - 1e-12);
            assert!((q.normalized - c).abs() < 1e-9);
            prev = q.normalized;
        }
    }

    #[test]
    fn quantum_constant_leak_quality_is_zero() {
        let rho = process::quantum_state(&CMatrix::from_real(2, 2, &[0.7, 0.0, 0.0, 0.3]).unwrap())
            .unwrap();
        let leak = constant_leak(&SystemType::quantum(2), &rho);
        let opts = QualityOptions {
            restarts: 2,
            ..QualityOptions::default()
        };
        let q = quality(&leak, tol(), opts).unwrap();
        assert!((q.raw - 1.0).abs() < 1e-6, "raw = {}", q.raw);
        assert!(q.normalized.abs() < 1e-6);
    }

    #[test]
    fn restoration_value_never_exceeds_raw() {
        let lmat = CMatrix::from_real(2, 2, &[0.6, 0.3, 0.4, 0.7]).unwrap();
        let l = Process::new(SystemType::classical(2), SystemType::classical(2), lmat).unwrap();
        let leak = build_classical_leak(&l).unwrap();
        let q = quality(&leak, tol(), QualityOptions::default()).unwrap();
        let mut seed = 77;
        for _ in 0..25 {
            let r = stochastic(2, 2, &mut seed);
            let rp =
                Process::new(SystemType::classical(2), SystemType::classical(2), r).unwrap();
            assert!(restoration_value(&leak, &rp).unwrap() <= q.raw + 1e-12);
        }
    }
}
