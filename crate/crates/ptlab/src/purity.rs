//! Leak-aware purity: a process is pure when every dilation separates and
//! leaking before or after it is equivalent.
//!
//! The decision procedures use the proved canonical characterizations:
//! Kraus rank 1 for quantum channels; at most one nonzero per row and per
//! column for classical maps (a dot pattern weighted by a state); the same
//! pattern over classical indices with rank-1 quantum blocks for
//! classical-quantum maps. The definitional feasibility conditions are kept
//! as small-dimension oracles: an explicit dilation witness for any
//! classical process, and exact feasibility of the leak-commutation
//! condition over deterministic generators.

use num_complex::Complex64;

use crate::error::PtError;
use crate::mat::{self, CMatrix, Tolerance};
use crate::process::{
    self, broadcast, classical_dims, classical_index_space, choi_of_block, compose_par,
    compose_seq, copy, identity, quantum_block, quantum_dims, Atom, Process, SystemType,
};

/// Pattern and weights of a pure classical map: `f[k, i] = r[k]` when
/// `pattern[k] == Some(i)`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPureForm {
    /// For each output row, the input column it is wired to, if any.
    pub pattern: Vec<Option<usize>>,
    /// Per-row weight (the state `r` in the canonical decomposition).
    pub weights: Vec<f64>,
}

/// Per-block summary for a classical-quantum purity check.
#[derive(Debug, Clone, PartialEq)]
pub struct CqBlockInfo {
    pub classical_out: usize,
    pub classical_in: usize,
    pub kraus_rank: usize,
}

/// Outcome of a purity check, with whichever canonical data applies.
#[derive(Debug, Clone, Default)]
pub struct PurityVerdict {
    pub pure: bool,
    pub classical_form: Option<ClassicalPureForm>,
    pub quantum_kraus_rank: Option<usize>,
    pub cq_blocks: Option<Vec<CqBlockInfo>>,
    pub violation: Option<String>,
}

impl PurityVerdict {
    fn impure(reason: String) -> Self {
        PurityVerdict {
            pure: false,
            violation: Some(reason),
            ..PurityVerdict::default()
        }
    }
}

fn support_bound(f: &Process, tol: Tolerance) -> f64 {
    tol.abs_eps + tol.rel_eps * f.transfer().max_abs().max(1.0)
}

/// Kraus rank of a purely quantum channel (count of Choi eigenvalues above
/// tolerance relative to the largest).
pub fn kraus_rank(f: &Process, tol: Tolerance) -> Result<usize, PtError> {
    let choi = process::choi_matrix(f)?;
    let (vals, _) = mat::eig_hermitian(&choi, tol)?;
    let largest = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cut = tol.abs_eps + tol.rel_eps.max(1e-9) * largest;
    Ok(vals.iter().filter(|&&v| v > cut).count())
}

/// Purity of a quantum channel: Kraus rank 1.
pub fn is_pure_quantum(f: &Process, tol: Tolerance) -> Result<PurityVerdict, PtError> {
    if !process::is_cp(f, tol) {
        return Err(PtError::NotCompletelyPositive);
    }
    let rank = kraus_rank(f, tol)?;
    Ok(PurityVerdict {
        pure: rank <= 1,
        quantum_kraus_rank: Some(rank),
        violation: (rank > 1).then(|| format!("Kraus rank {rank} exceeds 1")),
        ..PurityVerdict::default()
    })
}

/// Purity of a classical map: at most one nonzero per row and per column.
/// A pure map is a dot pattern scaled row-wise by a state.
pub fn is_pure_classical(f: &Process, tol: Tolerance) -> Result<PurityVerdict, PtError> {
    require_classical(f)?;
    let bound = support_bound(f, tol);
    let t = f.transfer();
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            let z = t.get(r, c);
            if z.re < -bound || z.im.abs() > bound {
                return Err(PtError::InvalidArgument(
                    "classical purity requires nonnegative entries".into(),
                ));
            }
        }
    }
    let mut pattern = vec![None; t.rows()];
    let mut weights = vec![0.0; t.rows()];
    let mut col_used = vec![false; t.cols()];
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            let v = t.get(r, c).re;
            if v <= bound {
                continue;
            }
            if pattern[r].is_some() {
                return Ok(PurityVerdict::impure(format!(
                    "row {r} has more than one nonzero entry"
                )));
            }
            if col_used[c] {
                return Ok(PurityVerdict::impure(format!(
                    "column {c} has more than one nonzero entry"
                )));
            }
            pattern[r] = Some(c);
            col_used[c] = true;
            weights[r] = v;
        }
    }
    Ok(PurityVerdict {
        pure: true,
        classical_form: Some(ClassicalPureForm { pattern, weights }),
        ..PurityVerdict::default()
    })
}

/// Rebuild a classical map from its pure canonical data (merge of a dot
/// pattern with a row-weight state). Inverse of the pure branch of
/// [`is_pure_classical`].
pub fn classical_pure_reconstruction(
    form: &ClassicalPureForm,
    dom: &SystemType,
    cod: &SystemType,
) -> Result<Process, PtError> {
    let rows = cod.carrier_dim();
    let cols = dom.carrier_dim();
    if form.pattern.len() != rows || form.weights.len() != rows {
        return Err(PtError::ShapeMismatch {
            context: "classical_pure_reconstruction",
            expected: format!("{rows} pattern rows"),
            found: format!("{}", form.pattern.len()),
        });
    }
    let mut t = CMatrix::zeros(rows, cols);
    for (r, slot) in form.pattern.iter().enumerate() {
        if let Some(c) = slot {
            t[(r, *c)] = Complex64::new(form.weights[r], 0.0);
        }
    }
    Process::new(dom.clone(), cod.clone(), t)
}

/// Extend a classical map whose columns each sum to 0 or 1 to a causal one
/// by sending the kernel columns to the uniform state.
pub fn causal_extension(l: &Process, tol: Tolerance) -> Result<Process, PtError> {
    require_classical(l)?;
    let bound = support_bound(l, tol);
    let t = l.transfer();
    let mut ext = t.clone();
    for c in 0..t.cols() {
        let sum: f64 = (0..t.rows()).map(|r| t.get(r, c).re).sum();
        if (sum - 1.0).abs() <= bound {
            continue;
        }
        if sum.abs() <= bound {
            for r in 0..t.rows() {
                ext[(r, c)] = Complex64::new(1.0 / t.rows() as f64, 0.0);
            }
        } else {
            return Err(PtError::InvalidArgument(format!(
                "column {c} sums to {sum}; causal extension needs sums of 0 or 1"
            )));
        }
    }
    Process::new(l.dom().clone(), l.cod().clone(), ext)
}

/// A stochastic left inverse of a causal classical map, when one exists.
/// Feasible exactly when the columns of `f` have pairwise disjoint
/// supports.
pub fn stochastic_left_inverse(f: &Process, tol: Tolerance) -> Result<Option<Process>, PtError> {
    require_classical(f)?;
    let bound = support_bound(f, tol);
    let t = f.transfer();
    let mut owner: Vec<Option<usize>> = vec![None; t.rows()];
    for c in 0..t.cols() {
        for r in 0..t.rows() {
            if t.get(r, c).re <= bound {
                continue;
            }
            match owner[r] {
                None => owner[r] = Some(c),
                Some(prev) if prev == c => {}
                Some(_) => return Ok(None),
            }
        }
    }
    let mut l = CMatrix::zeros(t.cols(), t.rows());
    for (r, slot) in owner.iter().enumerate() {
        l[(slot.unwrap_or(0), r)] = Complex64::new(1.0, 0.0);
    }
    let inv = Process::new(f.cod().clone(), f.dom().clone(), l)?;
    let check = compose_seq(&inv, f)?;
    let id = identity(f.dom());
    if mat::max_abs_diff(check.transfer(), id.transfer())? > 10.0 * bound {
        return Err(PtError::ReconstructionFailed {
            residual: mat::max_abs_diff(check.transfer(), id.transfer())?,
        });
    }
    Ok(Some(inv))
}

/// Purity of a causal classical map: an injective 0/1 function.
///
/// A stochastic left inverse is computed alongside; purity implies its
/// existence, but not conversely (disjoint column supports suffice for an
/// inverse without the pattern being deterministic).
pub fn is_pure_causal_classical(f: &Process, tol: Tolerance) -> Result<bool, PtError> {
    require_classical(f)?;
    let residual = process::causality_residual(f);
    let bound = support_bound(f, tol);
    if residual > bound {
        return Err(PtError::NotCausal { residual });
    }
    let t = f.transfer();
    let mut deterministic_injective = true;
    let mut row_used = vec![false; t.rows()];
    'cols: for c in 0..t.cols() {
        for r in 0..t.rows() {
            let v = t.get(r, c).re;
            if v <= bound {
                continue;
            }
            if (v - 1.0).abs() > bound || row_used[r] {
                deterministic_injective = false;
                break 'cols;
            }
            row_used[r] = true;
        }
    }
    let inverse = stochastic_left_inverse(f, tol)?;
    if deterministic_injective {
        debug_assert!(inverse.is_some());
        let pattern = is_pure_classical(f, tol)?;
        debug_assert!(pattern.pure);
    }
    Ok(deterministic_injective)
}

/// Purity of a classical-quantum map: the classical support pattern is a
/// partial injection and every nonzero block has Kraus rank 1.
///
/// Purely classical and purely quantum maps are the degenerate cases with
/// scalar blocks and a single block respectively. For pure maps between a
/// purely classical and a purely quantum system the single nonzero block
/// makes the map separable; the product-form residual is checked.
pub fn is_pure_cq(f: &Process, tol: Tolerance) -> Result<PurityVerdict, PtError> {
    if !process::is_cp(f, tol) {
        return Err(PtError::NotCompletelyPositive);
    }
    let qdims_in = quantum_dims(f.dom());
    let qdims_out = quantum_dims(f.cod());
    let cin_space = classical_index_space(f.dom());
    let cout_space = classical_index_space(f.cod());
    let bound = support_bound(f, tol);
    let mut blocks = Vec::new();
    let mut row_used = vec![false; cout_space.len()];
    let mut col_used = vec![false; cin_space.len()];
    for (jo, cout) in cout_space.iter().enumerate() {
        for (ji, cin) in cin_space.iter().enumerate() {
            let block = quantum_block(f, cout, cin);
            if block.max_abs() <= bound {
                continue;
            }
            let rank = if qdims_in.is_empty() && qdims_out.is_empty() {
                1
            } else {
                let choi = choi_of_block(&block, &qdims_in, &qdims_out);
                let (vals, _) = mat::eig_hermitian(&choi, tol)?;
                let largest = vals.first().copied().unwrap_or(0.0).max(0.0);
                let cut = tol.abs_eps + tol.rel_eps.max(1e-9) * largest;
                vals.iter().filter(|&&v| v > cut).count()
            };
            if rank > 1 {
                return Ok(PurityVerdict {
                    cq_blocks: Some(blocks),
                    ..PurityVerdict::impure(format!(
                        "block ({jo}, {ji}) has Kraus rank {rank}"
                    ))
                });
            }
            if row_used[jo] || col_used[ji] {
                return Ok(PurityVerdict {
                    cq_blocks: Some(blocks),
                    ..PurityVerdict::impure(format!(
                        "classical support pattern is not a partial injection at ({jo}, {ji})"
                    ))
                });
            }
            row_used[jo] = true;
            col_used[ji] = true;
            blocks.push(CqBlockInfo {
                classical_out: jo,
                classical_in: ji,
                kraus_rank: rank,
            });
        }
    }
    let crosses = (classical_dims(f.dom()).is_empty() && qdims_out.is_empty())
        || (qdims_in.is_empty() && classical_dims(f.cod()).is_empty());
    if crosses && blocks.len() > 1 {
        return Ok(PurityVerdict {
            cq_blocks: Some(blocks),
            ..PurityVerdict::impure(
                "pure maps across the classical/quantum divide have a single block".into(),
            )
        });
    }
    Ok(PurityVerdict {
        pure: true,
        cq_blocks: Some(blocks),
        ..PurityVerdict::default()
    })
}

/// Explicit dilation witness for a classical process (the dilation factors
/// through a conditional state of the environment).
#[derive(Debug, Clone)]
pub struct DilationWitness {
    /// The dilation `F : A → B ⊗ E`.
    pub dilation: Process,
    /// The witness `l : B ⊗ A → E` with
    /// `F = (id ⊗ l) ∘ (copy ⊗ id) ∘ (f ⊗ id) ∘ copy`.
    pub witness: Process,
    /// Max-abs residual of the reconstruction.
    pub residual: f64,
}

/// Build the witness showing that any classical dilation separates through
/// a conditional environment state: `l[j, (k, i)] = F[(k, j), i] / f[k, i]`
/// where defined, a point mass elsewhere.
pub fn classical_dilation_witness(
    f: &Process,
    dilation: &Process,
    tol: Tolerance,
) -> Result<DilationWitness, PtError> {
    require_classical(f)?;
    require_classical(dilation)?;
    if dilation.dom() != f.dom() {
        return Err(PtError::TypeMismatch(
            "dilation must share the domain of f".into(),
        ));
    }
    let b_atoms = f.cod().factors().len();
    let cod = dilation.cod();
    if cod.factors().len() <= b_atoms || &cod.slice(0..b_atoms) != f.cod() {
        return Err(PtError::TypeMismatch(
            "dilation codomain must extend the codomain of f".into(),
        ));
    }
    let env = cod.slice(b_atoms..cod.factors().len());
    let marginal = compose_seq(
        &compose_par(&identity(f.cod()), &process::discard(&env)),
        dilation,
    )?;
    let marg_residual = mat::max_abs_diff(marginal.transfer(), f.transfer())?;
    let bound = support_bound(f, tol);
    if marg_residual > bound {
        return Err(PtError::NotMember {
            residual: marg_residual,
        });
    }
    let nb = f.cod().carrier_dim();
    let na = f.dom().carrier_dim();
    let ne = env.carrier_dim();
    let mut l = CMatrix::zeros(ne, nb * na);
    for k in 0..nb {
        for i in 0..na {
            let fv = f.transfer().get(k, i).re;
            if fv > bound {
                for j in 0..ne {
                    l[(j, k * na + i)] = Complex64::new(
                        dilation.transfer().get(k * ne + j, i).re / fv,
                        0.0,
                    );
                }
            } else {
                l[(0, k * na + i)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    let witness = Process::new(f.cod().tensor(f.dom()), env.clone(), l)?;
    if !process::is_causal(&witness, tol) {
        return Err(PtError::NotCausal {
            residual: process::causality_residual(&witness),
        });
    }
    // F = (id_B ⊗ l) ∘ (copy_B ⊗ id_A) ∘ (f ⊗ id_A) ∘ copy_A.
    let reconstructed = compose_seq(
        &compose_par(&identity(f.cod()), &witness),
        &compose_seq(
            &compose_par(&classical_copy(f.cod())?, &identity(f.dom())),
            &compose_seq(
                &compose_par(f, &identity(f.dom())),
                &classical_copy(f.dom())?,
            )?,
        )?,
    )?;
    let residual = mat::max_abs_diff(reconstructed.transfer(), dilation.transfer())?;
    if residual > 10.0 * bound {
        return Err(PtError::ReconstructionFailed { residual });
    }
    Ok(DilationWitness {
        dilation: dilation.clone(),
        witness,
        residual,
    })
}

fn classical_copy(ty: &SystemType) -> Result<Process, PtError> {
    let n = ty.carrier_dim();
    let raw = copy(n);
    let cod = ty.tensor(ty);
    // The copy built on a single n-state atom has the right matrix for any
    // classical composite of total dimension n; retype it.
    Process::new(ty.clone(), cod, raw.transfer().clone())
}

fn require_classical(f: &Process) -> Result<(), PtError> {
    let all_classical = f
        .dom()
        .factors()
        .iter()
        .chain(f.cod().factors())
        .all(|a| matches!(a, Atom::Classical(_)));
    if all_classical {
        Ok(())
    } else {
        Err(PtError::InvalidArgument(
            "operation is defined for classical processes only".into(),
        ))
    }
}

/// A failing instance of the leak-commutation condition.
#[derive(Debug, Clone)]
pub struct LeakCommutationCounterexample {
    /// Which side the generating leak was applied to.
    pub leak_on_output: bool,
    /// The deterministic generator (`l` on the domain or `j` on the
    /// codomain) for which no matching other-side leak exists.
    pub generator: Process,
}

const DESK_SCALE_CAP: usize = 4;

/// Check that leaking before or after `f` is equivalent: for every
/// deterministic domain-side `l` there is a causal codomain-side `j` with
/// `(id ⊗ j) ∘ copy ∘ f = (f ⊗ id) ∘ (id ⊗ l) ∘ copy`, and vice versa.
/// Deterministic generators suffice: the constraint is linear in the
/// quantified leak, so mixtures of feasible instances stay feasible.
pub fn check_leak_commutation(
    f: &Process,
    tol: Tolerance,
) -> Result<(bool, Option<LeakCommutationCounterexample>), PtError> {
    require_classical(f)?;
    let n = f.dom().carrier_dim();
    let m = f.cod().carrier_dim();
    if n > DESK_SCALE_CAP || m > DESK_SCALE_CAP {
        return Err(PtError::DimensionCap(n.max(m)));
    }
    let bound = support_bound(f, tol);
    let t = f.transfer();
    // Feasibility for a fixed deterministic generator reduces to: every
    // row support (domain-side generator) or column support (codomain
    // side) must be mapped to a single outcome.
    for gen in deterministic_maps(n, n.max(2)) {
        let mut ok = true;
        for k in 0..m {
            let outcomes: Vec<usize> = (0..n)
                .filter(|&i| t.get(k, i).re > bound)
                .map(|i| gen[i])
                .collect();
            if outcomes.windows(2).any(|w| w[0] != w[1]) {
                ok = false;
                break;
            }
        }
        if !ok {
            return Ok((
                false,
                Some(LeakCommutationCounterexample {
                    leak_on_output: false,
                    generator: deterministic_process(f.dom(), n.max(2), &gen)?,
                }),
            ));
        }
    }
    for gen in deterministic_maps(m, m.max(2)) {
        let mut ok = true;
        for i in 0..n {
            let outcomes: Vec<usize> = (0..m)
                .filter(|&k| t.get(k, i).re > bound)
                .map(|k| gen[k])
                .collect();
            if outcomes.windows(2).any(|w| w[0] != w[1]) {
                ok = false;
                break;
            }
        }
        if !ok {
            return Ok((
                false,
                Some(LeakCommutationCounterexample {
                    leak_on_output: true,
                    generator: deterministic_process(f.cod(), m.max(2), &gen)?,
                }),
            ));
        }
    }
    Ok((true, None))
}

fn deterministic_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut maps = vec![vec![]];
    for _ in 0..n {
        maps = maps
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..m).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    maps
}

fn deterministic_process(dom: &SystemType, m: usize, gen: &[usize]) -> Result<Process, PtError> {
    let mut t = CMatrix::zeros(m, gen.len());
    for (i, &v) in gen.iter().enumerate() {
        t[(v, i)] = Complex64::new(1.0, 0.0);
    }
    Process::new(dom.clone(), SystemType::classical(m), t)
}

/// Smallest max-abs distance between broadcasting on `Classical(n)` and a
/// constant leak `id ⊗ ρ`, minimized over a simplex grid of causal states
/// with `steps` subdivisions per coordinate.
pub fn identity_impurity_gap(n: usize, steps: usize) -> Result<f64, PtError> {
    if n == 0 || steps == 0 {
        return Err(PtError::InvalidArgument(
            "identity_impurity_gap needs n ≥ 1 and steps ≥ 1".into(),
        ));
    }
    let bcast = broadcast(n);
    let a = SystemType::classical(n);
    let mut best = f64::INFINITY;
    for weights in simplex_grid(n, steps) {
        let rho = process::classical_state(&weights)?;
        let constant = compose_par(&identity(&a), &rho);
        let d = mat::max_abs_diff(bcast.transfer(), constant.transfer())?;
        best = best.min(d);
    }
    Ok(best)
}

/// Exact minimum of the broadcast-to-constant distance over all causal
/// states: `(n − 1) / n`, attained at the uniform state.
pub fn identity_impurity_gap_exact(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (n as f64 - 1.0) / n as f64
}

/// Concrete no-go: broadcasting dilates the identity but stays bounded
/// away from every constant leak, so plain classical wires are not pure
/// under separation-only purity. Returns whether the violation exists
/// (false only for the trivial one-state system).
pub fn identity_impurity_nogo(n: usize, tol: Tolerance) -> Result<bool, PtError> {
    let gap = identity_impurity_gap(n, 10)?;
    Ok(gap > tol.abs_eps + tol.rel_eps)
}

fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<usize>::new(), steps)];
    while let Some((prefix, left)) = stack.pop() {
        if prefix.len() == n - 1 {
            let mut w: Vec<f64> = prefix.iter().map(|&k| k as f64 / steps as f64).collect();
            w.push(left as f64 / steps as f64);
            out.push(w);
            continue;
        }
        for k in 0..=left {
            let mut next = prefix.clone();
            next.push(k);
            stack.push((next, left - k));
        }
    }
    out
}
