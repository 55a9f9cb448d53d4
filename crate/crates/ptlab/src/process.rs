//! Systems, processes, and the structural operations of the theory:
//! composition, discarding, causality, complete positivity, cups and caps,
//! feedback loops, spiders, and black/white dots.
//!
//! A process is a complex transfer matrix together with its domain and
//! codomain system types. Classical atoms act on probability-vector
//! coordinates, quantum atoms on vectorized-operator coordinates (row-major
//! `d×d`, carrier dimension `d²`). Sequential composition is matrix
//! multiplication, parallel composition the Kronecker product, which makes
//! classical, quantum, and mixed processes uniform matrix algebra.

use num_complex::Complex64;

use crate::error::PtError;
use crate::mat::{self, approx_eq, eig_hermitian, kron, matmul, CMatrix, Tolerance};

/// An atomic system: an `n`-state classical system or a `d`-dimensional
/// quantum system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    Classical(usize),
    Quantum(usize),
}

impl Atom {
    /// Dimension of the carrier space: `n` for classical, `d²` for quantum.
    pub fn carrier_dim(&self) -> usize {
        match *self {
            Atom::Classical(n) => n,
            Atom::Quantum(d) => d * d,
        }
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Atom::Classical(n) => write!(f, "classical({n})"),
            Atom::Quantum(d) => write!(f, "quantum({d})"),
        }
    }
}

/// Ordered list of atomic factors. The trivial system is the empty list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SystemType {
    factors: Vec<Atom>,
}

impl SystemType {
    pub fn trivial() -> Self {
        SystemType { factors: vec![] }
    }

    pub fn atom(a: Atom) -> Self {
        SystemType { factors: vec![a] }
    }

    pub fn classical(n: usize) -> Self {
        SystemType::atom(Atom::Classical(n))
    }

    pub fn quantum(d: usize) -> Self {
        SystemType::atom(Atom::Quantum(d))
    }

    pub fn from_atoms(factors: Vec<Atom>) -> Self {
        SystemType { factors }
    }

    pub fn factors(&self) -> &[Atom] {
        &self.factors
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn carrier_dim(&self) -> usize {
        self.factors.iter().map(Atom::carrier_dim).product()
    }

    /// Tensor of system types concatenates the factor lists.
    pub fn tensor(&self, other: &SystemType) -> SystemType {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        SystemType { factors }
    }

    /// Sub-system formed by a contiguous range of atoms.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SystemType {
        SystemType {
            factors: self.factors[range].to_vec(),
        }
    }
}

impl std::fmt::Display for SystemType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self.factors.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(" * "))
    }
}

/// Row-major multi-index bookkeeping over a list of dimensions.
#[derive(Debug, Clone)]
pub(crate) struct Indexer {
    dims: Vec<usize>,
}

impl Indexer {
    pub fn new(dims: Vec<usize>) -> Self {
        Indexer { dims }
    }

    pub fn for_type(ty: &SystemType) -> Self {
        Indexer::new(ty.factors.iter().map(Atom::carrier_dim).collect())
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.dims[k] + i;
        }
        flat
    }
}

/// A process: a transfer matrix of shape `carrier_dim(cod) × carrier_dim(dom)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    dom: SystemType,
    cod: SystemType,
    transfer: CMatrix,
}

impl Process {
    pub fn new(dom: SystemType, cod: SystemType, transfer: CMatrix) -> Result<Self, PtError> {
        if transfer.rows() != cod.carrier_dim() || transfer.cols() != dom.carrier_dim() {
            return Err(PtError::ShapeMismatch {
                context: "Process::new",
                expected: format!(
                    "{}x{} transfer for {} -> {}",
                    cod.carrier_dim(),
                    dom.carrier_dim(),
                    dom,
                    cod
                ),
                found: format!("{}x{}", transfer.rows(), transfer.cols()),
            });
        }
        Ok(Process { dom, cod, transfer })
    }

    pub fn dom(&self) -> &SystemType {
        &self.dom
    }

    pub fn cod(&self) -> &SystemType {
        &self.cod
    }

    pub fn transfer(&self) -> &CMatrix {
        &self.transfer
    }

    pub fn is_state(&self) -> bool {
        self.dom.is_trivial()
    }

    pub fn is_effect(&self) -> bool {
        self.cod.is_trivial()
    }

    /// The 1x1 transfer entry of a number (state with trivial codomain too).
    pub fn as_number(&self) -> Option<Complex64> {
        if self.dom.is_trivial() && self.cod.is_trivial() {
            Some(self.transfer.get(0, 0))
        } else {
            None
        }
    }
}

/// The scalar process with the given value.
pub fn number(value: Complex64) -> Process {
    Process {
        dom: SystemType::trivial(),
        cod: SystemType::trivial(),
        transfer: CMatrix::new(1, 1, vec![value]).expect("1x1"),
    }
}

/// Plain wire on a system.
pub fn identity(ty: &SystemType) -> Process {
    Process {
        dom: ty.clone(),
        cod: ty.clone(),
        transfer: CMatrix::identity(ty.carrier_dim()),
    }
}

/// Sequential composition `g ∘ f` (f acts first).
pub fn compose_seq(g: &Process, f: &Process) -> Result<Process, PtError> {
    if f.cod != g.dom {
        return Err(PtError::TypeMismatch(format!(
            "cannot compose: inner codomain {} does not match outer domain {}",
            f.cod, g.dom
        )));
    }
    Ok(Process {
        dom: f.dom.clone(),
        cod: g.cod.clone(),
        transfer: matmul(&g.transfer, &f.transfer)?,
    })
}

/// Parallel composition `f ⊗ g`.
pub fn compose_par(f: &Process, g: &Process) -> Process {
    Process {
        dom: f.dom.tensor(&g.dom),
        cod: f.cod.tensor(&g.cod),
        transfer: kron(&f.transfer, &g.transfer),
    }
}

/// The discarding effect: marginalisation on classical atoms, trace on
/// quantum atoms, composed by tensoring.
pub fn discard(ty: &SystemType) -> Process {
    let mut row = CMatrix::identity(1);
    for atom in ty.factors() {
        let part = match *atom {
            Atom::Classical(n) => CMatrix::from_fn(1, n, |_, _| Complex64::new(1.0, 0.0)),
            Atom::Quantum(d) => CMatrix::from_fn(1, d * d, |_, v| {
                let (i, j) = (v / d, v % d);
                if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        };
        row = kron(&row, &part);
    }
    Process {
        dom: ty.clone(),
        cod: SystemType::trivial(),
        transfer: row,
    }
}

/// Causality: discarding the output equals discarding the input.
pub fn is_causal(f: &Process, tol: Tolerance) -> bool {
    causality_residual(f) <= tol.abs_eps + tol.rel_eps * f.transfer.max_abs().max(1.0)
}

/// Max-norm deviation from the causality equation.
pub fn causality_residual(f: &Process) -> f64 {
    let lhs = matmul(&discard(&f.cod).transfer, &f.transfer).expect("shape");
    let rhs = discard(&f.dom).transfer;
    mat::max_abs_diff(&lhs, &rhs).expect("shape")
}

pub(crate) fn quantum_dims(ty: &SystemType) -> Vec<usize> {
    ty.factors()
        .iter()
        .filter_map(|a| match a {
            Atom::Quantum(d) => Some(*d),
            Atom::Classical(_) => None,
        })
        .collect()
}

pub(crate) fn classical_dims(ty: &SystemType) -> Vec<usize> {
    ty.factors()
        .iter()
        .filter_map(|a| match a {
            Atom::Classical(n) => Some(*n),
            Atom::Quantum(_) => None,
        })
        .collect()
}

/// Assemble a full carrier index from a classical multi-index and a quantum
/// multi-index (both row-major over the atoms of their own kind).
fn assemble_index(ty: &SystemType, classical_idx: &[usize], quantum_idx: &[usize]) -> usize {
    let mut per_atom = Vec::with_capacity(ty.factors().len());
    let (mut ci, mut qi) = (0, 0);
    for atom in ty.factors() {
        match atom {
            Atom::Classical(_) => {
                per_atom.push(classical_idx[ci]);
                ci += 1;
            }
            Atom::Quantum(_) => {
                per_atom.push(quantum_idx[qi]);
                qi += 1;
            }
        }
    }
    Indexer::for_type(ty).ravel(&per_atom)
}

/// The transfer matrix of the quantum part of `f` for fixed classical input
/// and output indices (row-major multi-indices over the classical atoms).
pub(crate) fn quantum_block(
    f: &Process,
    classical_out: &[usize],
    classical_in: &[usize],
) -> CMatrix {
    let qdims_in = quantum_dims(&f.dom);
    let qdims_out = quantum_dims(&f.cod);
    let qin = Indexer::new(qdims_in.iter().map(|d| d * d).collect());
    let qout = Indexer::new(qdims_out.iter().map(|d| d * d).collect());
    CMatrix::from_fn(qout.total(), qin.total(), |r, c| {
        let row = assemble_index(&f.cod, classical_out, &qout.unravel(r));
        let col = assemble_index(&f.dom, classical_in, &qin.unravel(c));
        f.transfer.get(row, col)
    })
}

/// Reshuffle a multi-atom quantum transfer block into its Choi matrix.
///
/// The block maps per-atom vectorized coordinates; the Choi matrix lives on
/// the composite input⊗output operator space, indexed `(I·Dout+K, J·Dout+L)`
/// where `I,J` run over composite input kets and `K,L` over output kets.
pub(crate) fn choi_of_block(block: &CMatrix, qdims_in: &[usize], qdims_out: &[usize]) -> CMatrix {
    let din: usize = qdims_in.iter().product::<usize>().max(1);
    let dout: usize = qdims_out.iter().product::<usize>().max(1);
    let in_pairs = Indexer::new(qdims_in.iter().map(|d| d * d).collect());
    let out_pairs = Indexer::new(qdims_out.iter().map(|d| d * d).collect());
    let in_kets = Indexer::new(qdims_in.to_vec());
    let out_kets = Indexer::new(qdims_out.to_vec());
    let mut choi = CMatrix::zeros(din * dout, din * dout);
    for col in 0..block.cols() {
        let pairs = in_pairs.unravel(col);
        let (mut is, mut js) = (Vec::new(), Vec::new());
        for (m, &p) in pairs.iter().enumerate() {
            is.push(p / qdims_in[m]);
            js.push(p % qdims_in[m]);
        }
        let i = in_kets.ravel(&is);
        let j = in_kets.ravel(&js);
        for row in 0..block.rows() {
            let pairs = out_pairs.unravel(row);
            let (mut ks, mut ls) = (Vec::new(), Vec::new());
            for (m, &p) in pairs.iter().enumerate() {
                ks.push(p / qdims_out[m]);
                ls.push(p % qdims_out[m]);
            }
            let k = out_kets.ravel(&ks);
            let l = out_kets.ravel(&ls);
            choi[(i * dout + k, j * dout + l)] = block.get(row, col);
        }
    }
    choi
}

/// Iterate over all classical multi-indices of a type.
pub(crate) fn classical_index_space(ty: &SystemType) -> Vec<Vec<usize>> {
    let idx = Indexer::new(classical_dims(ty));
    (0..idx.total()).map(|v| idx.unravel(v)).collect()
}

/// Complete positivity: every classical-conditioned quantum block has a
/// positive semidefinite Choi matrix, and purely classical entries are
/// nonnegative reals.
pub fn is_cp(f: &Process, tol: Tolerance) -> bool {
    let bound = tol.abs_eps + tol.rel_eps * f.transfer.max_abs().max(1.0);
    let qdims_in = quantum_dims(&f.dom);
    let qdims_out = quantum_dims(&f.cod);
    let no_quantum = qdims_in.is_empty() && qdims_out.is_empty();
    for cout in classical_index_space(&f.cod) {
        for cin in classical_index_space(&f.dom) {
            let block = quantum_block(f, &cout, &cin);
            if no_quantum {
                let z = block.get(0, 0);
                if z.re < -bound || z.im.abs() > bound {
                    return false;
                }
            } else {
                let choi = choi_of_block(&block, &qdims_in, &qdims_out);
                let herm_tol = Tolerance {
                    abs_eps: bound,
                    rel_eps: tol.rel_eps,
                };
                if !choi.is_hermitian(herm_tol) {
                    return false;
                }
                match eig_hermitian(&choi, herm_tol) {
                    Ok((vals, _)) => {
                        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                        if vals.iter().any(|&v| v < -(bound + tol.rel_eps * scale)) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            }
        }
    }
    true
}

/// Choi matrix of a process between purely quantum systems.
pub fn choi_matrix(f: &Process) -> Result<CMatrix, PtError> {
    if !classical_dims(&f.dom).is_empty() || !classical_dims(&f.cod).is_empty() {
        return Err(PtError::InvalidArgument(
            "choi_matrix requires purely quantum domain and codomain".into(),
        ));
    }
    let block = quantum_block(f, &[], &[]);
    Ok(choi_of_block(
        &block,
        &quantum_dims(&f.dom),
        &quantum_dims(&f.cod),
    ))
}

/// Quantum channel from Kraus operators (shape `Dout × Din` each, acting on
/// the composite ket spaces).
pub fn from_kraus(
    dom: &SystemType,
    cod: &SystemType,
    kraus: &[CMatrix],
) -> Result<Process, PtError> {
    let qdims_in = quantum_dims(dom);
    let qdims_out = quantum_dims(cod);
    if qdims_in.len() != dom.factors().len() || qdims_out.len() != cod.factors().len() {
        return Err(PtError::InvalidArgument(
            "Kraus form requires purely quantum domain and codomain".into(),
        ));
    }
    let din: usize = qdims_in.iter().product::<usize>().max(1);
    let dout: usize = qdims_out.iter().product::<usize>().max(1);
    for k in kraus {
        if k.rows() != dout || k.cols() != din {
            return Err(PtError::ShapeMismatch {
                context: "from_kraus",
                expected: format!("{dout}x{din}"),
                found: format!("{}x{}", k.rows(), k.cols()),
            });
        }
    }
    let in_pairs = Indexer::new(qdims_in.iter().map(|d| d * d).collect());
    let out_pairs = Indexer::new(qdims_out.iter().map(|d| d * d).collect());
    let in_kets = Indexer::new(qdims_in.clone());
    let out_kets = Indexer::new(qdims_out.clone());
    let transfer = CMatrix::from_fn(cod.carrier_dim(), dom.carrier_dim(), |row, col| {
        let pairs = in_pairs.unravel(col);
        let (mut is, mut js) = (Vec::new(), Vec::new());
        for (m, &p) in pairs.iter().enumerate() {
            is.push(p / qdims_in[m]);
            js.push(p % qdims_in[m]);
        }
        let i = in_kets.ravel(&is);
        let j = in_kets.ravel(&js);
        let pairs = out_pairs.unravel(row);
        let (mut ks, mut ls) = (Vec::new(), Vec::new());
        for (m, &p) in pairs.iter().enumerate() {
            ks.push(p / qdims_out[m]);
            ls.push(p % qdims_out[m]);
        }
        let k = out_kets.ravel(&ks);
        let l = out_kets.ravel(&ls);
        kraus
            .iter()
            .map(|op| op.get(k, i) * op.get(l, j).conj())
            .sum()
    });
    Process::new(dom.clone(), cod.clone(), transfer)
}

/// Kraus operators of a CP map between purely quantum systems, from the
/// eigendecomposition of its Choi matrix.
pub fn kraus_from_choi(f: &Process, tol: Tolerance) -> Result<Vec<CMatrix>, PtError> {
    let choi = choi_matrix(f)?;
    let (vals, vecs) = eig_hermitian(&choi, tol)?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let bound = tol.abs_eps + tol.rel_eps * scale;
    if vals.iter().any(|&v| v < -bound) {
        return Err(PtError::NotCompletelyPositive);
    }
    let din: usize = quantum_dims(&f.dom).iter().product::<usize>().max(1);
    let dout: usize = quantum_dims(&f.cod).iter().product::<usize>().max(1);
    let mut kraus = Vec::new();
    for (m, &lam) in vals.iter().enumerate() {
        if lam <= bound {
            continue;
        }
        let s = lam.sqrt();
        kraus.push(CMatrix::from_fn(dout, din, |k, i| {
            vecs.get(i * dout + k, m) * s
        }));
    }
    Ok(kraus)
}

fn single_atom(ty: &SystemType, context: &'static str) -> Result<Atom, PtError> {
    match ty.factors() {
        [a] => Ok(*a),
        _ => Err(PtError::InvalidArgument(format!(
            "{context} requires a single atomic system, got {ty}"
        ))),
    }
}

/// Unnormalized cup: the perfectly correlated state (classical) or the
/// unnormalized Bell state (quantum) on a single atom. In carrier
/// coordinates both take the form `Σ_v e_v ⊗ e_v`.
pub fn cup(ty: &SystemType) -> Result<Process, PtError> {
    let atom = single_atom(ty, "cup")?;
    let c = atom.carrier_dim();
    let mut col = CMatrix::zeros(c * c, 1);
    for v in 0..c {
        col[(v * c + v, 0)] = Complex64::new(1.0, 0.0);
    }
    Process::new(SystemType::trivial(), ty.tensor(ty), col)
}

/// Unnormalized cap, the transpose of [`cup`].
pub fn cap(ty: &SystemType) -> Result<Process, PtError> {
    let atom = single_atom(ty, "cap")?;
    let c = atom.carrier_dim();
    let mut row = CMatrix::zeros(1, c * c);
    for v in 0..c {
        row[(0, v * c + v)] = Complex64::new(1.0, 0.0);
    }
    Process::new(ty.tensor(ty), SystemType::trivial(), row)
}

/// The normalisation scalar `D = discard ∘ cup`: `n` for a classical atom,
/// `d` for a quantum atom.
pub fn cup_normalisation(ty: &SystemType) -> Result<f64, PtError> {
    let cup = cup(ty)?;
    let disc = discard(cup.cod());
    Ok(compose_seq(&disc, &cup)?.as_number().unwrap().re)
}

/// Feedback wire: connect the `looped`-th output atom back to the
/// `looped`-th input atom (0-based; the two atoms must be equal).
pub fn trace_loop(f: &Process, looped: usize) -> Result<Process, PtError> {
    let dom_atoms = f.dom.factors();
    let cod_atoms = f.cod.factors();
    if looped >= dom_atoms.len() || looped >= cod_atoms.len() {
        return Err(PtError::InvalidArgument(format!(
            "trace_loop: atom index {looped} out of range for {} -> {}",
            f.dom, f.cod
        )));
    }
    if dom_atoms[looped] != cod_atoms[looped] {
        return Err(PtError::TypeMismatch(format!(
            "trace_loop: input atom {} does not match output atom {}",
            dom_atoms[looped], cod_atoms[looped]
        )));
    }
    let loop_dim = dom_atoms[looped].carrier_dim();
    let mut new_dom = dom_atoms.to_vec();
    new_dom.remove(looped);
    let mut new_cod = cod_atoms.to_vec();
    new_cod.remove(looped);
    let new_dom = SystemType::from_atoms(new_dom);
    let new_cod = SystemType::from_atoms(new_cod);
    let dom_idx = Indexer::for_type(&f.dom);
    let cod_idx = Indexer::for_type(&f.cod);
    let ndom_idx = Indexer::for_type(&new_dom);
    let ncod_idx = Indexer::for_type(&new_cod);
    let transfer = CMatrix::from_fn(new_cod.carrier_dim(), new_dom.carrier_dim(), |r, c| {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..loop_dim {
            let mut out = ncod_idx.unravel(r);
            out.insert(looped, s);
            let mut inp = ndom_idx.unravel(c);
            inp.insert(looped, s);
            acc += f.transfer.get(cod_idx.ravel(&out), dom_idx.ravel(&inp));
        }
        acc
    });
    Process::new(new_dom, new_cod, transfer)
}

/// Classical spider with `m_in` inputs and `m_out` outputs on an `n`-state
/// system: entry 1 iff all legs carry the same index.
pub fn spider(n: usize, m_in: usize, m_out: usize) -> Result<Process, PtError> {
    if m_in == 0 && m_out == 0 {
        return Err(PtError::InvalidArgument(
            "spider with no legs is a dimension-dependent number; construct it explicitly".into(),
        ));
    }
    let dom = SystemType::from_atoms(vec![Atom::Classical(n); m_in]);
    let cod = SystemType::from_atoms(vec![Atom::Classical(n); m_out]);
    let dom_idx = Indexer::for_type(&dom);
    let cod_idx = Indexer::for_type(&cod);
    let transfer = CMatrix::from_fn(cod.carrier_dim(), dom.carrier_dim(), |r, c| {
        let out = cod_idx.unravel(r);
        let inp = dom_idx.unravel(c);
        let all: Vec<usize> = out.into_iter().chain(inp).collect();
        if all.windows(2).all(|w| w[0] == w[1]) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Process::new(dom, cod, transfer)
}

/// Broadcasting map on a classical atom (the 1-in 2-out spider).
pub fn broadcast(n: usize) -> Process {
    spider(n, 1, 2).expect("legs > 0")
}

/// Copy spider on a classical atom, alias of [`broadcast`].
pub fn copy(n: usize) -> Process {
    broadcast(n)
}

/// Black/white dot: the 0/1 matrix of a partial injection
/// `{0..n-1} ⇀ {0..m-1}` given as `pattern[i] = Some(j)`.
pub fn bw_dot(n: usize, m: usize, pattern: &[Option<usize>]) -> Result<Process, PtError> {
    if pattern.len() != n {
        return Err(PtError::InvalidArgument(format!(
            "bw_dot: pattern length {} does not match domain size {n}",
            pattern.len()
        )));
    }
    let mut seen = vec![false; m];
    for target in pattern.iter().flatten() {
        if *target >= m {
            return Err(PtError::InvalidArgument(format!(
                "bw_dot: target {target} out of range for codomain size {m}"
            )));
        }
        if seen[*target] {
            return Err(PtError::InvalidArgument(
                "bw_dot: pattern is not injective".into(),
            ));
        }
        seen[*target] = true;
    }
    let mut transfer = CMatrix::zeros(m, n);
    for (i, target) in pattern.iter().enumerate() {
        if let Some(j) = target {
            transfer[(*j, i)] = Complex64::new(1.0, 0.0);
        }
    }
    Process::new(SystemType::classical(n), SystemType::classical(m), transfer)
}

/// Explicit swap of the two atoms of `a ⊗ b`.
pub fn swap(a: Atom, b: Atom) -> Process {
    permute_atoms(
        &SystemType::from_atoms(vec![a, b]),
        &[1, 0],
    )
    .expect("valid permutation")
}

/// The process permuting the atoms of `ty`: output atom `k` is input atom
/// `perm[k]`.
pub fn permute_atoms(ty: &SystemType, perm: &[usize]) -> Result<Process, PtError> {
    let atoms = ty.factors();
    if perm.len() != atoms.len() {
        return Err(PtError::InvalidArgument(
            "permute_atoms: permutation length mismatch".into(),
        ));
    }
    let mut seen = vec![false; atoms.len()];
    for &p in perm {
        if p >= atoms.len() || seen[p] {
            return Err(PtError::InvalidArgument(
                "permute_atoms: not a permutation".into(),
            ));
        }
        seen[p] = true;
    }
    let cod = SystemType::from_atoms(perm.iter().map(|&p| atoms[p]).collect());
    let dom_idx = Indexer::for_type(ty);
    let cod_idx = Indexer::for_type(&cod);
    let mut transfer = CMatrix::zeros(cod.carrier_dim(), ty.carrier_dim());
    for c in 0..ty.carrier_dim() {
        let inp = dom_idx.unravel(c);
        let out: Vec<usize> = perm.iter().map(|&p| inp[p]).collect();
        transfer[(cod_idx.ravel(&out), c)] = Complex64::new(1.0, 0.0);
    }
    Process::new(ty.clone(), cod, transfer)
}

/// Classical state from a probability (or weight) vector.
pub fn classical_state(weights: &[f64]) -> Result<Process, PtError> {
    let n = weights.len();
    let transfer = CMatrix::from_real(n, 1, weights)?;
    Process::new(SystemType::trivial(), SystemType::classical(n), transfer)
}

/// Classical basis point state `|i⟩` on an `n`-state system.
pub fn point_state(n: usize, i: usize) -> Process {
    let mut w = vec![0.0; n];
    w[i] = 1.0;
    classical_state(&w).expect("valid")
}

/// Quantum state from a density matrix (need not be normalized).
pub fn quantum_state(rho: &CMatrix) -> Result<Process, PtError> {
    if rho.rows() != rho.cols() {
        return Err(PtError::ShapeMismatch {
            context: "quantum_state",
            expected: "square density matrix".into(),
            found: format!("{}x{}", rho.rows(), rho.cols()),
        });
    }
    let d = rho.rows();
    let transfer = CMatrix::from_fn(d * d, 1, |v, _| rho.get(v / d, v % d));
    Process::new(SystemType::trivial(), SystemType::quantum(d), transfer)
}

/// Maximally mixed state on a `d`-dimensional quantum system.
pub fn maximally_mixed(d: usize) -> Process {
    quantum_state(&mat::scale(
        Complex64::new(1.0 / d as f64, 0.0),
        &CMatrix::identity(d),
    ))
    .expect("valid")
}

/// Unitary conjugation channel `ρ ↦ UρU†` on a single quantum atom.
pub fn unitary_channel(u: &CMatrix) -> Result<Process, PtError> {
    let ty = SystemType::quantum(u.rows());
    from_kraus(&ty, &ty, std::slice::from_ref(u))
}

/// The completely dephasing channel on `Quantum(d)`.
pub fn dephasing_channel(d: usize) -> Process {
    let ty = SystemType::quantum(d);
    let kraus: Vec<CMatrix> = (0..d)
        .map(|i| {
            let mut k = CMatrix::zeros(d, d);
            k[(i, i)] = Complex64::new(1.0, 0.0);
            k
        })
        .collect();
    from_kraus(&ty, &ty, &kraus).expect("valid")
}

/// The quantum basis-copy pre-leak `|i⟩⟨i| ↦ |i⟩⟨i| ⊗ |i⟩⟨i|` on
/// `Quantum(d)` (the decoherence pre-leak). Kraus operators
/// `V = Σ_i |ii⟩⟨i|` make it an isometry channel `Q(d) → Q(d)⊗Q(d)`.
pub fn dephasing_copy(d: usize) -> Process {
    let ty = SystemType::quantum(d);
    let cod = ty.tensor(&ty);
    let mut v = CMatrix::zeros(d * d, d);
    for i in 0..d {
        v[(i * d + i, i)] = Complex64::new(1.0, 0.0);
    }
    from_kraus(&ty, &cod, std::slice::from_ref(&v)).expect("valid")
}

/// Structural equality of processes within tolerance (same types, transfers
/// approximately equal).
pub fn process_approx_eq(a: &Process, b: &Process, tol: Tolerance) -> bool {
    a.dom == b.dom && a.cod == b.cod && approx_eq(&a.transfer, &b.transfer, tol).unwrap_or(false)
}
