//! End-to-end acceptance suite. Each test covers one headline property and
//! prints a single PASS line when it holds; a failed assertion is the FAIL
//! line.

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use ptlab::construct::{self, ConstructedTheory};
use ptlab::dsl;
use ptlab::leak::{self, MixedLeakParams, QualityOptions};
use ptlab::mat::{self, CMatrix, Tolerance};
use ptlab::process::{self, Atom, Process, SystemType};
use ptlab::purity;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Process {
    let mut t = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for (r, v) in random_dist(rng, rows).into_iter().enumerate() {
            t[(r, c)] = Complex64::new(v, 0.0);
        }
    }
    Process::new(
        SystemType::classical(cols),
        SystemType::classical(rows),
        t,
    )
    .unwrap()
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let g = mat::matmul(&a, &a.conj_transpose()).unwrap();
    let tr = g.trace().re;
    mat::scale(Complex64::new(1.0 / tr, 0.0), &g)
}

/// Left-counit counterpart of the leak equation: discarding the kept
/// output must also return the identity for broadcasting.
fn left_counit_residual(candidate: &Process) -> f64 {
    let a = candidate.dom().clone();
    let marg = process::compose_seq(
        &process::compose_par(&process::discard(&a), &process::identity(&a)),
        candidate,
    )
    .unwrap();
    mat::max_abs_diff(marg.transfer(), process::identity(&a).transfer()).unwrap()
}

#[test]
fn acceptance_01_leak_axioms() {
    for n in 2..=6 {
        let b = process::broadcast(n);
        assert!(leak::leak_residual(&b).unwrap() < 1e-12);
        assert!(left_counit_residual(&b) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let rho = process::classical_state(&random_dist(&mut rng, n)).unwrap();
        let constant = leak::constant_leak(&SystemType::classical(n), &rho);
        assert!(leak::leak_residual(&constant).unwrap() < 1e-12);
        assert!(left_counit_residual(&constant) > 0.05);
    }
    println!("PASS criterion 1: leak axioms for broadcasting and constant leaks, n = 2..6");
}

#[test]
fn acceptance_02_quantum_minimal_leakage() {
    let residual = leak::leak_residual(&process::dephasing_copy(2)).unwrap();
    assert!(residual >= 0.5);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let rho = process::quantum_state(&random_density(&mut rng, 2)).unwrap();
        let constant = leak::constant_leak(&SystemType::quantum(2), &rho);
        let q = leak::quality(&constant, tol(), QualityOptions::default()).unwrap();
        assert!(q.normalized.abs() < 1e-6, "normalized = {}", q.normalized);
    }
    println!("PASS criterion 2: qubit basis copy fails the leak equation; constant-leak quality is 0");
}

#[test]
fn acceptance_03_classical_canonical_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let n = rng.gen_range(1..=5usize);
        let m = rng.gen_range(1..=5usize);
        let l = random_stochastic(&mut rng, m, n);
        let built = leak::build_classical_leak(&l).unwrap();
        let (extracted, residual) = leak::classify_classical_leak(&built, tol()).unwrap();
        assert!(residual < 1e-9, "case {case}: residual {residual}");
        assert!(
            mat::max_abs_diff(extracted.transfer(), l.transfer()).unwrap() < 1e-9,
            "case {case}: extracted side channel drifted"
        );
        // Support condition on the tensor itself: off-diagonal-in-A
        // entries are exactly zero by construction.
        for i in 0..n {
            for k in 0..n {
                if i == k {
                    continue;
                }
                for j in 0..m {
                    assert_eq!(built.transfer().get(i * m + j, k), Complex64::new(0.0, 0.0));
                }
            }
        }
    }
    println!("PASS criterion 3: 200 classical leaks round-trip the canonical form");
}

#[test]
fn acceptance_04_quality_reconciliation() {
    for n in [2usize, 3, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(4 + n as u64);
        let rho = process::classical_state(&random_dist(&mut rng, n)).unwrap();
        for step in 0..=10 {
            let c = step as f64 / 10.0;
            let leak_p = leak::mixed_leak(&MixedLeakParams {
                c,
                state: rho.clone(),
            })
            .unwrap();
            let q = leak::quality(&leak_p, tol(), QualityOptions::default()).unwrap();
            assert!((q.normalized - c).abs() < 1e-9, "n={n} c={c}: {}", q.normalized);

            // Brute force over all n^n deterministic restorations.
            let mut best = f64::NEG_INFINITY;
            for code in 0..n.pow(n as u32) {
                let mut t = CMatrix::zeros(n, n);
                let mut rem = code;
                for col in 0..n {
                    t[(rem % n, col)] = Complex64::new(1.0, 0.0);
                    rem /= n;
                }
                let r = Process::new(
                    SystemType::classical(n),
                    SystemType::classical(n),
                    t,
                )
                .unwrap();
                best = best.max(leak::restoration_value(&leak_p, &r).unwrap());
            }
            assert!((q.raw - best).abs() < 1e-12, "n={n} c={c}: raw {} vs oracle {best}", q.raw);
        }
    }
    println!("PASS criterion 4: mixture quality equals c and matches the deterministic oracle");
}

#[test]
fn acceptance_05_decoherence_gives_classical_theory() {
    for d in [2usize, 3] {
        let theory = construct::dephasing_construction(d, tol()).unwrap();
        let q = SystemType::quantum(d);
        let mut rng = ChaCha8Rng::seed_from_u64(5 + d as u64);
        for _ in 0..100 {
            let a_mat = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen::<f64>(), 0.0));
            let b_mat = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen::<f64>(), 0.0));
            let a = theory.embed_classical(&a_mat, &q, &q, tol()).unwrap();
            let b = theory.embed_classical(&b_mat, &q, &q, tol()).unwrap();
            assert!(theory.member(&a, tol()).unwrap());

            let seq = process::compose_seq(&b, &a).unwrap();
            let eseq = theory.extract_classical(&seq, tol()).unwrap();
            let expect = mat::matmul(&b_mat, &a_mat).unwrap();
            assert!(mat::max_abs_diff(eseq.transfer(), &expect).unwrap() < 1e-9);

            let par = process::compose_par(&a, &b);
            let epar = theory.extract_classical(&par, tol()).unwrap();
            let expect = mat::kron(&a_mat, &b_mat);
            assert!(mat::max_abs_diff(epar.transfer(), &expect).unwrap() < 1e-9);

            // Bijection: extract inverts embed and vice versa.
            let ea = theory.extract_classical(&a, tol()).unwrap();
            assert!(mat::max_abs_diff(ea.transfer(), &a_mat).unwrap() < 1e-12);
            let back = theory
                .embed_classical(ea.transfer(), &q, &q, tol())
                .unwrap();
            assert!(mat::max_abs_diff(back.transfer(), a.transfer()).unwrap() < 1e-12);
        }
        // Causal members are exactly the column-stochastic matrices.
        let stoch = random_stochastic(&mut rng, d, d);
        let emb = theory
            .embed_classical(stoch.transfer(), &q, &q, tol())
            .unwrap();
        assert!(process::is_causal(&emb, tol()));
        // Dephasing a unitary channel gives a causal member; its
        // extraction must be column-stochastic.
        let u = random_unitary(&mut rng, d);
        let chan = process::unitary_channel(&u).unwrap();
        let member = theory.project(&chan).unwrap();
        let ext = theory.extract_classical(&member, tol()).unwrap();
        for c in 0..d {
            let sum: f64 = (0..d).map(|r| ext.transfer().get(r, c).re).sum();
            assert!((sum - 1.0).abs() < 1e-9);
            for r in 0..d {
                assert!(ext.transfer().get(r, c).re > -1e-12);
            }
        }
    }
    println!("PASS criterion 5: the dephasing construction is classical probability theory");
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    // Gram-Schmidt on a random complex matrix.
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        for u in &cols {
            let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (b, a) in v.iter_mut().zip(u) {
                *b -= overlap * a;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(d, d, |r, c| cols[c][r])
}

#[test]
fn acceptance_06_block_dephasing_preleaks() {
    for blocks in [vec![4usize], vec![2, 2], vec![1, 1, 1, 1]] {
        let p = construct::block_dephasing(4, &blocks).unwrap();
        let purified = construct::purify_idempotent(&p, tol()).unwrap();
        let pre = construct::make_preleak(&purified.preleak, tol()).unwrap();
        let mut theory = ConstructedTheory::new();
        theory.assign(pre);
        theory.assign_identity(Atom::Quantum(purified.ancilla_dim));
        let residual = theory.induced_leak_residual(Atom::Quantum(4)).unwrap();
        assert!(residual < 1e-9, "blocks {blocks:?}: residual {residual}");
    }
    println!("PASS criterion 6: block-dephasing pre-leaks on quantum(4) induce valid leaks");
}

#[test]
fn acceptance_07_purity_suite() {
    // (a) named channels: pure exactly when Kraus rank is 1.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let unitary =
        process::unitary_channel(&CMatrix::from_real(2, 2, &[s, s, s, -s]).unwrap()).unwrap();
    let gamma: f64 = 0.3;
    let k0 = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]).unwrap();
    let k1 = CMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0]).unwrap();
    let q2 = SystemType::quantum(2);
    let damping = process::from_kraus(&q2, &q2, &[k0, k1]).unwrap();
    let p: f64 = 0.5;
    let w0 = (1.0 - 3.0 * p / 4.0).sqrt();
    let w = (p / 4.0).sqrt();
    let depol = process::from_kraus(
        &q2,
        &q2,
        &[
            CMatrix::from_real(2, 2, &[w0, 0.0, 0.0, w0]).unwrap(),
            CMatrix::from_real(2, 2, &[0.0, w, w, 0.0]).unwrap(),
            CMatrix::from_fn(2, 2, |r, c| match (r, c) {
                (0, 1) => Complex64::new(0.0, -w),
                (1, 0) => Complex64::new(0.0, w),
                _ => Complex64::new(0.0, 0.0),
            }),
            CMatrix::from_real(2, 2, &[w, 0.0, 0.0, -w]).unwrap(),
        ],
    )
    .unwrap();
    for (chan, rank) in [
        (&unitary, 1usize),
        (&process::dephasing_channel(2), 2),
        (&depol, 4),
        (&damping, 2),
    ] {
        let v = purity::is_pure_quantum(chan, tol()).unwrap();
        assert_eq!(v.quantum_kraus_rank, Some(rank));
        assert_eq!(v.pure, rank == 1);
    }

    // (b) classical purity agrees with the leak-commutation oracle on 500
    // random nonnegative matrices (the dilation-separation half is vacuous
    // classically, witnessed per criterion 8).
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let n = rng.gen_range(1..=3usize);
        let m = rng.gen_range(1..=3usize);
        let mut t = CMatrix::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                if rng.gen::<f64>() < 0.5 {
                    t[(r, c)] = Complex64::new(rng.gen::<f64>() + 0.05, 0.0);
                }
            }
        }
        let f = Process::new(SystemType::classical(n), SystemType::classical(m), t).unwrap();
        let pure = purity::is_pure_classical(&f, tol()).unwrap().pure;
        let (lp_holds, _) = purity::check_leak_commutation(&f, tol()).unwrap();
        assert_eq!(pure, lp_holds);
    }

    // (c) causal classical purity: injective-deterministic pattern, the
    // canonical support form, and the leak-commutation condition agree on
    // random causal maps; purity implies a stochastic left inverse.
    for _ in 0..200 {
        let n = rng.gen_range(1..=3usize);
        let m = rng.gen_range(1..=3usize);
        let f = if rng.gen_bool(0.4) {
            // Deterministic map, possibly injective.
            let mut t = CMatrix::zeros(m, n);
            for c in 0..n {
                t[(rng.gen_range(0..m), c)] = Complex64::new(1.0, 0.0);
            }
            Process::new(SystemType::classical(n), SystemType::classical(m), t).unwrap()
        } else {
            random_stochastic(&mut rng, m, n)
        };
        let a = purity::is_pure_causal_classical(&f, tol()).unwrap();
        let b = purity::is_pure_classical(&f, tol()).unwrap().pure;
        let (c, _) = purity::check_leak_commutation(&f, tol()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        if a {
            assert!(purity::stochastic_left_inverse(&f, tol()).unwrap().is_some());
        }
    }

    // (d) pure maps across the classical/quantum divide are separable; the
    // basis measurement is impure.
    let mut rho = CMatrix::zeros(2, 2);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    let prep = Process::new(
        SystemType::classical(1),
        SystemType::quantum(2),
        process::quantum_state(&rho).unwrap().transfer().clone(),
    )
    .unwrap();
    let v = purity::is_pure_cq(&prep, tol()).unwrap();
    assert!(v.pure);
    let blocks = v.cq_blocks.unwrap();
    assert_eq!(blocks.len(), 1);
    // Product reconstruction: a single block means the map is the block
    // itself in the lone classical slot.
    let rebuilt = process::quantum_state(&rho).unwrap();
    assert!(mat::max_abs_diff(rebuilt.transfer(), prep.transfer()).unwrap() < 1e-9);

    let mut t = CMatrix::zeros(2, 4);
    t[(0, 0)] = Complex64::new(1.0, 0.0);
    t[(1, 3)] = Complex64::new(1.0, 0.0);
    let meas = Process::new(SystemType::quantum(2), SystemType::classical(2), t).unwrap();
    assert!(!purity::is_pure_cq(&meas, tol()).unwrap().pure);

    println!("PASS criterion 7: purity suite (quantum ranks, classical oracle, causal triple, separability)");
}

#[test]
fn acceptance_08_dilation_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let n = rng.gen_range(1..=4usize);
        let m = rng.gen_range(1..=4usize);
        let e = rng.gen_range(1..=4usize);
        let f = random_stochastic(&mut rng, m, n);
        let mut dt = CMatrix::zeros(m * e, n);
        for i in 0..n {
            for k in 0..m {
                let kernel = random_dist(&mut rng, e);
                for (j, &kv) in kernel.iter().enumerate() {
                    dt[(k * e + j, i)] =
                        Complex64::new(f.transfer().get(k, i).re * kv, 0.0);
                }
            }
        }
        let dilation = Process::new(
            SystemType::classical(n),
            SystemType::classical(m).tensor(&SystemType::classical(e)),
            dt,
        )
        .unwrap();
        let w = purity::classical_dilation_witness(&f, &dilation, tol()).unwrap();
        assert!(process::is_causal(&w.witness, tol()), "case {case}");
        assert!(w.residual < 1e-9, "case {case}: residual {}", w.residual);
    }
    println!("PASS criterion 8: 100 random dilations separate through a causal witness");
}

#[test]
fn acceptance_09_identity_impurity_nogo() {
    let grid = purity::identity_impurity_gap(2, 1000).unwrap();
    let exact = purity::identity_impurity_gap_exact(2);
    assert!(grid >= 0.5 - 1e-12, "grid min {grid}");
    assert!((grid - exact).abs() < 1e-12);
    assert!(purity::identity_impurity_nogo(2, tol()).unwrap());
    println!("PASS criterion 9: broadcasting stays 0.5 away from every constant leak on a bit");
}

#[test]
fn acceptance_10_dsl_round_trip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/circuits");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("ptc") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = dsl::parse(&text).unwrap_or_else(|e| panic!("{path:?}: {e}"));
        let printed = dsl::pretty_print(&parsed);
        let reparsed = dsl::parse(&printed).unwrap();
        assert_eq!(reparsed, parsed, "{path:?} does not round-trip");
        count += 1;
    }
    assert!(count >= 15, "corpus has only {count} files");

    let yank = dsl::run(&std::fs::read_to_string(format!("{dir}/yanking.ptc")).unwrap()).unwrap();
    assert!(process::process_approx_eq(
        &yank,
        &process::identity(&SystemType::classical(3)),
        tol()
    ));
    let circle =
        dsl::run(&std::fs::read_to_string(format!("{dir}/circle5.ptc")).unwrap()).unwrap();
    assert_eq!(circle.as_number().unwrap(), Complex64::new(5.0, 0.0));
    println!("PASS criterion 10: {count} corpus files round-trip; yanking and circle evaluate exactly");
}
