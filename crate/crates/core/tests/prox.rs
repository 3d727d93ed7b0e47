mod common;

use common::oracles::{dist, prox_objective, prox_oracle};
use common::{random_matrix, random_sym, reg_of};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simlearn_core::linalg::{Matrix, SymMatrix};
use simlearn_core::norms::{dual_norm, norm, norm_general, prox, prox_mixed21_row_symmetrized};
use simlearn_core::NormKind;

const TAUS: [f64; 4] = [0.01, 0.1, 0.5, 1.0];

fn objective(a: &SymMatrix, b: &SymMatrix, tau: f64, kind: NormKind) -> f64 {
    0.5 * a.matrix().add_scaled(-1.0, b.matrix()).unwrap().frobenius().powi(2) + tau * norm(a, kind)
}

#[test]
fn closed_forms_match_subgradient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..25 {
        let b = random_sym(&mut rng, 3, 1.0);
        for tau in TAUS {
            for (kind, iters) in [(NormKind::L1, 100_000), (NormKind::Frobenius, 20_000), (NormKind::Trace, 40_000)] {
                let p = prox(&b, tau, kind).unwrap();
                let o = prox_oracle(b.matrix().as_slice(), 3, tau, reg_of(kind), iters);
                let gap = dist(p.matrix().as_slice(), &o);
                assert!(gap < 1e-4, "{kind} tau={tau}: distance {gap}");
            }
        }
    }
}

#[test]
fn mixed21_prox_no_worse_than_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..25 {
        let b = random_sym(&mut rng, 3, 1.0);
        for tau in TAUS {
            let p = prox(&b, tau, NormKind::Mixed21).unwrap();
            let o = prox_oracle(b.matrix().as_slice(), 3, tau, common::oracles::Reg::Mixed21, 30_000);
            let bs = b.matrix().as_slice();
            let fp = prox_objective(p.matrix().as_slice(), bs, 3, tau, common::oracles::Reg::Mixed21);
            let fo = prox_objective(&o, bs, 3, tau, common::oracles::Reg::Mixed21);
            assert!(fp <= fo + 1e-3, "tau={tau}: {fp} vs {fo}");
        }
    }
}

#[test]
fn row_heuristic_can_miss_the_symmetric_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let b = random_sym(&mut rng, 3, 1.0);
        for tau in TAUS {
            let exact = objective(&prox(&b, tau, NormKind::Mixed21).unwrap(), &b, tau, NormKind::Mixed21);
            let rough = objective(&prox_mixed21_row_symmetrized(&b, tau), &b, tau, NormKind::Mixed21);
            assert!(exact <= rough + 1e-12);
            worst = worst.max(rough - exact);
        }
    }
    assert!(worst > 1e-3, "heuristic gap {worst}");
}

/// `(B − P)/τ` must lie in the subdifferential of the norm at `P`: dual norm
/// at most one and pairing with `P` equal to `‖P‖`.
#[test]
fn closed_forms_satisfy_optimality_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..200 {
        let n = rng.random_range(1..=5);
        let b = random_sym(&mut rng, n, 2.0);
        for tau in TAUS {
            for kind in [NormKind::L1, NormKind::Frobenius, NormKind::Trace] {
                let p = prox(&b, tau, kind).unwrap();
                let g = b.matrix().add_scaled(-1.0, p.matrix()).unwrap().scale(1.0 / tau);
                assert!(dual_norm(&g, kind) <= 1.0 + 1e-10, "{kind}");
                let pairing = g.inner(p.matrix()).unwrap();
                assert!((pairing - norm(&p, kind)).abs() <= 1e-10 * norm(&p, kind).max(1.0), "{kind}");
            }
        }
    }
}

#[test]
fn prox_beats_random_symmetric_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for kind in NormKind::ALL {
        for _ in 0..3 {
            let b = random_sym(&mut rng, 3, 1.0);
            let tau = TAUS[rng.random_range(0..4)];
            let p = prox(&b, tau, kind).unwrap();
            let fp = objective(&p, &b, tau, kind);
            for k in 0..10_000 {
                let scale = 10f64.powi(-(k % 6) as i32);
                let q = SymMatrix::new(p.matrix().add_scaled(1.0, random_sym(&mut rng, 3, scale).matrix()).unwrap()).unwrap();
                assert!(fp <= objective(&q, &b, tau, kind) + 1e-9, "{kind} tau={tau}");
            }
        }
    }
}

/// Lower estimate of `sup_{‖A‖ ≤ 1} ⟨A, B⟩` from a mixture of random
/// directions refined by hill climbing.
fn dual_norm_probe(b: &Matrix, kind: NormKind, rng: &mut ChaCha8Rng) -> f64 {
    let n = b.dim();
    let ratio = |a: &Matrix| {
        let nv = norm_general(a, kind);
        if nv == 0.0 {
            0.0
        } else {
            a.inner(b).unwrap() / nv
        }
    };
    let mut best = Matrix::zeros(n);
    let mut best_val = 0.0;
    for k in 0..1000 {
        let cand = match k % 4 {
            0 => random_matrix(rng, n, 1.0),
            1 => {
                let mut a = Matrix::zeros(n);
                a[(rng.random_range(0..n), rng.random_range(0..n))] = 1.0;
                a
            }
            2 => {
                let mut a = Matrix::zeros(n);
                let r = rng.random_range(0..n);
                for l in 0..n {
                    a[(r, l)] = rng.random_range(-1.0..1.0);
                }
                a
            }
            _ => {
                let u = common::random_vec(rng, n, 1.0);
                let v = common::random_vec(rng, n, 1.0);
                Matrix::outer(&u, &v).unwrap()
            }
        };
        for sign in [1.0, -1.0] {
            let c = cand.scale(sign);
            let v = ratio(&c);
            if v > best_val {
                best_val = v;
                best = c;
            }
        }
    }
    // rank-one directions u vᵀ, refined in factor space
    let mut u = common::random_vec(rng, n, 1.0);
    let mut v = common::random_vec(rng, n, 1.0);
    let mut r1_val = ratio(&Matrix::outer(&u, &v).unwrap());
    let mut step = 0.5;
    for _ in 0..2000 {
        let du = common::random_vec(rng, n, step);
        let dv = common::random_vec(rng, n, step);
        let cu: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let cv: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + b).collect();
        let c = Matrix::outer(&cu, &cv).unwrap();
        let val = ratio(&c);
        if val > r1_val {
            r1_val = val;
            u = cu;
            v = cv;
        } else {
            step = (step * 0.995).max(1e-4);
        }
    }
    if r1_val > best_val {
        best_val = r1_val;
        best = Matrix::outer(&u, &v).unwrap();
    }
    let mut step = 0.5;
    for k in 0..3000 {
        let mut c = best.clone();
        if k % 2 == 0 {
            c = c.add_scaled(step, &random_matrix(rng, n, 1.0)).unwrap();
        } else {
            c[(rng.random_range(0..n), rng.random_range(0..n))] += step * rng.random_range(-1.0..1.0);
        }
        let v = ratio(&c);
        if v > best_val {
            best_val = v;
            best = c;
        } else {
            step = (step * 0.995).max(1e-4);
        }
    }
    best_val
}

#[test]
fn dual_norms_match_monte_carlo_probe() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for kind in NormKind::ALL {
        for _ in 0..10 {
            let n = rng.random_range(2..=4);
            let b = random_matrix(&mut rng, n, 1.0);
            let d = dual_norm(&b, kind);
            let probe = dual_norm_probe(&b, kind, &mut rng);
            assert!(probe <= d + 1e-10, "{kind}: probe {probe} above dual {d}");
            assert!(probe >= 0.95 * d, "{kind}: probe {probe} far below dual {d}");
        }
    }
}
