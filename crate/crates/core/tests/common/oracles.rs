//! Independent reference computations used by the integration and
//! acceptance suites. Nothing here calls into the library's solvers.

#![allow(dead_code)]

/// Row-major dense square matrix helpers.
pub fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn fro(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn l1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn mixed21(a: &[f64], n: usize) -> f64 {
    (0..n).map(|i| fro(&a[i * n..(i + 1) * n])).sum()
}

pub fn symmetrized(a: &[f64], n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            s[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        }
    }
    s
}

/// Matrix sign of a symmetric matrix by Newton–Schulz iteration. Eigenvalues
/// far below the largest stay partially converged, which keeps the result a
/// subgradient of the nuclear norm up to that scale.
pub fn matrix_sign(a: &[f64], n: usize) -> Vec<f64> {
    if n == 3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            m[i].copy_from_slice(&a[i * 3..i * 3 + 3]);
        }
        return sign_fixed(m).iter().flatten().copied().collect();
    }
    let mut x = vec![0.0; n * n];
    let mut x2 = vec![0.0; n * n];
    let mut next = vec![0.0; n * n];
    let scale = fro(a);
    if scale == 0.0 {
        return x;
    }
    for (xv, av) in x.iter_mut().zip(a) {
        *xv = av / scale;
    }
    for _ in 0..40 {
        // x2 = 3I − X², next = ½ X x2
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += x[i * n + k] * x[k * n + j];
                }
                x2[i * n + j] = if i == j { 3.0 - acc } else { -acc };
            }
        }
        let mut moved = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += x[i * n + k] * x2[k * n + j];
                }
                next[i * n + j] = 0.5 * acc;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = 0.5 * (next[i * n + j] + next[j * n + i]);
                moved += (v - x[i * n + j]).powi(2);
                x2[i * n + j] = v;
            }
        }
        std::mem::swap(&mut x, &mut x2);
        if moved < 1e-24 {
            break;
        }
    }
    x
}

/// Same iteration on a stack matrix.
fn sign_fixed<const N: usize>(a: [[f64; N]; N]) -> [[f64; N]; N] {
    let scale = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = [[0.0; N]; N];
    if scale == 0.0 {
        return x;
    }
    for i in 0..N {
        for j in 0..N {
            x[i][j] = a[i][j] / scale;
        }
    }
    for _ in 0..40 {
        let mut x2 = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut acc = 0.0;
                for k in 0..N {
                    acc += x[i][k] * x[k][j];
                }
                x2[i][j] = if i == j { 3.0 - acc } else { -acc };
            }
        }
        let mut next = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut acc = 0.0;
                for k in 0..N {
                    acc += x[i][k] * x2[k][j];
                }
                next[i][j] = 0.5 * acc;
            }
        }
        let mut moved = 0.0;
        let mut sym = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                let v = 0.5 * (next[i][j] + next[j][i]);
                moved += (v - x[i][j]) * (v - x[i][j]);
                sym[i][j] = v;
            }
        }
        x = sym;
        if moved < 1e-24 {
            break;
        }
    }
    x
}

/// Nuclear norm of a symmetric matrix as `tr(A · sign(A))`.
pub fn trace_norm_sym(a: &[f64], n: usize) -> f64 {
    let s = matrix_sign(a, n);
    a.iter().zip(&s).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reg {
    L1,
    Fro,
    Mixed21,
    Trace,
}

pub fn reg_value(a: &[f64], n: usize, reg: Reg) -> f64 {
    match reg {
        Reg::L1 => l1(a),
        Reg::Fro => fro(a),
        Reg::Mixed21 => mixed21(a, n),
        Reg::Trace => trace_norm_sym(a, n),
    }
}

/// One subgradient of the regularizer, projected onto symmetric matrices.
pub fn reg_subgradient(a: &[f64], n: usize, reg: Reg) -> Vec<f64> {
    match reg {
        Reg::L1 => a.iter().map(|v| if *v > 0.0 { 1.0 } else if *v < 0.0 { -1.0 } else { 0.0 }).collect(),
        Reg::Fro => {
            let f = fro(a);
            if f == 0.0 {
                vec![0.0; n * n]
            } else {
                a.iter().map(|v| v / f).collect()
            }
        }
        Reg::Mixed21 => {
            let mut g = vec![0.0; n * n];
            for i in 0..n {
                let r = fro(&a[i * n..(i + 1) * n]);
                if r > 0.0 {
                    for j in 0..n {
                        g[i * n + j] = a[i * n + j] / r;
                    }
                }
            }
            symmetrized(&g, n)
        }
        Reg::Trace => matrix_sign(a, n),
    }
}

pub fn prox_objective(a: &[f64], b: &[f64], n: usize, tau: f64, reg: Reg) -> f64 {
    0.5 * dist(a, b).powi(2) + tau * reg_value(a, n, reg)
}

/// Minimizer of `½‖A − B‖² + τ R(A)` over symmetric `A` by the 1/t
/// subgradient method, which for this 1-strongly convex objective reduces to
/// `A_{t+1} = B − τ · mean(G_1..G_t)`. Returns the best iterate seen.
pub fn prox_oracle(b: &[f64], n: usize, tau: f64, reg: Reg, iters: usize) -> Vec<f64> {
    let mut a = b.to_vec();
    let mut g_sum = vec![0.0; n * n];
    let mut best = a.clone();
    let mut best_obj = f64::INFINITY;
    for t in 1..=iters + 1 {
        let g = reg_subgradient(&a, n, reg);
        let r = match reg {
            Reg::Trace => a.iter().zip(&g).map(|(x, y)| x * y).sum(),
            _ => reg_value(&a, n, reg),
        };
        let obj = 0.5 * dist(&a, b).powi(2) + tau * r;
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&a);
        }
        if t > iters {
            break;
        }
        for (s, v) in g_sum.iter_mut().zip(&g) {
            *s += v;
        }
        for k in 0..n * n {
            a[k] = b[k] - tau * g_sum[k] / t as f64;
        }
    }
    best
}

/// `(1/m) Σ_i [1 − (1/(m r)) Σ_j y_i y_j x_iᵀ A x_j]_+` by the double sum.
pub fn similarity_error_naive(a: &[f64], xs: &[Vec<f64>], ys: &[f64], r: f64) -> f64 {
    let m = xs.len();
    let d = xs[0].len();
    let mut total = 0.0;
    for i in 0..m {
        let mut inner = 0.0;
        for j in 0..m {
            let mut k = 0.0;
            for p in 0..d {
                for q in 0..d {
                    k += xs[i][p] * a[p * d + q] * xs[j][q];
                }
            }
            inner += ys[i] * ys[j] * k;
        }
        total += (1.0 - inner / (m as f64 * r)).max(0.0);
    }
    total / m as f64
}

/// Regularizer of `[[a, b], [b, c]]` in closed form.
pub fn reg2(a: f64, b: f64, c: f64, reg: Reg) -> f64 {
    match reg {
        Reg::L1 => a.abs() + 2.0 * b.abs() + c.abs(),
        Reg::Fro => (a * a + 2.0 * b * b + c * c).sqrt(),
        Reg::Mixed21 => (a * a + b * b).sqrt() + (b * b + c * c).sqrt(),
        Reg::Trace => {
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
            (mean + rad).abs() + (mean - rad).abs()
        }
    }
}

/// Norm of the symmetric off-diagonal unit `E12 + E21`.
fn off_unit(reg: Reg) -> f64 {
    match reg {
        Reg::Fro => std::f64::consts::SQRT_2,
        _ => 2.0,
    }
}

/// The d = 2 objective as an affine-plus-hinge function of `(a, b, c)`.
pub struct TinyObjective {
    /// Per-sample coefficients `(c_a, c_b, c_c)` so that the sample margin is
    /// `c_a a + c_b b + c_c c`.
    coef: Vec<[f64; 3]>,
    lambda: f64,
    reg: Reg,
    lip: [f64; 3],
}

impl TinyObjective {
    pub fn new(xs: &[Vec<f64>], ys: &[f64], r: f64, lambda: f64, reg: Reg) -> Self {
        let m = xs.len() as f64;
        let s = xs.iter().zip(ys).fold([0.0, 0.0], |acc, (x, y)| [acc[0] + y * x[0], acc[1] + y * x[1]]);
        let coef: Vec<[f64; 3]> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let w = y / (m * r);
                [w * x[0] * s[0], w * (x[0] * s[1] + x[1] * s[0]), w * x[1] * s[1]]
            })
            .collect();
        let mut lip = [lambda, lambda * off_unit(reg), lambda];
        for c in &coef {
            for k in 0..3 {
                lip[k] += c[k].abs() / m;
            }
        }
        TinyObjective { coef, lambda, reg, lip }
    }

    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let m = self.coef.len() as f64;
        let err: f64 = self
            .coef
            .iter()
            .map(|c| (1.0 - c[0] * p[0] - c[1] * p[1] - c[2] * p[2]).max(0.0))
            .sum::<f64>()
            / m;
        err + self.lambda * reg2(p[0], p[1], p[2], self.reg)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridOutcome {
    /// Smallest objective among the grid points actually evaluated.
    pub best_visited: f64,
    /// A feasible grid point beating `target − slack`, if any exists.
    pub counterexample: Option<([f64; 3], f64)>,
    pub leaves: u64,
}

/// Exhaustive search of the step-`h` grid over symmetric 2×2 matrices with
/// `R(A) ≤ radius`, pruned by the per-coordinate Lipschitz bound. A block is
/// discarded only when no grid point in it can have objective below
/// `target − slack`, so `counterexample` is `None` iff every feasible grid
/// point satisfies `f ≥ target − slack`.
pub fn tiny_grid_search(obj: &TinyObjective, radius: f64, h: f64, target: f64, slack: f64) -> GridOutcome {
    // points with λ R(A) > target cannot win, and |a|,|b|,|c| ≤ R(A) for
    // every norm in use
    let half = radius.min(target / obj.lambda);
    let n = (half / h).floor() as i64;
    let mut out = GridOutcome {
        best_visited: f64::INFINITY,
        counterexample: None,
        leaves: 0,
    };
    let mut stack = vec![[(-n, n), (-n, n), (-n, n)]];
    while let Some(block) = stack.pop() {
        let mid = [
            (block[0].0 + block[0].1).div_euclid(2),
            (block[1].0 + block[1].1).div_euclid(2),
            (block[2].0 + block[2].1).div_euclid(2),
        ];
        let p = [mid[0] as f64 * h, mid[1] as f64 * h, mid[2] as f64 * h];
        let f = obj.eval(p);
        let single = block.iter().all(|(lo, hi)| lo == hi);
        if single {
            out.leaves += 1;
            if reg2(p[0], p[1], p[2], obj.reg) <= radius + 1e-12 {
                out.best_visited = out.best_visited.min(f);
                if f < target - slack && out.counterexample.is_none() {
                    out.counterexample = Some((p, f));
                }
            }
            continue;
        }
        let mut lower = f;
        for k in 0..3 {
            let w = (mid[k] - block[k].0).max(block[k].1 - mid[k]) as f64 * h;
            lower -= obj.lip[k] * w;
        }
        if lower >= target - slack {
            continue;
        }
        // split the widest coordinate
        let k = (0..3).max_by_key(|&k| block[k].1 - block[k].0).unwrap();
        let split = (block[k].0 + block[k].1).div_euclid(2);
        let mut left = block;
        left[k].1 = split;
        let mut right = block;
        right[k].0 = split + 1;
        stack.push(left);
        stack.push(right);
    }
    out
}

/// Closest point of the L1 sphere `Σ|u_i| = radius` in 2 or 3 dimensions,
/// brute-forced over a barycentric grid on every face. Grid spacing along
/// each face edge is at most `h`, and every face vertex is a grid point.
pub fn l1_sphere_grid_argmin(v: &[f64], radius: f64, h: f64) -> Vec<f64> {
    let n = v.len();
    assert!(n == 2 || n == 3);
    let steps = (radius / h).ceil() as usize;
    let mut best = vec![0.0; n];
    let mut best_d = f64::INFINITY;
    let mut consider = |u: &[f64]| {
        let d = dist(u, v);
        if d < best_d {
            best_d = d;
            best = u.to_vec();
        }
    };
    for signs in 0..(1usize << n) {
        let sgn: Vec<f64> = (0..n).map(|i| if signs >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        if n == 2 {
            for i in 0..=steps {
                let a = radius * i as f64 / steps as f64;
                consider(&[sgn[0] * a, sgn[1] * (radius - a)]);
            }
        } else {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let a = radius * i as f64 / steps as f64;
                    let b = radius * j as f64 / steps as f64;
                    let c = (radius - a - b).max(0.0);
                    consider(&[sgn[0] * a, sgn[1] * b, sgn[2] * c]);
                }
            }
        }
    }
    best
}
