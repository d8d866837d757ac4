//! Test-side oracles, independent of the library's solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn p_norm(v: &[f64], p: &str) -> f64 {
    match p {
        "L1" => v.iter().map(|x| x.abs()).sum(),
        "L2" => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        _ => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// `I + s·G` with `G` uniform in `[-1,1]`, `s ≤ 0.3/n`, so the smallest
/// singular value stays above `0.7`.
pub fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let s = 0.3 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + s * rng.random_range(-1.0..1.0))
}

/// `min ‖A⁻¹(x₀ + εu)‖` over a grid of the unit sphere of the norm `p`
/// (dimension 1 to 3), refined by a shrinking local grid.
///
/// The minimizer of the norm over `K = A⁻¹B(x₀,ε)` lies on the boundary
/// whenever `0 ∉ K`, and the boundary is the image of the sphere.
pub fn grid_oracle(a: &DMatrix<f64>, x0: &DVector<f64>, eps: f64, p: &str, step: f64) -> f64 {
    let n = x0.len();
    let inv = a.clone().try_inverse().expect("oracle needs an invertible matrix");
    let eval = |dir: &[f64]| -> f64 {
        let nd = p_norm(dir, p);
        let u = DVector::from_fn(n, |i, _| dir[i] / nd);
        let z = &inv * (x0 + u * eps);
        p_norm(z.as_slice(), p)
    };
    let point = |ang: &[f64]| -> Vec<f64> {
        match n {
            1 => vec![if ang[0] < 0.0 { -1.0 } else { 1.0 }],
            2 => vec![ang[0].cos(), ang[0].sin()],
            _ => vec![ang[1].sin() * ang[0].cos(), ang[1].sin() * ang[0].sin(), ang[1].cos()],
        }
    };
    if n == 1 {
        return eval(&[1.0]).min(eval(&[-1.0]));
    }
    let two_pi = std::f64::consts::TAU;
    let pi = std::f64::consts::PI;
    let mut best = f64::INFINITY;
    let mut best_ang = vec![0.0; n - 1];
    let steps_t = (two_pi / step).ceil() as usize;
    if n == 2 {
        for i in 0..steps_t {
            let ang = [i as f64 * step];
            let v = eval(&point(&ang));
            if v < best {
                best = v;
                best_ang = ang.to_vec();
            }
        }
    } else {
        let steps_p = (pi / step).ceil() as usize;
        for j in 0..=steps_p {
            let phi = (j as f64 * step).min(pi);
            for i in 0..steps_t {
                let ang = [i as f64 * step, phi];
                let v = eval(&point(&ang));
                if v < best {
                    best = v;
                    best_ang = ang.to_vec();
                }
            }
        }
    }
    let mut h = step;
    while h > 1e-9 {
        let mut improved = true;
        while improved {
            improved = false;
            for k in 0..best_ang.len() {
                for s in [-1.0, 1.0] {
                    let mut ang = best_ang.clone();
                    ang[k] += s * h;
                    let v = eval(&point(&ang));
                    if v < best {
                        best = v;
                        best_ang = ang;
                        improved = true;
                    }
                }
            }
        }
        h /= 4.0;
    }
    best
}

/// `min cᵀx` over `{x : Gx ≤ h}` by enumerating every vertex, i.e. every
/// nonsingular choice of `dim` active rows. Returns `None` when no vertex is
/// feasible.
pub fn vertex_enumeration(c: &[f64], g: &[Vec<f64>], h: &[f64], feas_tol: f64) -> Option<(f64, Vec<f64>)> {
    let k = c.len();
    let m = g.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    if m < k {
        return None;
    }
    loop {
        let a = DMatrix::from_fn(k, k, |r, col| g[idx[r]][col]);
        let b = DVector::from_fn(k, |r, _| h[idx[r]]);
        let lu = a.lu();
        if lu.determinant().abs() > 1e-12 {
            if let Some(x) = lu.solve(&b) {
                let feasible = (0..m).all(|r| {
                    let lhs: f64 = g[r].iter().zip(x.iter()).map(|(p, q)| p * q).sum();
                    lhs <= h[r] + feas_tol * (1.0 + h[r].abs())
                });
                if feasible {
                    let obj: f64 = c.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
                    if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                        best = Some((obj, x.as_slice().to_vec()));
                    }
                }
            }
        }
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + m - k {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `min ‖y‖_p` subject to `‖Ay − x₀‖_p ≤ ε` for `p ∈ {L1, LINF}` by vertex
/// enumeration of the epigraph LP.
pub fn polyhedral_oracle(a: &DMatrix<f64>, x0: &DVector<f64>, eps: f64, p: &str) -> f64 {
    let n = x0.len();
    let mut g = Vec::new();
    let mut h = Vec::new();
    if p == "LINF" {
        // variables (y, t): |y_j| ≤ t, |(Ay − x₀)_i| ≤ ε
        let k = n + 1;
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; k];
                row[j] = s;
                row[n] = -1.0;
                g.push(row);
                h.push(0.0);
            }
        }
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; k];
                for j in 0..n {
                    row[j] = s * a[(i, j)];
                }
                g.push(row);
                h.push(eps + s * x0[i]);
            }
        }
        let mut c = vec![0.0; k];
        c[n] = 1.0;
        vertex_enumeration(&c, &g, &h, 1e-10).expect("feasible").0
    } else {
        // variables (y, t, s): |y_j| ≤ t_j, |(Ay − x₀)_i| ≤ s_i, Σ s ≤ ε
        let k = 3 * n;
        for j in 0..n {
            for sg in [1.0, -1.0] {
                let mut row = vec![0.0; k];
                row[j] = sg;
                row[n + j] = -1.0;
                g.push(row);
                h.push(0.0);
            }
        }
        for i in 0..n {
            for sg in [1.0, -1.0] {
                let mut row = vec![0.0; k];
                for j in 0..n {
                    row[j] = sg * a[(i, j)];
                }
                row[2 * n + i] = -1.0;
                g.push(row);
                h.push(sg * x0[i]);
            }
        }
        let mut row = vec![0.0; k];
        for i in 0..n {
            row[2 * n + i] = 1.0;
        }
        g.push(row);
        h.push(eps);
        let mut c = vec![0.0; k];
        for j in 0..n {
            c[n + j] = 1.0;
        }
        vertex_enumeration(&c, &g, &h, 1e-10).expect("feasible").0
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().max()
}

/// Exact L1 and LINF operator norms: max column sum and max row sum.
pub fn l1_operator_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn linf_operator_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows()).map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn mat_pow(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..n {
        out = &out * a;
    }
    out
}
