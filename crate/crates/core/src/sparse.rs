//! Compressed sparse rows and a preconditioned conjugate-gradient solver
//! for the symmetric positive-definite systems of the Newton iterations.

use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Triplet accumulator; duplicate entries are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *vals.last_mut().expect("nonempty") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut()
            .with_min_len(512)
            .enumerate()
            .for_each(|(i, yi)| {
                *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
            });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn block_inverses(&self, block: usize) -> Vec<f64> {
        let nb = self.n / block;
        let mut out = vec![0.0; nb * block * block];
        for b in 0..nb {
            let mut m = nalgebra::DMatrix::<f64>::zeros(block, block);
            for r in 0..block {
                let i = b * block + r;
                for (j, v) in self.row(i) {
                    if j / block == b {
                        m[(r, j % block)] = v;
                    }
                }
            }
            let inv = m.clone().try_inverse().unwrap_or_else(|| {
                nalgebra::DMatrix::from_diagonal(&m.diagonal().map(|d| {
                    if d.abs() > 0.0 {
                        1.0 / d
                    } else {
                        1.0
                    }
                }))
            });
            for r in 0..block {
                for c in 0..block {
                    out[b * block * block + r * block + c] = inv[(r, c)];
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` by conjugate gradients with a block-Jacobi
/// preconditioner. `x` holds the initial guess on entry.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    block: usize,
    rel_tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = a.dim();
    assert!(block > 0 && n % block == 0);
    let inv = a.block_inverses(block);
    let apply_prec = |r: &[f64], z: &mut [f64]| {
        for bi in 0..n / block {
            for rr in 0..block {
                let mut s = 0.0;
                for cc in 0..block {
                    s += inv[bi * block * block + rr * block + cc] * r[bi * block + cc];
                }
                z[bi * block + rr] = s;
            }
        }
    };
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = a.mul(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    apply_prec(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while it < max_iter && res > rel_tol {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        apply_prec(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    CgOutcome {
        iterations: it,
        relative_residual: res,
        converged: res <= rel_tol,
    }
}
