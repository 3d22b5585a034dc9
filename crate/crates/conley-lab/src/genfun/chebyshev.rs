//! Tensor-product Chebyshev interpolation on a cube `[−r, r]^D`.

use nalgebra::{DMatrix, DVector};

/// Vector-valued interpolant on Chebyshev–Lobatto points.
#[derive(Clone, Debug)]
pub struct ChebyshevTable {
    pub dim: usize,
    pub degree: usize,
    pub radius: f64,
    /// `coeffs[c][multi-index]`, multi-index flattened with dimension 0 fastest.
    coeffs: Vec<Vec<f64>>,
}

/// Lobatto nodes `cos(πk/N)` on `[−1, 1]`.
pub fn lobatto_nodes(degree: usize) -> Vec<f64> {
    (0..=degree).map(|k| (std::f64::consts::PI * k as f64 / degree as f64).cos()).collect()
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact for polynomials of degree `2m − 1`.
pub fn gauss_legendre_unit(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (1.0 + x), 0.5 * w)
        })
        .collect()
}

fn multi_index(mut flat: usize, dim: usize, base: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for slot in idx.iter_mut() {
        *slot = flat % base;
        flat /= base;
    }
    idx
}

/// `T_k, T_k′, T_k″` at `x` for `k = 0..=n`.
fn basis(x: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    let mut dd = vec![0.0; n + 1];
    t[0] = 1.0;
    if n >= 1 {
        t[1] = x;
        d[1] = 1.0;
    }
    for k in 1..n {
        t[k + 1] = 2.0 * x * t[k] - t[k - 1];
        d[k + 1] = 2.0 * t[k] + 2.0 * x * d[k] - d[k - 1];
        dd[k + 1] = 4.0 * d[k] + 2.0 * x * dd[k] - dd[k - 1];
    }
    (t, d, dd)
}

impl ChebyshevTable {
    /// Interpolates `f` (with `components` outputs) sampled at the tensor nodes.
    pub fn build(dim: usize, degree: usize, radius: f64, components: usize, f: impl Fn(&DVector<f64>) -> Vec<f64> + Sync) -> Self {
        use rayon::prelude::*;
        let base = degree + 1;
        let total = base.pow(dim as u32);
        let nodes = lobatto_nodes(degree);
        let samples: Vec<Vec<f64>> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let idx = multi_index(flat, dim, base);
                let z = DVector::from_fn(dim, |i, _| radius * nodes[idx[i]]);
                f(&z)
            })
            .collect();
        let mut coeffs = Vec::with_capacity(components);
        for c in 0..components {
            let mut v: Vec<f64> = samples.iter().map(|s| s[c]).collect();
            for axis in 0..dim {
                v = transform_axis(&v, axis, degree);
            }
            coeffs.push(v);
        }
        ChebyshevTable { dim, degree, radius, coeffs }
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.iter().all(|v| v.abs() <= self.radius * (1.0 + 1e-12))
    }

    /// Values, gradients and Hessians of every component at `z`.
    pub fn eval(&self, z: &DVector<f64>, order: usize) -> (Vec<f64>, Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
        let n = self.degree;
        let base = n + 1;
        let s = 1.0 / self.radius;
        let b: Vec<_> = (0..self.dim).map(|i| basis(z[i] * s, n)).collect();
        let comps = self.coeffs.len();
        let mut val = vec![0.0; comps];
        let mut grad = vec![DVector::zeros(self.dim); comps];
        let mut hess = vec![DMatrix::zeros(self.dim, self.dim); comps];
        let total = base.pow(self.dim as u32);
        let mut fac_d = vec![0.0; self.dim];
        for flat in 0..total {
            let idx = multi_index(flat, self.dim, base);
            let w: f64 = (0..self.dim).map(|a| b[a].0[idx[a]]).product();
            if order >= 1 {
                for a in 0..self.dim {
                    fac_d[a] = (0..self.dim).map(|c| if c == a { b[c].1[idx[c]] } else { b[c].0[idx[c]] }).product::<f64>() * s;
                }
            }
            for c in 0..comps {
                let k = self.coeffs[c][flat];
                if k == 0.0 {
                    continue;
                }
                val[c] += k * w;
                if order >= 1 {
                    for a in 0..self.dim {
                        grad[c][a] += k * fac_d[a];
                    }
                }
                if order >= 2 {
                    for a in 0..self.dim {
                        for e in a..self.dim {
                            let p: f64 = (0..self.dim)
                                .map(|q| {
                                    let dq = (q == a) as usize + (q == e) as usize;
                                    match dq {
                                        0 => b[q].0[idx[q]],
                                        1 => b[q].1[idx[q]],
                                        _ => b[q].2[idx[q]],
                                    }
                                })
                                .product();
                            hess[c][(a, e)] += k * p * s * s;
                        }
                    }
                }
            }
        }
        if order >= 2 {
            for h in hess.iter_mut() {
                for a in 0..self.dim {
                    for e in 0..a {
                        h[(a, e)] = h[(e, a)];
                    }
                }
            }
        }
        (val, grad, hess)
    }
}

/// Discrete Chebyshev transform along one axis of the flattened tensor.
fn transform_axis(v: &[f64], axis: usize, degree: usize) -> Vec<f64> {
    let base = degree + 1;
    let stride = base.pow(axis as u32);
    let nf = degree as f64;
    let mut out = vec![0.0; v.len()];
    let cos: Vec<Vec<f64>> = (0..=degree)
        .map(|j| (0..=degree).map(|k| (std::f64::consts::PI * (j * k) as f64 / nf).cos()).collect())
        .collect();
    for flat in 0..v.len() {
        let pos = (flat / stride) % base;
        if pos != 0 {
            continue;
        }
        for j in 0..=degree {
            let mut acc = 0.0;
            for k in 0..=degree {
                let w = if k == 0 || k == degree { 0.5 } else { 1.0 };
                acc += w * v[flat + k * stride] * cos[j][k];
            }
            let mut c = 2.0 * acc / nf;
            if j == 0 || j == degree {
                c *= 0.5;
            }
            out[flat + j * stride] = c;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact() {
        for m in 1..12 {
            let q = gauss_legendre_unit(m);
            for k in 0..2 * m {
                let s: f64 = q.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - 1.0 / (k + 1) as f64).abs() < 1e-13, "m = {m}, k = {k}");
            }
        }
    }

    #[test]
    fn reproduces_smooth_function_and_derivatives() {
        let f = |z: &DVector<f64>| vec![(z[0] + 0.3 * z[1]).sin() * (0.5 * z[1]).exp()];
        let t = ChebyshevTable::build(2, 20, 0.5, 1, f);
        let z = DVector::from_vec(vec![0.17, -0.33]);
        let (v, g, h) = t.eval(&z, 2);
        let a = z[0] + 0.3 * z[1];
        let e = (0.5 * z[1]).exp();
        assert!((v[0] - a.sin() * e).abs() < 1e-13);
        assert!((g[0][0] - a.cos() * e).abs() < 1e-11);
        assert!((g[0][1] - (0.3 * a.cos() + 0.5 * a.sin()) * e).abs() < 1e-11);
        assert!((h[0][(0, 0)] + a.sin() * e).abs() < 1e-9);
        assert!((h[0][(0, 1)] - (-0.3 * a.sin() + 0.5 * a.cos()) * e).abs() < 1e-9);
    }
}
