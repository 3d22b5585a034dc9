//! Constructive squeezing of a unipotent symplectic map towards the identity.
//!
//! The recursion builds a symplectic basis `S = [L | L']` in which `Φ` is block
//! upper triangular, `S⁻¹ΦS = [[A, B], [0, A^{-T}]]` with `A` unitriangular by
//! levels. Scaling level `j` of `L` by `λ^{D-j+1}` and its dual in `L'` by the
//! reciprocal shrinks every off-diagonal entry by a positive power of `λ`.

use super::field::{omega_gram, omega_pair, Field, Mat};
use crate::error::{Error, Result};

/// Output of the basis recursion, in the coordinates it was called with.
#[derive(Clone, Debug)]
pub struct AdaptedBasis<T> {
    /// Symplectic basis: first `k` columns span `L`, last `k` span `L'`.
    pub s: Mat<T>,
    /// Level of each `L` column; 0 marks split-off pieces where `Φ` is the identity.
    pub levels: Vec<usize>,
}

fn is_negligible_col<T: Field>(v: &Mat<T>, tol: f64) -> bool {
    v.is_zero(tol)
}

/// Columns of `cands` that extend `base` to a larger independent set, greedily.
fn extend_basis<T: Field>(base: &Mat<T>, cands: &Mat<T>, want: usize, tol: f64) -> Result<Mat<T>> {
    let mut cur = base.clone();
    let mut picked = Vec::new();
    let mut rank = if base.cols == 0 { 0 } else { base.rank(tol) };
    for j in 0..cands.cols {
        if picked.len() == want {
            break;
        }
        let trial = Mat::hstack(&[&cur, &cands.column(j)]);
        let r = trial.rank(tol);
        if r > rank {
            rank = r;
            cur = trial;
            picked.push(j);
        }
    }
    if picked.len() != want {
        return Err(Error::Internal(format!(
            "could not complete basis: found {} of {} vectors",
            picked.len(),
            want
        )));
    }
    Ok(cands.select_columns(&picked))
}

/// v ← v − ω(v, f)e + ω(v, e)f, removing the span(e, f) component symplectically.
fn project_out_pair<T: Field>(v: &Mat<T>, e: &Mat<T>, f: &Mat<T>) -> Mat<T> {
    let a = omega_pair(v, f);
    let b = omega_pair(v, e);
    v.sub(&e.scale(&a)).add(&f.scale(&b))
}

/// Symplectic Gram–Schmidt on a spanning family of a symplectic subspace.
/// Returns `(E, F)` with ω(e_i, f_j) = δ_ij and all other pairings zero.
fn symplectic_gram_schmidt<T: Field>(vs: &Mat<T>, dim: usize, tol: f64) -> Result<(Mat<T>, Mat<T>)> {
    let mut pool: Vec<Mat<T>> = (0..vs.cols).map(|j| vs.column(j)).collect();
    let mut es = Vec::new();
    let mut fs = Vec::new();
    while es.len() < dim {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..pool.len() {
            for j in (i + 1)..pool.len() {
                let w = omega_pair(&pool[i], &pool[j]);
                if w.negligible(tol) {
                    continue;
                }
                let m = w.magnitude();
                if best.map_or(true, |b| m > b.2) {
                    best = Some((i, j, m));
                }
            }
        }
        let Some((i, j, _)) = best else {
            return Err(Error::Internal("degenerate form in symplectic Gram-Schmidt".into()));
        };
        let e = pool[i].clone();
        let w = omega_pair(&e, &pool[j]);
        let f = pool[j].scale(&T::one().div(&w));
        let mut next = Vec::new();
        for (k, v) in pool.iter().enumerate() {
            if k == i || k == j {
                continue;
            }
            let p = project_out_pair(v, &e, &f);
            if !is_negligible_col(&p, tol) {
                next.push(p);
            }
        }
        pool = next;
        es.push(e);
        fs.push(f);
    }
    let er: Vec<&Mat<T>> = es.iter().collect();
    let fr: Vec<&Mat<T>> = fs.iter().collect();
    Ok((Mat::hstack(&er), Mat::hstack(&fr)))
}

/// Left inverse `W⁺ = −Ω_m WᵀΩ_k` of a symplectic basis `W` (2k × 2m) of a subspace.
fn symplectic_left_inverse<T: Field>(w: &Mat<T>) -> Mat<T> {
    let m = w.cols / 2;
    let k = w.rows / 2;
    Mat::<T>::omega(m).neg_mat().mul(&w.transpose()).mul(&Mat::omega(k))
}

trait NegMat {
    fn neg_mat(&self) -> Self;
}

impl<T: Field> NegMat for Mat<T> {
    fn neg_mat(&self) -> Self {
        self.scale(&T::one().neg())
    }
}

/// Builds an adapted symplectic basis for a unipotent `phi` given in standard
/// local coordinates of dimension 2k. `tol` is the absolute zero threshold
/// (ignored by exact fields).
pub fn adapted_basis<T: Field>(phi: &Mat<T>, tol: f64, depth: usize) -> Result<AdaptedBasis<T>> {
    let dim = phi.rows;
    let k = dim / 2;
    if k == 0 {
        return Ok(AdaptedBasis { s: Mat::zeros(0, 0), levels: vec![] });
    }
    if depth > 2 * k + 2 {
        return Err(Error::Internal("normal-form recursion too deep".into()));
    }
    let n_mat = phi.sub(&Mat::identity(dim));
    let kernel = n_mat.nullspace(tol);
    let d = kernel.cols;
    if d == 0 {
        return Err(Error::Precondition("map has no fixed vector; not unipotent".into()));
    }
    let gram = omega_gram(&kernel, &kernel);

    if !gram.is_zero(tol) {
        // K contains a symplectic plane on which Φ is the identity: split it off.
        let (mut bi, mut bj, mut bm) = (0, 0, -1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                let m = gram.get(i, j).magnitude();
                if !gram.get(i, j).negligible(tol) && m > bm {
                    (bi, bj, bm) = (i, j, m);
                }
            }
        }
        let e = kernel.column(bi);
        let f = kernel.column(bj).scale(&T::one().div(gram.get(bi, bj)));
        let std = Mat::<T>::identity(dim);
        let projected: Vec<Mat<T>> = (0..dim).map(|j| project_out_pair(&std.column(j), &e, &f)).collect();
        let pr: Vec<&Mat<T>> = projected.iter().collect();
        let (we, wf) = symplectic_gram_schmidt(&Mat::hstack(&pr), k - 1, tol)?;
        let w = Mat::hstack(&[&we, &wf]);
        let sub = if k > 1 {
            let phi_sub = symplectic_left_inverse(&w).mul(phi).mul(&w);
            Some(adapted_basis(&phi_sub, tol, depth + 1)?)
        } else {
            None
        };
        let mut l_cols = vec![e];
        let mut lp_cols = vec![f];
        let mut levels = vec![0];
        if let Some(sub) = sub {
            let ws = w.mul(&sub.s);
            let m = k - 1;
            l_cols.push(ws.select_columns(&(0..m).collect::<Vec<_>>()));
            lp_cols.push(ws.select_columns(&(m..2 * m).collect::<Vec<_>>()));
            levels.extend(sub.levels);
        }
        let mut parts: Vec<&Mat<T>> = l_cols.iter().collect();
        parts.extend(lp_cols.iter());
        return Ok(AdaptedBasis { s: Mat::hstack(&parts), levels });
    }

    // K isotropic: V = K ⊕ V0 ⊕ N with V0 symplectic inside K^ω and N dual to K.
    let k_omega = omega_gram(&kernel, &Mat::identity(dim)).nullspace(tol);
    let v0_dim = k - d;
    let (e0, f0) = if v0_dim > 0 {
        let comp = extend_basis(&kernel, &k_omega, 2 * v0_dim, tol)?;
        symplectic_gram_schmidt(&comp, v0_dim, tol)?
    } else {
        (Mat::zeros(dim, 0), Mat::zeros(dim, 0))
    };
    let g = extend_basis(&k_omega, &Mat::identity(dim), d, tol)?;
    let mut g_cols: Vec<Mat<T>> = (0..d).map(|j| g.column(j)).collect();
    for a in 0..v0_dim {
        let (ea, fa) = (e0.column(a), f0.column(a));
        for c in g_cols.iter_mut() {
            *c = project_out_pair(c, &ea, &fa);
        }
    }
    let gr: Vec<&Mat<T>> = g_cols.iter().collect();
    let g = Mat::hstack(&gr);
    let pairing = omega_gram(&kernel, &g);
    let pinv = pairing
        .inverse(tol)
        .ok_or_else(|| Error::Internal("kernel pairing singular".into()))?;
    let f = g.mul(&pinv);
    let half = T::from_ratio(1, 2);
    let gf = omega_gram(&f, &f).scale(&half);
    let n_basis = f.add(&kernel.mul(&gf));

    let mut levels = vec![1; d];
    let (l_extra, lp_extra) = if v0_dim > 0 {
        let w0 = Mat::hstack(&[&e0, &f0]);
        let phi0 = symplectic_left_inverse(&w0).mul(phi).mul(&w0);
        let sub = adapted_basis(&phi0, tol, depth + 1)?;
        let ws = w0.mul(&sub.s);
        levels.extend(sub.levels.iter().map(|&l| if l == 0 { 0 } else { l + 1 }));
        (
            ws.select_columns(&(0..v0_dim).collect::<Vec<_>>()),
            ws.select_columns(&(v0_dim..2 * v0_dim).collect::<Vec<_>>()),
        )
    } else {
        (Mat::zeros(dim, 0), Mat::zeros(dim, 0))
    };
    let s = Mat::hstack(&[&kernel, &l_extra, &n_basis, &lp_extra]);
    Ok(AdaptedBasis { s, levels })
}

/// Diagonal of the scaling `Ψ̂ = diag(Λ, Λ⁻¹)` for a given `λ`.
pub fn scaling_diagonal<T: Field>(levels: &[usize], lambda: &T) -> Vec<T> {
    let depth = levels.iter().copied().max().unwrap_or(0);
    let mut mu = Vec::with_capacity(levels.len());
    for &l in levels {
        let mut m = T::one();
        if l > 0 {
            for _ in 0..(depth - l + 1) {
                m = m.mul(lambda);
            }
        }
        mu.push(m);
    }
    let inv: Vec<T> = mu.iter().map(|m| T::one().div(m)).collect();
    mu.into_iter().chain(inv).collect()
}

/// Inverse of a symplectic matrix, `S⁻¹ = −ΩSᵀΩ`.
pub fn symplectic_inverse<T: Field>(s: &Mat<T>) -> Mat<T> {
    let k = s.rows / 2;
    let o = Mat::<T>::omega(k);
    o.mul(&s.transpose()).mul(&o).neg_mat()
}

/// `D X D⁻¹` for diagonal `D`.
pub fn conjugate_diagonal<T: Field>(x: &Mat<T>, d: &[T]) -> Mat<T> {
    Mat::from_fn(x.rows, x.cols, |i, j| x.get(i, j).mul(&d[i]).div(&d[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(p: i64) -> BigRational {
        BigRational::from_ratio(p, 1)
    }

    fn check_basis(phi: &Mat<BigRational>) {
        let ab = adapted_basis(phi, 0.0, 0).unwrap();
        let k = phi.rows / 2;
        assert_eq!(omega_gram(&ab.s, &ab.s), Mat::omega(k), "basis not symplectic");
        let hat = symplectic_inverse(&ab.s).mul(phi).mul(&ab.s);
        for i in k..2 * k {
            for j in 0..k {
                assert!(hat.get(i, j).negligible(0.0), "lower-left block not zero");
            }
        }
    }

    #[test]
    fn shear_basis() {
        let phi = Mat::from_fn(2, 2, |i, j| if i == j { r(1) } else if i == 0 { r(1) } else { r(0) });
        check_basis(&phi);
    }

    #[test]
    fn identity_splits_everything() {
        let phi = Mat::<BigRational>::identity(4);
        let ab = adapted_basis(&phi, 0.0, 0).unwrap();
        assert_eq!(ab.levels, vec![0, 0]);
    }

    #[test]
    fn chain_in_four_dimensions() {
        // [[A, AB], [0, A^{-T}]] with A = [[1,1],[0,1]], B = diag(1, 0)
        let a = [[1, 1], [0, 1]];
        let ait = [[1, 0], [-1, 1]];
        let b = [[1, 0], [0, 0]];
        let phi = Mat::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
            (true, true) => r(a[i][j]),
            (true, false) => r((0..2).map(|m| a[i][m] * b[m][j - 2]).sum()),
            (false, true) => r(0),
            (false, false) => r(ait[i - 2][j - 2]),
        });
        check_basis(&phi);
    }
}
