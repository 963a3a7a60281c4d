//! Small dense linear-algebra helpers on top of `nalgebra`: sorted Hermitian
//! eigendecompositions, orthogonal complements, and the Hermitian-definite
//! generalized eigenproblem used by the leakage-based designs.

use nalgebra::linalg::{SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, Complex64};

/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn sort_eigen(values: Vec<f64>, vectors: CMatrix) -> Eigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors =
        CMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    Eigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(m: &CMatrix) -> Eigen {
    let eig = SymmetricEigen::new(hermitian_part(m));
    sort_eigen(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Rotates `v` so that its largest-modulus entry is real and positive.
///
/// Entries within a relative `1e-9` of the maximum modulus count as ties and
/// the lowest index wins, so rounding noise cannot flip the choice.
pub fn canonicalize_phase(v: &mut CVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .expect("non-empty vector with positive max");
    let phase = v[pivot].conj() / v[pivot].norm();
    v.apply(|z| *z *= phase);
}

/// Numerical rank of `h` under the relative threshold [`RANK_TOL`].
pub fn numerical_rank(h: &CMatrix) -> usize {
    if h.ncols() == 0 || h.nrows() == 0 {
        return 0;
    }
    let sv = h.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Orthonormal basis of the orthogonal complement of `range(h)` in `C^N`,
/// i.e. columns `F` with `F^H F = I` and `h^H F = 0`.
///
/// Returns the basis together with the numerical rank of `h`. An `N x 0`
/// input yields the identity.
pub fn complement_basis(h: &CMatrix) -> (CMatrix, usize) {
    let n = h.nrows();
    if h.ncols() == 0 {
        return (CMatrix::identity(n, n), 0);
    }
    let svd = SVD::new(h.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.len())
        .filter(|&i| max > 0.0 && sv[i] > RANK_TOL * max)
        .collect();
    let rank = keep.len();

    // Projector onto the complement has eigenvalues exactly {1, 0}, so the
    // eigenvectors of the unit eigenvalue are well separated from the rest.
    let mut projector = CMatrix::identity(n, n);
    for &i in &keep {
        let col = u.column(i);
        projector -= col * col.adjoint();
    }
    let eig = hermitian_eigen(&projector);
    let basis = eig.vectors.columns(0, n - rank).into_owned();
    (orthonormalize(&basis), rank)
}

/// Orthonormal basis of `range(cols)` preserving column order (Gram-Schmidt
/// order via thin QR). `cols` must have full column rank.
pub fn orthonormalize(cols: &CMatrix) -> CMatrix {
    if cols.ncols() == 0 {
        return cols.clone();
    }
    let q = cols.clone().qr().q();
    q.columns(0, cols.ncols()).into_owned()
}

/// Solves the Hermitian-definite generalized eigenproblem
/// `numer x = lambda * denom x` with `denom` positive definite.
///
/// Uses a Cholesky reduction `denom = L L^H`, so no explicit inverse is
/// formed. Eigenvalues come back descending; eigenvectors are scaled to unit
/// Euclidean norm (they are `denom`-orthogonal, not orthogonal).
pub fn generalized_eigen(numer: &CMatrix, denom: &CMatrix) -> Result<Eigen> {
    let n = denom.nrows();
    if numer.shape() != (n, n) || denom.ncols() != n {
        return Err(Error::Dimension(format!(
            "pencil shapes {:?} and {:?}",
            numer.shape(),
            denom.shape()
        )));
    }
    let chol = hermitian_part(denom)
        .cholesky()
        .ok_or_else(|| Error::Numerical("denominator matrix is not positive definite".into()))?;
    let l = chol.l();
    // complex Cholesky happily takes square roots of negative pivots
    if (0..n).any(|i| {
        let d = l[(i, i)];
        d.re.is_nan() || d.re <= 0.0 || d.im.abs() > 1e-12 * d.re
    }) {
        return Err(Error::Numerical(
            "denominator matrix is not positive definite".into(),
        ));
    }
    let half = l
        .solve_lower_triangular(&hermitian_part(numer))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&half.adjoint())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let eig = hermitian_eigen(&reduced);
    let mut x = l
        .ad_solve_lower_triangular(&eig.vectors)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    for mut col in x.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    Ok(Eigen {
        values: eig.values,
        vectors: x,
    })
}

/// `v^H a v` for Hermitian `a` (real part).
pub fn quad_form(a: &CMatrix, v: &CVector) -> f64 {
    v.dotc(&(a * v)).re
}

/// `tr(t^H a t)` for Hermitian `a`.
pub fn trace_form(a: &CMatrix, t: &CMatrix) -> f64 {
    (t.adjoint() * a * t).trace().re
}

/// `h h^H`.
pub fn gram_outer(h: &CMatrix) -> CMatrix {
    h * h.adjoint()
}
