//! Dense kernels on top of faer.
//!
//! Matrices are stored densely, but most operators in this crate conserve
//! something (total magnetization, locality of a product) and therefore have
//! an exactly block-diagonal nonzero pattern after a permutation. Every
//! eigensolve and norm here first splits the index set into the connected
//! components of that pattern and then works block by block. This is an exact
//! permutation similarity, not an approximation: entries outside the blocks
//! are exactly zero.

use faer::{c64, Mat, MatRef, Side};

use crate::{Error, Result};

/// Relative tolerance under which a matrix is treated as Hermitian when
/// choosing the eigenvalue route for its norm.
pub const HERMITIAN_RTOL: f64 = 1e-12;

pub fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn zeros(n: usize) -> Mat<c64> {
    Mat::zeros(n, n)
}

pub fn is_finite(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// Largest entry modulus of `m - m†`.
pub fn hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = m[(i, j)] - m[(j, i)].conj();
            worst = worst.max(d.norm());
        }
    }
    worst
}

pub fn is_hermitian(m: MatRef<'_, c64>) -> bool {
    m.nrows() == m.ncols() && hermitian_defect(m) <= HERMITIAN_RTOL * m.norm_max().max(1.0)
}

pub fn max_entry(m: MatRef<'_, c64>) -> f64 {
    m.norm_max()
}

/// Kronecker product `a ⊗ b` (first factor most significant).
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn real_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub fn imag_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].im)
}

pub fn from_parts(re: MatRef<'_, f64>, im: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(re.nrows(), re.ncols(), |i, j| c64::new(re[(i, j)], im[(i, j)]))
}

pub fn to_complex(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

fn is_real(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

pub fn submatrix(m: MatRef<'_, c64>, rows: &[usize], cols: &[usize]) -> Mat<c64> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn groups(mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// Connected components of the joint nonzero pattern of square matrices.
/// Components are ordered by their smallest index; indices ascend inside.
pub fn block_partition(mats: &[MatRef<'_, c64>]) -> Vec<Vec<usize>> {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut sets = DisjointSets::new(n);
    for m in mats {
        for j in 0..n {
            for i in 0..n {
                if i != j && m[(i, j)] != c64::new(0.0, 0.0) {
                    sets.union(i, j);
                }
            }
        }
    }
    sets.groups()
}

/// Components of a rectangular matrix viewed as a bipartite row/column graph.
/// Returns (rows, cols) pairs; all-zero rows and columns are dropped.
fn bipartite_blocks(m: MatRef<'_, c64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut sets = DisjointSets::new(r + c);
    let mut touched = vec![false; r + c];
    for j in 0..c {
        for i in 0..r {
            if m[(i, j)] != c64::new(0.0, 0.0) {
                sets.union(i, r + j);
                touched[i] = true;
                touched[r + j] = true;
            }
        }
    }
    sets.groups()
        .into_iter()
        .filter(|g| touched[g[0]])
        .map(|g| {
            let rows: Vec<usize> = g.iter().copied().filter(|&k| k < r).collect();
            let cols: Vec<usize> = g.iter().copied().filter(|&k| k >= r).map(|k| k - r).collect();
            (rows, cols)
        })
        .collect()
}

/// Eigenvector basis of one block, kept real when the block was real.
#[derive(Debug, Clone)]
pub enum Basis {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Real(u) => u.nrows(),
            Basis::Complex(u) => u.nrows(),
        }
    }

    /// `U m`
    pub fn apply(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        match self {
            Basis::Real(u) => from_parts((u * real_part(m)).as_ref(), (u * imag_part(m)).as_ref()),
            Basis::Complex(u) => u * m,
        }
    }

    /// `U† m`
    pub fn apply_adjoint(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        match self {
            Basis::Real(u) => {
                let ut = u.transpose();
                from_parts((ut * real_part(m)).as_ref(), (ut * imag_part(m)).as_ref())
            }
            Basis::Complex(u) => u.adjoint() * m,
        }
    }

    /// `m U†`
    pub fn apply_adjoint_right(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        match self {
            Basis::Real(u) => {
                let ut = u.transpose();
                from_parts((real_part(m) * ut).as_ref(), (imag_part(m) * ut).as_ref())
            }
            Basis::Complex(u) => m * u.adjoint(),
        }
    }

    /// `m U`
    pub fn apply_right(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        match self {
            Basis::Real(u) => from_parts((real_part(m) * u).as_ref(), (imag_part(m) * u).as_ref()),
            Basis::Complex(u) => m * u,
        }
    }

    /// Selected rows of U as a complex matrix.
    pub fn rows(&self, idx: &[usize]) -> Mat<c64> {
        match self {
            Basis::Real(u) => Mat::from_fn(idx.len(), u.ncols(), |i, k| c64::new(u[(idx[i], k)], 0.0)),
            Basis::Complex(u) => Mat::from_fn(idx.len(), u.ncols(), |i, k| u[(idx[i], k)]),
        }
    }

    pub fn to_complex(&self) -> Mat<c64> {
        match self {
            Basis::Real(u) => to_complex(u.as_ref()),
            Basis::Complex(u) => u.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenBlock {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: Basis,
}

/// Eigendecomposition of a Hermitian matrix, stored per exact block.
#[derive(Debug, Clone)]
pub struct Spectrum {
    dim: usize,
    blocks: Vec<EigenBlock>,
}

impl Spectrum {
    /// Decomposes the Hermitian part of `h` (the caller checks Hermiticity).
    pub fn hermitian(h: MatRef<'_, c64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::Shape(format!("{}x{} matrix is not square", h.nrows(), h.ncols())));
        }
        if !is_finite(h) {
            return Err(Error::NonFinite("hermitian eigensolve input"));
        }
        let blocks = block_partition(&[h])
            .into_iter()
            .map(|idx| {
                let sub = Mat::from_fn(idx.len(), idx.len(), |i, j| {
                    (h[(idx[i], idx[j])] + h[(idx[j], idx[i])].conj()) * 0.5
                });
                eigen_block(idx, sub.as_ref())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: h.nrows(), blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    /// All eigenvalues in ascending order.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.values.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// `f(H) = Σ_blocks U f(Λ) U†`.
    pub fn function(&self, f: impl Fn(f64) -> c64) -> Mat<c64> {
        let mut out = zeros(self.dim);
        for b in &self.blocks {
            let k = b.indices.len();
            let scaled = match &b.vectors {
                Basis::Real(u) => Mat::from_fn(k, k, |i, j| f(b.values[j]) * u[(i, j)]),
                Basis::Complex(u) => Mat::from_fn(k, k, |i, j| f(b.values[j]) * u[(i, j)]),
            };
            let sub = b.vectors.apply_adjoint_right(scaled.as_ref());
            for (jj, &j) in b.indices.iter().enumerate() {
                for (ii, &i) in b.indices.iter().enumerate() {
                    out[(i, j)] = sub[(ii, jj)];
                }
            }
        }
        out
    }

    /// `exp(-i t H)`.
    pub fn exp_minus_i(&self, t: f64) -> Mat<c64> {
        self.function(|l| c64::cis(-l * t))
    }

    /// `f(H) m`, applied block by block to the matching rows of `m`.
    pub fn apply_function(&self, f: impl Fn(f64) -> c64, m: MatRef<'_, c64>) -> Result<Mat<c64>> {
        if m.nrows() != self.dim {
            return Err(Error::Shape(format!("cannot apply a {0}x{0} function to {1} rows", self.dim, m.nrows())));
        }
        let mut out = Mat::<c64>::zeros(m.nrows(), m.ncols());
        for b in &self.blocks {
            let rows = Mat::from_fn(b.indices.len(), m.ncols(), |i, j| m[(b.indices[i], j)]);
            let mut coeffs = b.vectors.apply_adjoint(rows.as_ref());
            for (i, &l) in b.values.iter().enumerate() {
                let phase = f(l);
                for j in 0..coeffs.ncols() {
                    coeffs[(i, j)] *= phase;
                }
            }
            let back = b.vectors.apply(coeffs.as_ref());
            for (ii, &i) in b.indices.iter().enumerate() {
                for j in 0..m.ncols() {
                    out[(i, j)] = back[(ii, j)];
                }
            }
        }
        Ok(out)
    }
}

fn eigen_block(indices: Vec<usize>, sub: MatRef<'_, c64>) -> Result<EigenBlock> {
    let k = indices.len();
    if k == 1 {
        return Ok(EigenBlock {
            indices,
            values: vec![sub[(0, 0)].re],
            vectors: Basis::Real(Mat::from_fn(1, 1, |_, _| 1.0)),
        });
    }
    if is_real(sub) {
        let re = real_part(sub);
        let e = re.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let values = (0..k).map(|i| e.S().column_vector()[i]).collect();
        Ok(EigenBlock { indices, values, vectors: Basis::Real(e.U().to_owned()) })
    } else {
        let e = sub.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let values = (0..k).map(|i| e.S().column_vector()[i].re).collect();
        Ok(EigenBlock { indices, values, vectors: Basis::Complex(e.U().to_owned()) })
    }
}

/// `exp(-i t g)` for Hermitian `g`.
pub fn exp_hermitian(g: MatRef<'_, c64>, t: f64) -> Result<Mat<c64>> {
    Ok(Spectrum::hermitian(g)?.exp_minus_i(t))
}

/// Largest eigenvalue modulus of a Hermitian matrix.
pub fn hermitian_norm(h: MatRef<'_, c64>) -> Result<f64> {
    let mut best = 0.0f64;
    for idx in block_partition(&[h]) {
        let k = idx.len();
        let v = if k == 1 {
            h[(idx[0], idx[0])].re.abs()
        } else {
            let sub = Mat::from_fn(k, k, |i, j| (h[(idx[i], idx[j])] + h[(idx[j], idx[i])].conj()) * 0.5);
            extreme_abs_eigenvalue(sub.as_ref())?
        };
        best = best.max(v);
    }
    Ok(best)
}

fn extreme_abs_eigenvalue(sub: MatRef<'_, c64>) -> Result<f64> {
    let vals = if is_real(sub) {
        real_part(sub).self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?
    } else {
        sub.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?
    };
    Ok(vals.first().map_or(0.0, |v| v.abs()).max(vals.last().map_or(0.0, |v| v.abs())))
}

/// Largest singular value, from the Gram matrix of the smaller side of each
/// bipartite block.
pub fn max_singular_value(m: MatRef<'_, c64>) -> Result<f64> {
    let mut best = 0.0f64;
    for (rows, cols) in bipartite_blocks(m) {
        let sub = submatrix(m, &rows, &cols);
        let v = if rows.len() == 1 || cols.len() == 1 {
            sub.norm_l2()
        } else {
            let gram = if rows.len() <= cols.len() { &sub * sub.adjoint() } else { sub.adjoint() * &sub };
            extreme_abs_eigenvalue(gram.as_ref())?.sqrt()
        };
        best = best.max(v);
    }
    Ok(best)
}

/// Operator (spectral) norm. Hermitian and anti-Hermitian inputs go through
/// the eigenvalue route, everything else through singular values.
pub fn spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if !is_finite(m) {
        return Err(Error::NonFinite("spectral norm input"));
    }
    if m.nrows() != m.ncols() {
        return max_singular_value(m);
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    if is_hermitian(m) {
        return hermitian_norm(m);
    }
    let im = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c64::new(0.0, 1.0));
    if is_hermitian(im.as_ref()) {
        return hermitian_norm(im.as_ref());
    }
    max_singular_value(m)
}

/// Nearest unitary (polar factor) of a square matrix, computed per block.
pub fn polar_unitary(m: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = m.nrows();
    let mut out = zeros(n);
    for idx in block_partition(&[m]) {
        let sub = submatrix(m, &idx, &idx);
        let svd = sub.svd().map_err(|_| Error::Eigen)?;
        let w = svd.U() * svd.V().adjoint();
        for (jj, &j) in idx.iter().enumerate() {
            for (ii, &i) in idx.iter().enumerate() {
                out[(i, j)] = w[(ii, jj)];
            }
        }
    }
    Ok(out)
}

/// Spectral norm of `u† u - 1`.
pub fn unitarity_defect(u: MatRef<'_, c64>) -> Result<f64> {
    let g = u.adjoint() * u - identity(u.nrows());
    spectral_norm(g.as_ref())
}
