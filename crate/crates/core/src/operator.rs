//! Local and global operators on the chain Hilbert space.

use faer::{c64, Mat, MatRef};

use crate::lattice::{Lattice, SiteInterval};
use crate::linalg;
use crate::{Error, Result};

/// A dense operator acting on the sites of `support` only.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    support: SiteInterval,
    local_dim: usize,
    matrix: Mat<c64>,
}

impl LocalOperator {
    pub fn new(support: SiteInterval, local_dim: usize, matrix: Mat<c64>) -> Result<Self> {
        let expected = local_dim.pow(support.len() as u32);
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(Error::Shape(format!(
                "operator on {support} needs a {expected}x{expected} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::is_finite(matrix.as_ref()) {
            return Err(Error::NonFinite("local operator"));
        }
        Ok(Self { support, local_dim, matrix })
    }

    /// Spin-1/2 operator.
    pub fn spin(support: SiteInterval, matrix: Mat<c64>) -> Result<Self> {
        Self::new(support, 2, matrix)
    }

    /// Tensor product of Pauli letters (`i`, `x`, `y`, `z`) on consecutive
    /// sites starting at `first`.
    pub fn pauli_string(first: usize, letters: &str) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Parameter("empty Pauli string".into()));
        }
        let mut m = linalg::identity(1);
        for ch in letters.chars() {
            m = linalg::kron(m.as_ref(), pauli(ch)?.as_ref());
        }
        Self::spin(SiteInterval { lo: first, hi: first + letters.len() - 1 }, m)
    }

    pub fn zero(support: SiteInterval, local_dim: usize) -> Self {
        let d = local_dim.pow(support.len() as u32);
        Self { support, local_dim, matrix: linalg::zeros(d) }
    }

    pub fn identity(support: SiteInterval, local_dim: usize) -> Self {
        let d = local_dim.pow(support.len() as u32);
        Self { support, local_dim, matrix: linalg::identity(d) }
    }

    pub fn support(&self) -> SiteInterval {
        self.support
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            support: self.support,
            local_dim: self.local_dim,
            matrix: Mat::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| self.matrix[(i, j)] * s),
        }
    }

    /// The same operator written on a larger interval (identity on the extra sites).
    pub fn widened(&self, to: SiteInterval) -> Result<Self> {
        if !to.contains_interval(&self.support) {
            return Err(Error::Geometry(format!("{} does not contain {}", to, self.support)));
        }
        let left = linalg::identity(self.local_dim.pow((self.support.lo - to.lo) as u32));
        let right = linalg::identity(self.local_dim.pow((to.hi - self.support.hi) as u32));
        let m = linalg::kron(linalg::kron(left.as_ref(), self.matrix.as_ref()).as_ref(), right.as_ref());
        Self::new(to, self.local_dim, m)
    }

    pub fn is_hermitian(&self) -> bool {
        linalg::is_hermitian(self.matrix.as_ref())
    }

    pub fn norm(&self) -> Result<f64> {
        linalg::spectral_norm(self.matrix.as_ref())
    }
}

/// Single-site Pauli matrix.
pub fn pauli(letter: char) -> Result<Mat<c64>> {
    let (o, z, i) = (c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 1.0));
    let entries = match letter.to_ascii_lowercase() {
        'i' => [o, z, z, o],
        'x' => [z, o, o, z],
        'y' => [z, -i, i, z],
        'z' => [o, z, z, -o],
        other => return Err(Error::Parameter(format!("unknown Pauli letter '{other}'"))),
    };
    Ok(Mat::from_fn(2, 2, |r, c| entries[2 * r + c]))
}

/// A dense operator on the full chain.
#[derive(Debug, Clone)]
pub struct GlobalOperator {
    lattice: Lattice,
    matrix: Mat<c64>,
}

impl GlobalOperator {
    pub fn new(lattice: Lattice, matrix: Mat<c64>) -> Result<Self> {
        let d = lattice.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Shape(format!(
                "global operator needs a {d}x{d} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::is_finite(matrix.as_ref()) {
            return Err(Error::NonFinite("global operator"));
        }
        Ok(Self { lattice, matrix })
    }

    /// Wraps a matrix produced internally with known dimension.
    pub(crate) fn from_parts(lattice: Lattice, matrix: Mat<c64>) -> Self {
        debug_assert_eq!(matrix.nrows(), lattice.dim());
        Self { lattice, matrix }
    }

    pub fn identity(lattice: Lattice) -> Self {
        Self { lattice, matrix: linalg::identity(lattice.dim()) }
    }

    pub fn zero(lattice: Lattice) -> Self {
        Self { lattice, matrix: linalg::zeros(lattice.dim()) }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { lattice: self.lattice, matrix: self.matrix.adjoint().to_owned() }
    }

    pub fn mul(&self, other: &GlobalOperator) -> Result<Self> {
        self.same_lattice(other)?;
        Ok(Self { lattice: self.lattice, matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &GlobalOperator) -> Result<Self> {
        self.same_lattice(other)?;
        Ok(Self { lattice: self.lattice, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &GlobalOperator) -> Result<Self> {
        self.same_lattice(other)?;
        Ok(Self { lattice: self.lattice, matrix: &self.matrix - &other.matrix })
    }

    pub fn scaled(&self, s: c64) -> Self {
        let n = self.matrix.nrows();
        Self { lattice: self.lattice, matrix: Mat::from_fn(n, n, |i, j| self.matrix[(i, j)] * s) }
    }

    /// `u† self u`
    pub fn conjugated_by(&self, u: &GlobalOperator) -> Result<Self> {
        self.same_lattice(u)?;
        Ok(Self { lattice: self.lattice, matrix: u.matrix.adjoint() * &self.matrix * &u.matrix })
    }

    pub fn is_hermitian(&self) -> bool {
        linalg::is_hermitian(self.matrix.as_ref())
    }

    pub fn norm(&self) -> Result<f64> {
        spectral_norm(self)
    }

    fn same_lattice(&self, other: &GlobalOperator) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::Shape("operators live on different lattices".into()));
        }
        Ok(())
    }
}

/// Tensors `op` with the identity outside its support.
pub fn embed(op: &LocalOperator, lattice: &Lattice) -> Result<GlobalOperator> {
    lattice.check(op.support)?;
    if op.local_dim != lattice.local_dim() {
        return Err(Error::Shape(format!(
            "local dimension {} does not match lattice local dimension {}",
            op.local_dim,
            lattice.local_dim()
        )));
    }
    let (left, mid, right) = factor_dims(lattice, op.support);
    let dim = lattice.dim();
    let mut out = linalg::zeros(dim);
    for l in 0..left {
        for b in 0..mid {
            for a in 0..mid {
                let v = op.matrix[(a, b)];
                if v == c64::new(0.0, 0.0) {
                    continue;
                }
                let (row0, col0) = ((l * mid + a) * right, (l * mid + b) * right);
                for c in 0..right {
                    out[(row0 + c, col0 + c)] = v;
                }
            }
        }
    }
    Ok(GlobalOperator::from_parts(*lattice, out))
}

/// Dimensions of the factors left of, on, and right of `region`.
fn factor_dims(lattice: &Lattice, region: SiteInterval) -> (usize, usize, usize) {
    (
        lattice.block_dim(region.lo),
        lattice.block_dim(region.len()),
        lattice.block_dim(lattice.num_sites() - 1 - region.hi),
    )
}

pub fn spectral_norm(x: &GlobalOperator) -> Result<f64> {
    linalg::spectral_norm(x.matrix.as_ref())
}

/// Diagonal entries when `m` is diagonal with every entry equal to ±1.
fn diagonal_involution(m: MatRef<'_, c64>) -> Option<Vec<bool>> {
    let n = m.nrows();
    let mut signs = Vec::with_capacity(n);
    for j in 0..n {
        for i in 0..n {
            let v = m[(i, j)];
            if i == j {
                if v == c64::new(1.0, 0.0) {
                    signs.push(true);
                } else if v == c64::new(-1.0, 0.0) {
                    signs.push(false);
                } else {
                    return None;
                }
            } else if v != c64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    Some(signs)
}

/// `‖xy − yx‖` in the spectral norm.
pub fn commutator_norm(x: &GlobalOperator, y: &GlobalOperator) -> Result<f64> {
    x.same_lattice(y)?;
    if let Some(signs) = diagonal_involution(y.matrix.as_ref()) {
        return involution_commutator_norm(x.matrix.as_ref(), &signs);
    }
    if let Some(signs) = diagonal_involution(x.matrix.as_ref()) {
        return involution_commutator_norm(y.matrix.as_ref(), &signs);
    }
    let c = &x.matrix * &y.matrix - &y.matrix * &x.matrix;
    linalg::spectral_norm(c.as_ref())
}

/// For a diagonal involution Z with projectors P±, `[X, Z]` only has the two
/// off-diagonal blocks ∓2 P±XP∓, so its norm is twice the larger of their norms.
fn involution_commutator_norm(x: MatRef<'_, c64>, signs: &[bool]) -> Result<f64> {
    let plus: Vec<usize> = (0..signs.len()).filter(|&i| signs[i]).collect();
    let minus: Vec<usize> = (0..signs.len()).filter(|&i| !signs[i]).collect();
    if plus.is_empty() || minus.is_empty() {
        return Ok(0.0);
    }
    let upper = linalg::submatrix(x, &plus, &minus);
    let s_upper = linalg::max_singular_value(upper.as_ref())?;
    if linalg::is_hermitian(x) {
        return Ok(2.0 * s_upper);
    }
    let lower = linalg::submatrix(x, &minus, &plus);
    Ok(2.0 * s_upper.max(linalg::max_singular_value(lower.as_ref())?))
}

/// Normalized partial trace over the complement of `region`, returned as an
/// operator on `region`.
pub fn reduce(x: &GlobalOperator, region: SiteInterval) -> Result<LocalOperator> {
    let lattice = x.lattice;
    lattice.check(region)?;
    let (left, mid, right) = factor_dims(&lattice, region);
    let m = x.matrix.as_ref();
    let norm = 1.0 / (left * right) as f64;
    let mut y = linalg::zeros(mid);
    for b in 0..mid {
        for a in 0..mid {
            let mut acc = c64::new(0.0, 0.0);
            for l in 0..left {
                let (row0, col0) = ((l * mid + a) * right, (l * mid + b) * right);
                for c in 0..right {
                    acc += m[(row0 + c, col0 + c)];
                }
            }
            y[(a, b)] = acc * norm;
        }
    }
    LocalOperator::new(region, lattice.local_dim(), y)
}

/// `(1/r^|R^c|) Tr_{R^c}(x) ⊗ 1_{R^c}`.
pub fn restrict(x: &GlobalOperator, region: SiteInterval) -> Result<GlobalOperator> {
    if region == x.lattice.full() {
        return Ok(x.clone());
    }
    embed(&reduce(x, region)?, &x.lattice)
}

/// Largest complement (in sites) the Pauli twirl will enumerate.
pub const MAX_TWIRL_SITES: usize = 8;

/// Average of `P x P†` over all Pauli strings P on the complement of `region`.
pub fn pauli_twirl(x: &GlobalOperator, region: SiteInterval) -> Result<GlobalOperator> {
    let lattice = x.lattice;
    lattice.check(region)?;
    if lattice.local_dim() != 2 {
        return Err(Error::Parameter("the Pauli twirl needs local dimension 2".into()));
    }
    let n = lattice.num_sites();
    let complement: Vec<usize> = (0..n).filter(|s| !region.contains(*s)).collect();
    if complement.len() > MAX_TWIRL_SITES {
        return Err(Error::Budget {
            what: format!("Pauli twirl over {} sites", complement.len()),
            dim: 1usize << (2 * complement.len()),
            cap: 1usize << (2 * MAX_TWIRL_SITES),
        });
    }
    let dim = lattice.dim();
    let m = x.matrix.as_ref();
    let mut acc = linalg::zeros(dim);
    let terms = 1usize << (2 * complement.len());
    let bit = |s: usize| 1usize << (n - 1 - s);
    let mut phase = vec![c64::new(0.0, 0.0); dim];
    for code in 0..terms {
        // Letter on complement site k: 0=I, 1=X, 2=Y, 3=Z.
        let mut flip = 0usize;
        for (k, &s) in complement.iter().enumerate() {
            let letter = (code >> (2 * k)) & 3;
            if letter == 1 || letter == 2 {
                flip |= bit(s);
            }
        }
        for (i, ph) in phase.iter_mut().enumerate() {
            // Row i of P has its single nonzero entry in column i ^ flip.
            let mut p = c64::new(1.0, 0.0);
            for (k, &s) in complement.iter().enumerate() {
                let up = i & bit(s) == 0;
                p *= match (code >> (2 * k)) & 3 {
                    0 | 1 => c64::new(1.0, 0.0),
                    2 => {
                        if up {
                            c64::new(0.0, -1.0)
                        } else {
                            c64::new(0.0, 1.0)
                        }
                    }
                    _ => {
                        if up {
                            c64::new(1.0, 0.0)
                        } else {
                            c64::new(-1.0, 0.0)
                        }
                    }
                };
            }
            *ph = p;
        }
        for j in 0..dim {
            let pj = phase[j].conj();
            for i in 0..dim {
                acc[(i, j)] += phase[i] * m[(i ^ flip, j ^ flip)] * pj;
            }
        }
    }
    let w = 1.0 / terms as f64;
    let out = Mat::from_fn(dim, dim, |i, j| acc[(i, j)] * w);
    Ok(GlobalOperator::from_parts(lattice, out))
}

pub fn distance(a: SiteInterval, b: SiteInterval) -> usize {
    a.distance(&b)
}
