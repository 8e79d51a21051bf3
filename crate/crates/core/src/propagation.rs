//! Exact propagators, interaction-picture frames and time-ordered evolution.

use faer::{c64, Mat, MatRef};

use crate::lattice::{Lattice, SiteInterval};
use crate::linalg::{self, EigenBlock, Spectrum};
use crate::models::{Hamiltonian, PerturbationTerm};
use crate::operator::{embed, GlobalOperator};
use crate::{Error, Result};

/// Spectral decomposition of a time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    lattice: Lattice,
    spectrum: Spectrum,
}

impl Propagator {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        Self::from_operator(h.matrix())
    }

    pub fn from_operator(h: &GlobalOperator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::Parameter("propagator needs a Hermitian Hamiltonian".into()));
        }
        Ok(Self { lattice: h.lattice(), spectrum: Spectrum::hermitian(h.matrix())? })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// e^{−iHt}
    pub fn evolve_exact(&self, t: f64) -> GlobalOperator {
        if t == 0.0 {
            return GlobalOperator::identity(self.lattice);
        }
        GlobalOperator::from_parts(self.lattice, self.spectrum.exp_minus_i(t))
    }

    /// e^{iHt} a e^{−iHt}
    pub fn heisenberg(&self, a: &GlobalOperator, t: f64) -> Result<GlobalOperator> {
        Ok(self.frame(a)?.at(t))
    }

    /// Precomputes `a` in the eigenbasis so that e^{iHt} a e^{−iHt} can be
    /// evaluated at many times.
    pub fn frame(&self, a: &GlobalOperator) -> Result<Frame> {
        if a.lattice() != self.lattice {
            return Err(Error::Shape("operator and Hamiltonian live on different lattices".into()));
        }
        let blocks = self.spectrum.blocks();
        let m = a.matrix();
        let mut pairs = Vec::new();
        for (bi, b) in blocks.iter().enumerate() {
            for (ci, c) in blocks.iter().enumerate() {
                let sub = linalg::submatrix(m, &b.indices, &c.indices);
                if sub.norm_max() == 0.0 {
                    continue;
                }
                let coeffs = c.vectors.apply_right(b.vectors.apply_adjoint(sub.as_ref()).as_ref());
                pairs.push((bi, ci, coeffs));
            }
        }
        Ok(Frame { propagator: self.clone(), pairs })
    }
}

/// An operator expressed in the eigenbasis of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct Frame {
    propagator: Propagator,
    pairs: Vec<(usize, usize, Mat<c64>)>,
}

impl Frame {
    /// C ∘ Φ with Φ_ij = e^{i(λ_i − λ_j)t}, from per-eigenvalue phases.
    fn phased(b: &EigenBlock, c: &EigenBlock, coeffs: &Mat<c64>, t: f64) -> Mat<c64> {
        let pb: Vec<c64> = b.values.iter().map(|&l| c64::cis(l * t)).collect();
        let pc: Vec<c64> = c.values.iter().map(|&l| c64::cis(-l * t)).collect();
        Mat::from_fn(coeffs.nrows(), coeffs.ncols(), |i, j| coeffs[(i, j)] * pb[i] * pc[j])
    }

    /// e^{iHt} a e^{−iHt}
    pub fn at(&self, t: f64) -> GlobalOperator {
        let spec = &self.propagator.spectrum;
        let blocks = spec.blocks();
        let mut out = linalg::zeros(spec.dim());
        for (bi, ci, coeffs) in &self.pairs {
            let (b, c) = (&blocks[*bi], &blocks[*ci]);
            let phased = Self::phased(b, c, coeffs, t);
            let x = b.vectors.apply(c.vectors.apply_adjoint_right(phased.as_ref()).as_ref());
            for (jj, &j) in c.indices.iter().enumerate() {
                for (ii, &i) in b.indices.iter().enumerate() {
                    out[(i, j)] = x[(ii, jj)];
                }
            }
        }
        GlobalOperator::from_parts(self.propagator.lattice, out)
    }

    /// Normalized partial trace of e^{iHt} a e^{−iHt} onto `region`. Only the
    /// entries whose complement indices agree are formed, so the full
    /// operator is never built.
    pub fn reduced_at(&self, t: f64, region: SiteInterval) -> Result<Mat<c64>> {
        let lattice = self.propagator.lattice;
        lattice.check(region)?;
        let mid = lattice.block_dim(region.len());
        let right = lattice.block_dim(lattice.num_sites() - 1 - region.hi);
        let comp_dim = lattice.dim() / mid;
        // Global index -> (index inside region, index of the complement).
        let split = |g: usize| {
            let rest = g / right;
            (rest % mid, (rest / mid) * right + g % right)
        };
        let group = |indices: &[usize]| {
            let mut classes: Vec<Vec<(usize, usize)>> = vec![Vec::new(); comp_dim];
            for (pos, &g) in indices.iter().enumerate() {
                let (inner, comp) = split(g);
                classes[comp].push((pos, inner));
            }
            classes
        };
        let blocks = self.propagator.spectrum.blocks();
        let mut out = linalg::zeros(mid);
        for (bi, ci, coeffs) in &self.pairs {
            let (b, c) = (&blocks[*bi], &blocks[*ci]);
            let y = b.vectors.apply(Self::phased(b, c, coeffs, t).as_ref());
            let (rows, cols) = (group(&b.indices), group(&c.indices));
            for (row_class, col_class) in rows.iter().zip(&cols) {
                if row_class.is_empty() || col_class.is_empty() {
                    continue;
                }
                let yr = Mat::from_fn(row_class.len(), y.ncols(), |i, k| y[(row_class[i].0, k)]);
                let uc = c.vectors.rows(&col_class.iter().map(|p| p.0).collect::<Vec<_>>());
                let x = yr * uc.adjoint();
                for (i, &(_, ai)) in row_class.iter().enumerate() {
                    for (j, &(_, aj)) in col_class.iter().enumerate() {
                        out[(ai, aj)] += x[(i, j)];
                    }
                }
            }
        }
        Ok(out * faer::Scale(c64::new(1.0 / comp_dim as f64, 0.0)))
    }
}

/// Step control for time-ordered exponentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeOrderedOptions {
    /// Convergence threshold on successive extrapolants (spectral norm).
    pub tol: f64,
    /// Largest step of the coarsest level.
    pub initial_step: f64,
    /// Number of step halvings before giving up.
    pub max_depth: usize,
}

impl Default for TimeOrderedOptions {
    fn default() -> Self {
        Self { tol: 1e-8, initial_step: 0.25, max_depth: 12 }
    }
}

impl TimeOrderedOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.initial_step > 0.0 && self.max_depth >= 1) {
            return Err(Error::Parameter("time-ordering tolerance and initial step must be positive".into()));
        }
        Ok(())
    }
}

/// Midpoint product Π_k exp(−iΔ G(a + (k+½)Δ)) with later times on the left.
fn midpoint_product<G>(gen: &mut G, dim: usize, a: f64, b: f64, steps: usize) -> Result<Mat<c64>>
where
    G: FnMut(f64) -> Result<Mat<c64>>,
{
    let dt = (b - a) / steps as f64;
    let mut acc = linalg::identity(dim);
    for k in 0..steps {
        let g = gen(a + (k as f64 + 0.5) * dt)?;
        if g.nrows() != dim || g.ncols() != dim {
            return Err(Error::Shape(format!("generator returned {}x{}, expected {dim}x{dim}", g.nrows(), g.ncols())));
        }
        if !linalg::is_hermitian(g.as_ref()) {
            return Err(Error::Parameter(format!("generator is not Hermitian at t = {}", a + (k as f64 + 0.5) * dt)));
        }
        acc = Spectrum::hermitian(g.as_ref())?.apply_function(|l| c64::cis(-l * dt), acc.as_ref())?;
    }
    Ok(acc)
}

/// T[exp(−i∫_a^b G(s) ds)] by midpoint products with step halving and
/// Richardson extrapolation. The symmetric midpoint rule has an error
/// expansion in even powers of the step, so each extrapolation column removes
/// one more power of 4. The converged extrapolant is projected back onto the
/// unitary group.
pub fn time_ordered_segment<G>(gen: &mut G, dim: usize, a: f64, b: f64, opts: &TimeOrderedOptions) -> Result<Mat<c64>>
where
    G: FnMut(f64) -> Result<Mat<c64>>,
{
    opts.validate()?;
    if b < a {
        return Err(Error::Parameter(format!("time-ordered segment runs backwards ({a} -> {b})")));
    }
    if b == a {
        return Ok(linalg::identity(dim));
    }
    let base_steps = ((b - a) / opts.initial_step).ceil().max(1.0) as usize;
    let mut prev_row: Vec<Mat<c64>> = vec![midpoint_product(gen, dim, a, b, base_steps)?];
    let mut last_distance = f64::INFINITY;
    for level in 1..=opts.max_depth {
        let mut row = vec![midpoint_product(gen, dim, a, b, base_steps << level)?];
        for m in 1..=level {
            let factor = 1.0 / (4f64.powi(m as i32) - 1.0);
            let next = &row[m - 1] + (&row[m - 1] - &prev_row[m - 1]) * faer::Scale(c64::new(factor, 0.0));
            row.push(next);
        }
        let diff = &row[level] - &prev_row[level - 1];
        last_distance = linalg::spectral_norm(diff.as_ref())?;
        if last_distance <= opts.tol {
            return linalg::polar_unitary(row[level].as_ref());
        }
        prev_row = row;
    }
    Err(Error::Convergence { distance: last_distance, tol: opts.tol })
}

/// Time-ordered exponential from 0 to each of `times` (ascending, ≥ 0),
/// integrated segment by segment.
pub fn time_ordered_checkpoints<G>(mut gen: G, dim: usize, times: &[f64], opts: &TimeOrderedOptions) -> Result<Vec<Mat<c64>>>
where
    G: FnMut(f64) -> Result<Mat<c64>>,
{
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Parameter("evolution times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("checkpoint times must be non-decreasing".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut acc = linalg::identity(dim);
    let mut from = 0.0;
    for &t in times {
        let seg = time_ordered_segment(&mut gen, dim, from, t, opts)?;
        acc = seg * acc;
        out.push(acc.clone());
        from = t;
    }
    Ok(out)
}

/// Polynomial surrogate of a smooth matrix-valued function on [a, b]. Samples
/// are taken at nested Chebyshev-Lobatto points and only the union of their
/// nonzero entries is stored; the accepted interpolant is kept as a truncated
/// Chebyshev series.
#[derive(Debug, Clone)]
pub struct ChebyshevInterpolant {
    a: f64,
    b: f64,
    shape: (usize, usize),
    pattern: Vec<(usize, usize)>,
    /// Row j holds the coefficient of T_j on the pattern.
    coeffs: Mat<c64>,
    num_nodes: usize,
}

fn lobatto(k: usize, n: usize) -> f64 {
    (std::f64::consts::PI * k as f64 / n as f64).cos()
}

/// Union of the nonzero positions of `values`, in column-major order.
fn nonzero_pattern(values: &[&Mat<c64>]) -> Vec<(usize, usize)> {
    let (r, c) = (values[0].nrows(), values[0].ncols());
    let mut out = Vec::new();
    for j in 0..c {
        for i in 0..r {
            if values.iter().any(|v| v[(i, j)] != c64::new(0.0, 0.0)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Samples flattened onto `pattern`, one row per sample.
fn flatten(values: &[&Mat<c64>], pattern: &[(usize, usize)]) -> Mat<c64> {
    Mat::from_fn(values.len(), pattern.len(), |k, p| values[k][pattern[p]])
}

/// Barycentric weights of the n+1 Lobatto points.
fn lobatto_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                0.5 * w
            } else {
                w
            }
        })
        .collect()
}

impl ChebyshevInterpolant {
    /// Doubles the number of nodes until the interpolant predicts the new
    /// nodes to within `tol` in Frobenius norm, scaled by max(1, ‖f‖).
    pub fn fit<G>(f: &mut G, a: f64, b: f64, tol: f64, max_nodes: usize) -> Result<Self>
    where
        G: FnMut(f64) -> Result<Mat<c64>>,
    {
        if !(b > a && a.is_finite() && b.is_finite()) {
            return Err(Error::Parameter(format!("interpolation interval [{a}, {b}] is empty")));
        }
        let to_time = |x: f64| 0.5 * (a + b) + 0.5 * (b - a) * x;
        let mut n = 8usize;
        let mut values = (0..=n).map(|k| f(to_time(lobatto(k, n)))).collect::<Result<Vec<_>>>()?;
        let shape = (values[0].nrows(), values[0].ncols());
        loop {
            let fresh_x: Vec<f64> = (0..n).map(|k| lobatto(2 * k + 1, 2 * n)).collect();
            let fresh = fresh_x.iter().map(|&x| f(to_time(x))).collect::<Result<Vec<_>>>()?;
            if fresh.iter().any(|v| (v.nrows(), v.ncols()) != shape) {
                return Err(Error::Shape("interpolated function changed shape".into()));
            }
            let all: Vec<&Mat<c64>> = values.iter().chain(&fresh).collect();
            let pattern = nonzero_pattern(&all);
            let old = flatten(&values.iter().collect::<Vec<_>>(), &pattern);
            let new = flatten(&fresh.iter().collect::<Vec<_>>(), &pattern);
            let scale = (0..old.nrows())
                .map(|k| old.row(k).norm_l2())
                .chain((0..new.nrows()).map(|k| new.row(k).norm_l2()))
                .fold(1.0f64, f64::max);
            // Barycentric prediction of the fresh samples from the current nodes.
            let w = lobatto_weights(n);
            let weights = Mat::from_fn(n, n + 1, |i, k| {
                let x = fresh_x[i];
                let total: f64 = (0..=n).map(|m| w[m] / (x - lobatto(m, n))).sum();
                c64::new(w[k] / (x - lobatto(k, n)) / total, 0.0)
            });
            let predicted = &weights * &old;
            let err = (0..n).map(|i| (predicted.row(i) - new.row(i)).norm_l2()).fold(0.0f64, f64::max);
            // Interleave old (even) and new (odd) nodes of the doubled grid.
            let mut old_it = values.into_iter();
            let mut new_it = fresh.into_iter();
            values = (0..=2 * n)
                .map(|k| if k % 2 == 0 { old_it.next() } else { new_it.next() }.expect("node count"))
                .collect();
            n *= 2;
            if err <= tol * scale {
                return Ok(Self::from_samples(a, b, shape, &values, tol * scale - err));
            }
            if n + 1 > max_nodes {
                return Err(Error::Convergence { distance: err / scale, tol });
            }
        }
    }

    /// Chebyshev coefficients of the interpolant through Lobatto samples,
    /// dropping trailing terms whose summed norm stays below `slack`.
    fn from_samples(a: f64, b: f64, shape: (usize, usize), values: &[Mat<c64>], slack: f64) -> Self {
        let n = values.len() - 1;
        let refs: Vec<&Mat<c64>> = values.iter().collect();
        let pattern = nonzero_pattern(&refs);
        let samples = flatten(&refs, &pattern);
        let transform = Mat::from_fn(n + 1, n + 1, |j, k| {
            let mut v = 2.0 / n as f64 * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
            if k == 0 || k == n {
                v *= 0.5;
            }
            if j == 0 || j == n {
                v *= 0.5;
            }
            c64::new(v, 0.0)
        });
        let full = &transform * &samples;
        let mut keep = n + 1;
        let mut dropped = 0.0;
        while keep > 1 {
            let tail = full.row(keep - 1).norm_l2();
            if dropped + tail > 0.5 * slack {
                break;
            }
            dropped += tail;
            keep -= 1;
        }
        let coeffs = full.subrows(0, keep).to_owned();
        Self { a, b, shape, pattern, coeffs, num_nodes: n + 1 }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Value at time `s`, clamped to [a, b].
    pub fn eval(&self, s: f64) -> Mat<c64> {
        let x = ((2.0 * s - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0);
        let m = self.coeffs.nrows();
        let mut cheb = vec![1.0, x];
        for j in 2..m {
            cheb.push(2.0 * x * cheb[j - 1] - cheb[j - 2]);
        }
        let mut out = Mat::<c64>::zeros(self.shape.0, self.shape.1);
        for (p, &(i, j)) in self.pattern.iter().enumerate() {
            let col = self.coeffs.col(p);
            out[(i, j)] = (0..m).map(|k| col[k] * cheb[k]).sum();
        }
        out
    }
}

/// Piecewise Chebyshev surrogate over [0, end] on pieces of length at most `piece`.
#[derive(Debug, Clone)]
pub struct PiecewiseChebyshev {
    breaks: Vec<f64>,
    pieces: Vec<ChebyshevInterpolant>,
}

impl PiecewiseChebyshev {
    pub const MAX_NODES: usize = 1025;

    pub fn fit<G>(mut f: G, end: f64, piece: f64, tol: f64) -> Result<Self>
    where
        G: FnMut(f64) -> Result<Mat<c64>>,
    {
        if !(end > 0.0 && piece > 0.0 && tol > 0.0) {
            return Err(Error::Parameter("surrogate needs a positive horizon, piece length and tolerance".into()));
        }
        let count = (end / piece).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=count).map(|k| end * k as f64 / count as f64).collect();
        let pieces = breaks
            .windows(2)
            .map(|w| ChebyshevInterpolant::fit(&mut f, w[0], w[1], tol, Self::MAX_NODES))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { breaks, pieces })
    }

    pub fn eval(&self, s: f64) -> Mat<c64> {
        let k = self.breaks[1..].partition_point(|&b| b < s).min(self.pieces.len() - 1);
        self.pieces[k].eval(s)
    }

    pub fn total_nodes(&self) -> usize {
        self.pieces.iter().map(|p| p.num_nodes()).sum()
    }
}

/// V(t) for a lattice-wide time-dependent Hermitian generator.
pub fn evolve_time_ordered<G>(lattice: Lattice, mut gen: G, t: f64, opts: &TimeOrderedOptions) -> Result<GlobalOperator>
where
    G: FnMut(f64) -> Result<GlobalOperator>,
{
    let mut raw = |s: f64| gen(s).map(|g| g.into_matrix());
    let m = time_ordered_checkpoints(&mut raw, lattice.dim(), &[t], opts)?.pop().expect("one checkpoint");
    Ok(GlobalOperator::from_parts(lattice, m))
}

/// Full evolution of H + Σ_j h_j(t) at each of `times`. Constant
/// perturbations are exponentiated exactly; otherwise the total generator is
/// integrated.
pub fn evolve_full(
    h: &Hamiltonian,
    perturbations: &[PerturbationTerm],
    times: &[f64],
    opts: &TimeOrderedOptions,
) -> Result<Vec<GlobalOperator>> {
    let lattice = h.lattice();
    if perturbations.iter().all(|p| p.is_constant()) {
        let prop = Propagator::from_operator(&h.total_at(perturbations, 0.0)?)?;
        return Ok(times.iter().map(|&t| prop.evolve_exact(t)).collect());
    }
    let gen = |s: f64| h.total_at(perturbations, s).map(|g| g.into_matrix());
    Ok(time_ordered_checkpoints(gen, lattice.dim(), times, opts)?
        .into_iter()
        .map(|m| GlobalOperator::from_parts(lattice, m))
        .collect())
}

/// Interaction-picture frames of a set of perturbations under one propagator.
#[derive(Debug, Clone)]
pub struct InteractionFrames {
    terms: Vec<(Frame, PerturbationTerm)>,
    lattice: Lattice,
}

impl InteractionFrames {
    pub fn new(prop: &Propagator, perturbations: &[PerturbationTerm]) -> Result<Self> {
        let lattice = prop.lattice();
        let terms = perturbations
            .iter()
            .map(|p| Ok((prop.frame(&embed(p.base(), &lattice)?)?, p.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms, lattice })
    }

    /// Σ_j e^{iHs} h_j(s) e^{−iHs}
    pub fn generator(&self, s: f64) -> GlobalOperator {
        let mut acc = linalg::zeros(self.lattice.dim());
        for (frame, p) in &self.terms {
            let c = p.profile().value(s);
            if c != 0.0 {
                acc += frame.at(s).matrix() * faer::Scale(c64::new(c, 0.0));
            }
        }
        GlobalOperator::from_parts(self.lattice, acc)
    }

    /// Σ_j of the normalized partial traces of the frame generators onto `region`.
    pub fn reduced_generator(&self, s: f64, region: SiteInterval) -> Result<Mat<c64>> {
        let dim = self.lattice.block_dim(region.len());
        let mut acc = linalg::zeros(dim);
        for (frame, p) in &self.terms {
            let c = p.profile().value(s);
            if c != 0.0 {
                acc += frame.reduced_at(s, region)? * faer::Scale(c64::new(c, 0.0));
            }
        }
        Ok(acc)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// e^{iHs} h(s) e^{−iHs} for a single perturbation.
pub fn interaction_generator(prop: &Propagator, h: &PerturbationTerm, s: f64) -> Result<GlobalOperator> {
    Ok(InteractionFrames::new(prop, std::slice::from_ref(h))?.generator(s))
}

/// How the interaction factor T is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMethod {
    /// Time-ordered integration of the frame generators.
    Integrated,
    /// T = e^{iHt} V(t) with V from exact or independently integrated evolution.
    FromFullEvolution,
}

/// T(t) = T[exp(−i∫_0^t Σ_j e^{iHs} h_j(s) e^{−iHs} ds)], so that
/// V(t) = e^{−iHt} T(t), at each of `times`.
pub fn interaction_factor(
    prop: &Propagator,
    h: &Hamiltonian,
    perturbations: &[PerturbationTerm],
    times: &[f64],
    opts: &TimeOrderedOptions,
    method: FactorMethod,
) -> Result<Vec<GlobalOperator>> {
    let lattice = prop.lattice();
    if perturbations.is_empty() {
        return Ok(times.iter().map(|_| GlobalOperator::identity(lattice)).collect());
    }
    match method {
        FactorMethod::Integrated => {
            let frames = InteractionFrames::new(prop, perturbations)?;
            let gen = |s: f64| Ok(frames.generator(s).into_matrix());
            Ok(time_ordered_checkpoints(gen, lattice.dim(), times, opts)?
                .into_iter()
                .map(|m| GlobalOperator::from_parts(lattice, m))
                .collect())
        }
        FactorMethod::FromFullEvolution => {
            let vs = evolve_full(h, perturbations, times, opts)?;
            times
                .iter()
                .zip(vs)
                .map(|(&t, v)| prop.evolve_exact(-t).mul(&v))
                .collect()
        }
    }
}

/// Left and right split factors T̂, T̄ at one time.
#[derive(Debug, Clone)]
pub struct SplitFactors {
    pub t: f64,
    pub left: GlobalOperator,
    pub right: GlobalOperator,
}

/// Sorts perturbations into those left of `cut − w` and right of `cut + w`.
pub fn partition_free_region(
    perturbations: &[PerturbationTerm],
    cut: usize,
    half_width: usize,
    lattice: &Lattice,
) -> Result<(Vec<PerturbationTerm>, Vec<PerturbationTerm>)> {
    if cut + 1 >= lattice.num_sites() {
        return Err(Error::Geometry(format!("cut {cut} leaves no sites to its right")));
    }
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for p in perturbations {
        let s = p.support();
        lattice.check(s)?;
        if s.hi + half_width < cut {
            left.push(p.clone());
        } else if s.lo > cut + half_width {
            right.push(p.clone());
        } else {
            return Err(Error::Geometry(format!(
                "perturbation on {s} intersects the free region [{}, {}]",
                cut.saturating_sub(half_width),
                cut + half_width
            )));
        }
    }
    Ok((left, right))
}

/// Length of the time pieces on which split generators are interpolated.
pub const SURROGATE_PIECE: f64 = 1.0;

/// T̂ from the left perturbations' frame generators reduced onto [0, cut] and
/// T̄ from the right ones reduced onto [cut+1, N−1], at each of `times`.
pub fn split_factors(
    prop: &Propagator,
    perturbations: &[PerturbationTerm],
    cut: usize,
    half_width: usize,
    times: &[f64],
    opts: &TimeOrderedOptions,
) -> Result<Vec<SplitFactors>> {
    let lattice = prop.lattice();
    let (left, right) = partition_free_region(perturbations, cut, half_width, &lattice)?;
    let left_region = SiteInterval { lo: 0, hi: cut };
    let right_region = SiteInterval { lo: cut + 1, hi: lattice.num_sites() - 1 };
    let hat = side_factors(prop, &left, left_region, times, opts)?;
    let bar = side_factors(prop, &right, right_region, times, opts)?;
    Ok(times
        .iter()
        .zip(hat.into_iter().zip(bar))
        .map(|(&t, (left, right))| SplitFactors { t, left, right })
        .collect())
}

fn side_factors(
    prop: &Propagator,
    terms: &[PerturbationTerm],
    region: SiteInterval,
    times: &[f64],
    opts: &TimeOrderedOptions,
) -> Result<Vec<GlobalOperator>> {
    let lattice = prop.lattice();
    if terms.is_empty() {
        return Ok(times.iter().map(|_| GlobalOperator::identity(lattice)).collect());
    }
    let frames = InteractionFrames::new(prop, terms)?;
    let end = times.iter().fold(0.0f64, |m, &t| m.max(t));
    let dim = lattice.block_dim(region.len());
    let local = if end == 0.0 {
        times.iter().map(|_| linalg::identity(dim)).collect()
    } else {
        // Each frame evaluation costs full-size products, so the reduced
        // generator is replaced by a surrogate accurate well below the
        // integration tolerance (by Duhamel, generator error ε moves the
        // exponential by at most ε·t).
        let surrogate = PiecewiseChebyshev::fit(
            |s| frames.reduced_generator(s, region),
            end,
            SURROGATE_PIECE,
            0.01 * opts.tol / end.max(1.0),
        )?;
        time_ordered_checkpoints(|s| Ok(surrogate.eval(s)), dim, times, opts)?
    };
    local
        .into_iter()
        .map(|m| embed(&crate::LocalOperator::new(region, lattice.local_dim(), m)?, &lattice))
        .collect()
}

/// ‖a − b‖ for raw matrices.
pub fn distance(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<f64> {
    linalg::spectral_norm((a - b).as_ref())
}
