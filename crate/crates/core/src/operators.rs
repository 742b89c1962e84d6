//! Dense complex Hermitian operator layer: eigendecomposition, dichotomic
//! observable tuples, feasibility checks, joint eigenspaces, and assembly
//! of the inequality operator.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::inequality::Inequality;
use crate::textio::{content_lines, format_complex, parse_complex, parse_err};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

/// A validated d x d Hermitian matrix. Construction checks the Hermiticity
/// residual and then replaces the entries by (M + M^dag)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    inner: CMatrix,
}

/// Real eigenvalues sorted in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

/// Eigenvalues (descending) with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub spectrum: Spectrum,
    pub vectors: CMatrix,
}

/// Tuple of N dichotomic observables feasible for a given inequality:
/// each A_k squares to the identity and context partners commute.
#[derive(Debug, Clone)]
pub struct ObservableTuple {
    ineq: Inequality,
    dim: usize,
    observables: Vec<HermitianMatrix>,
}

/// Density matrix, or just its spectrum when no basis information exists.
#[derive(Debug, Clone)]
pub struct QuantumState {
    dim: usize,
    repr: StateRepr,
}

#[derive(Debug, Clone)]
enum StateRepr {
    Matrix(HermitianMatrix),
    SpectrumOnly(Spectrum),
}

/// Worst-case residuals of the tuple invariants at a given tolerance.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub dichotomy_residuals: Vec<f64>,
    pub commutator_residuals: Vec<(usize, usize, f64)>,
    pub worst_dichotomy: f64,
    pub worst_commutator: f64,
    pub tol: f64,
    pub pass: bool,
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > tol::MAX_DIM {
        return Err(Error::DimensionOutOfRange { dim, max: tol::MAX_DIM });
    }
    Ok(())
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_dim(m.nrows())?;
        let residual = max_abs(&(&m - m.adjoint()));
        if residual > tol::HERMITICITY {
            return Err(Error::NotHermitian { residual });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(Self { dim: sym.nrows(), inner: sym })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, inner: identity(dim) })
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        let inner = CMatrix::from_diagonal(&CVector::from_iterator(
            values.len(),
            values.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        Ok(Self { dim: values.len(), inner })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    /// Eigenvalues descending, eigenvector columns orthonormal and matched.
    pub fn eigendecompose(&self) -> Result<Eigendecomposition> {
        hermitian_eig(&self.inner)
    }
}

pub(crate) fn hermitian_eig(m: &CMatrix) -> Result<Eigendecomposition> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(Eigendecomposition { spectrum: Spectrum { values }, vectors })
}

impl Spectrum {
    /// Sorts the given values into decreasing order.
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl ObservableTuple {
    /// Validates dichotomy and per-context commutation at the feasibility
    /// tolerance and keeps a copy of the inequality the tuple belongs to.
    pub fn new(
        ineq: &Inequality,
        dim: usize,
        observables: Vec<HermitianMatrix>,
    ) -> Result<Self> {
        check_dim(dim)?;
        if observables.len() != ineq.n_observables() {
            return Err(Error::DimensionMismatch(format!(
                "{} observables supplied, inequality has {}",
                observables.len(),
                ineq.n_observables()
            )));
        }
        if let Some(bad) = observables.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "observable has dimension {}, tuple has {}",
                bad.dim(),
                dim
            )));
        }
        let tuple = Self { ineq: ineq.clone(), dim, observables };
        let report = tuple.feasibility_report(tol::FEASIBILITY);
        if !report.pass {
            return Err(Error::InfeasibleTuple(format!(
                "worst dichotomy residual {:.3e}, worst commutator residual {:.3e}",
                report.worst_dichotomy, report.worst_commutator
            )));
        }
        Ok(tuple)
    }

    pub fn inequality(&self) -> &Inequality {
        &self.ineq
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observables(&self) -> &[HermitianMatrix] {
        &self.observables
    }

    pub fn observable(&self, k: usize) -> &HermitianMatrix {
        &self.observables[k - 1]
    }

    /// Reports the worst dichotomy residual max|A_k^2 - I| and worst
    /// commutator residual max|[A_k, A_l]| over context-sharing pairs.
    pub fn feasibility_report(&self, tolerance: f64) -> FeasibilityReport {
        let id = identity(self.dim);
        let dichotomy_residuals: Vec<f64> = self
            .observables
            .iter()
            .map(|a| max_abs(&(a.as_matrix() * a.as_matrix() - &id)))
            .collect();
        let mut commutator_residuals = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for term in self.ineq.terms() {
            let ctx = &term.context;
            for i in 0..ctx.len() {
                for j in i + 1..ctx.len() {
                    if seen.insert((ctx[i], ctx[j])) {
                        let a = self.observables[ctx[i] - 1].as_matrix();
                        let b = self.observables[ctx[j] - 1].as_matrix();
                        let comm = a * b - b * a;
                        commutator_residuals.push((ctx[i], ctx[j], max_abs(&comm)));
                    }
                }
            }
        }
        let worst_dichotomy = dichotomy_residuals.iter().copied().fold(0.0, f64::max);
        let worst_commutator = commutator_residuals
            .iter()
            .map(|&(_, _, r)| r)
            .fold(0.0, f64::max);
        FeasibilityReport {
            pass: worst_dichotomy <= tolerance && worst_commutator <= tolerance,
            dichotomy_residuals,
            commutator_residuals,
            worst_dichotomy,
            worst_commutator,
            tol: tolerance,
        }
    }

    /// Assembles `T = sum_n x_n prod_{k in E_n} A_k` with products taken in
    /// ascending index order, then symmetrizes the result.
    pub fn inequality_operator(&self) -> HermitianMatrix {
        let d = self.dim;
        let mut t = CMatrix::zeros(d, d);
        for term in self.ineq.terms() {
            let mut prod = identity(d);
            for &k in &term.context {
                prod = prod * self.observables[k - 1].as_matrix();
            }
            let x = term.coeff.to_f64().expect("rational fits in f64");
            t += prod.scale(x);
        }
        let sym = (&t + t.adjoint()).scale(0.5);
        HermitianMatrix { dim: d, inner: sym }
    }

    /// Serializes to the `tuple v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("tuple v1\n");
        let _ = writeln!(out, "dim {}", self.dim);
        for (k, obs) in self.observables.iter().enumerate() {
            let _ = writeln!(out, "observable {}", k + 1);
            write_matrix(&mut out, obs.as_matrix());
        }
        out
    }
}

fn write_matrix(out: &mut String, m: &CMatrix) {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format_complex(m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

impl QuantumState {
    /// A state given by its density matrix. Checks positivity of the
    /// spectrum (>= -1e-10) and unit trace.
    pub fn from_matrix(m: HermitianMatrix) -> Result<Self> {
        let trace = m.as_matrix().trace();
        if (trace.re - 1.0).abs() > tol::HERMITICITY || trace.im.abs() > tol::HERMITICITY {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        let eig = m.eigendecompose()?;
        let min = eig.spectrum.values().last().copied().unwrap_or(0.0);
        if min < -tol::HERMITICITY {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { dim: m.dim(), repr: StateRepr::Matrix(m) })
    }

    /// A state known only through its eigenvalues.
    pub fn from_spectrum(spectrum: Spectrum) -> Result<Self> {
        check_dim(spectrum.dim())?;
        if spectrum.values().iter().any(|&p| p < -tol::HERMITICITY) {
            return Err(Error::InvalidState("negative spectrum entry".into()));
        }
        if (spectrum.sum() - 1.0).abs() > tol::HERMITICITY {
            return Err(Error::InvalidState(format!("spectrum sums to {}", spectrum.sum())));
        }
        Ok(Self { dim: spectrum.dim(), repr: StateRepr::SpectrumOnly(spectrum) })
    }

    /// The pure state |v><v| / <v|v>.
    pub fn pure(v: &CVector) -> Result<Self> {
        let norm2 = v.norm_squared();
        if norm2 <= 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let m = (v * v.adjoint()).scale(1.0 / norm2);
        Self::from_matrix(HermitianMatrix::new(m)?)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let m = identity(dim).scale(1.0 / dim as f64);
        Self::from_matrix(HermitianMatrix { dim, inner: m })
    }

    /// The normalized rank-r projector state on the first r canonical
    /// basis vectors.
    pub fn canonical_projector(dim: usize, rank: usize) -> Result<Self> {
        check_dim(dim)?;
        if rank == 0 || rank > dim {
            return Err(Error::InvalidRank { rank, dim });
        }
        let diag: Vec<f64> = (0..dim)
            .map(|i| if i < rank { 1.0 / rank as f64 } else { 0.0 })
            .collect();
        Self::from_matrix(HermitianMatrix::from_real_diagonal(&diag)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> Option<&HermitianMatrix> {
        match &self.repr {
            StateRepr::Matrix(m) => Some(m),
            StateRepr::SpectrumOnly(_) => None,
        }
    }

    pub fn has_matrix(&self) -> bool {
        self.matrix().is_some()
    }

    /// Eigenvalues in decreasing order.
    pub fn spectrum(&self) -> Result<Spectrum> {
        match &self.repr {
            StateRepr::Matrix(m) => Ok(m.eigendecompose()?.spectrum),
            StateRepr::SpectrumOnly(s) => Ok(s.clone()),
        }
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.spectrum()?.values().last().copied().unwrap_or(0.0))
    }

    /// Serializes to the `state v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("state v1\n");
        let _ = writeln!(out, "dim {}", self.dim);
        match &self.repr {
            StateRepr::Matrix(m) => write_matrix(&mut out, m.as_matrix()),
            StateRepr::SpectrumOnly(s) => {
                let row: Vec<String> = s.values().iter().map(|p| p.to_string()).collect();
                let _ = writeln!(out, "spectrum {}", row.join(" "));
            }
        }
        out
    }
}

/// Joint eigenspace decomposition of a commuting family of Hermitian
/// matrices, by recursive refinement: diagonalize the first operator,
/// split by eigenvalue groups, recurse on compressions of the rest.
///
/// Returns orthonormal bases (d x b column blocks) of the common
/// eigenspaces; block dimensions sum to d. Eigenvalues closer than the
/// grouping threshold are treated as degenerate.
pub fn joint_eigenspaces(family: &[&HermitianMatrix], tolerance: f64) -> Result<Vec<CMatrix>> {
    let Some(first) = family.first() else {
        return Err(Error::Precondition("joint_eigenspaces of empty family has no dimension".into()));
    };
    let d = first.dim();
    for (i, a) in family.iter().enumerate() {
        if a.dim() != d {
            return Err(Error::DimensionMismatch("family members differ in dimension".into()));
        }
        for b in family.iter().skip(i + 1) {
            let comm = a.as_matrix() * b.as_matrix() - b.as_matrix() * a.as_matrix();
            let residual = max_abs(&comm);
            if residual > tolerance {
                return Err(Error::NonCommutingInput { residual });
            }
        }
    }
    let mut blocks = vec![identity(d)];
    for a in family {
        blocks = refine_blocks(&blocks, a.as_matrix())?;
    }
    Ok(blocks)
}

/// Joint eigenspaces with the whole space as the single block when the
/// family is empty (the caller supplies the dimension).
pub fn joint_eigenspaces_with_dim(
    dim: usize,
    family: &[&HermitianMatrix],
    tolerance: f64,
) -> Result<Vec<CMatrix>> {
    if family.is_empty() {
        check_dim(dim)?;
        return Ok(vec![identity(dim)]);
    }
    joint_eigenspaces(family, tolerance)
}

fn refine_blocks(blocks: &[CMatrix], op: &CMatrix) -> Result<Vec<CMatrix>> {
    let mut out = Vec::new();
    for basis in blocks {
        if basis.ncols() == 1 {
            out.push(basis.clone());
            continue;
        }
        let compressed = basis.adjoint() * op * basis;
        let sym = (&compressed + compressed.adjoint()).scale(0.5);
        let eig = hermitian_eig(&sym)?;
        for group in group_ranges(eig.spectrum.values(), tol::EIG_GROUP) {
            let sub = eig.vectors.columns(group.start, group.len()).into_owned();
            out.push(basis * sub);
        }
    }
    Ok(out)
}

/// Splits a descending list into maximal runs whose consecutive gaps stay
/// within `gap`.
pub(crate) fn group_ranges(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i - 1] - values[i] > gap {
            out.push(start..i);
            start = i;
        }
    }
    if !values.is_empty() {
        out.push(start..values.len());
    }
    out
}

/// Gaussian-induced random state of the given rank: rho = GG^dag / tr,
/// with G a d x r standard complex Gaussian matrix. Deterministic per rng.
pub fn random_state(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> Result<QuantumState> {
    check_dim(dim)?;
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { rank, dim });
    }
    let g = random_gaussian(dim, rank, rng);
    let gg = &g * g.adjoint();
    let trace = gg.trace().re;
    QuantumState::from_matrix(HermitianMatrix::new(gg.scale(1.0 / trace))?)
}

pub(crate) fn random_gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-like random unitary: QR of a complex Gaussian matrix with the
/// phases of R's diagonal absorbed into Q.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = random_gaussian(dim, dim, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        let z = r[(c, c)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        let col = q.column(c) * phase;
        q.set_column(c, &col);
    }
    q
}

/// Random Hermitian matrix with Gaussian entries, for tests and checks.
pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let g = random_gaussian(dim, dim, rng);
    let sym = (&g + g.adjoint()).scale(0.5);
    HermitianMatrix { dim, inner: sym }
}

/// Parses the `state v1` format: a `dim d` line followed by d matrix rows
/// of complex literals, or a single `spectrum p1 ... pd` line.
pub fn parse_state(input: &str) -> Result<QuantumState> {
    let lines = content_lines(input);
    let mut it = lines.iter().peekable();
    let header = it.next().ok_or_else(|| parse_err(1, "empty state file"))?;
    if header.text != "state v1" {
        return Err(parse_err(header.number, "expected header `state v1`"));
    }
    let dim = parse_dim_line(it.next())?;
    match it.peek() {
        Some(line) if line.text.starts_with("spectrum") => {
            let line = it.next().unwrap();
            let body = line.text.strip_prefix("spectrum").unwrap();
            let mut values = Vec::new();
            for tok in body.split_whitespace() {
                let p: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(line.number, format!("bad probability `{tok}`")))?;
                values.push(p);
            }
            if values.len() != dim {
                return Err(parse_err(
                    line.number,
                    format!("spectrum has {} entries, expected {dim}", values.len()),
                ));
            }
            QuantumState::from_spectrum(Spectrum::new(values))
        }
        _ => {
            let m = parse_matrix_rows(&mut it, dim)?;
            QuantumState::from_matrix(HermitianMatrix::new(m)?)
        }
    }
}

/// Parses the `tuple v1` format and validates the tuple against `ineq`.
pub fn parse_tuple(input: &str, ineq: &Inequality) -> Result<ObservableTuple> {
    let lines = content_lines(input);
    let mut it = lines.iter().peekable();
    let header = it.next().ok_or_else(|| parse_err(1, "empty tuple file"))?;
    if header.text != "tuple v1" {
        return Err(parse_err(header.number, "expected header `tuple v1`"));
    }
    let dim = parse_dim_line(it.next())?;
    let mut observables = Vec::new();
    while let Some(line) = it.next() {
        let k: usize = line
            .text
            .strip_prefix("observable")
            .map(str::trim)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(line.number, "expected `observable <k>`"))?;
        if k != observables.len() + 1 {
            return Err(parse_err(
                line.number,
                format!("expected observable {}, found {k}", observables.len() + 1),
            ));
        }
        let m = parse_matrix_rows(&mut it, dim)?;
        observables.push(HermitianMatrix::new(m)?);
    }
    ObservableTuple::new(ineq, dim, observables)
}

fn parse_dim_line(line: Option<&crate::textio::Line<'_>>) -> Result<usize> {
    let line = line.ok_or_else(|| parse_err(0, "missing `dim <d>` line"))?;
    let dim: usize = line
        .text
        .strip_prefix("dim")
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(line.number, "expected `dim <d>`"))?;
    check_dim(dim)?;
    Ok(dim)
}

fn parse_matrix_rows<'a, I>(it: &mut std::iter::Peekable<I>, dim: usize) -> Result<CMatrix>
where
    I: Iterator<Item = &'a crate::textio::Line<'a>>,
{
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let line = it
            .next()
            .ok_or_else(|| parse_err(0, format!("missing matrix row {}", r + 1)))?;
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        if toks.len() != dim {
            return Err(parse_err(
                line.number,
                format!("row has {} entries, expected {dim}", toks.len()),
            ));
        }
        for (c, tok) in toks.iter().enumerate() {
            m[(r, c)] = parse_complex(tok, line.number)?;
        }
    }
    Ok(m)
}


#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;
    use crate::inequality::{Assignment, Inequality};
    use num_traits::ToPrimitive;
    use rand::SeedableRng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let id = HermitianMatrix::identity(3).unwrap();
        let eig = id.eigendecompose().unwrap();
        assert_eq!(eig.spectrum.values(), &[1.0, 1.0, 1.0]);

        let m = HermitianMatrix::from_real_diagonal(&[-2.0, 5.0, 0.0]).unwrap();
        let eig = m.eigendecompose().unwrap();
        assert_eq!(eig.spectrum.values(), &[5.0, 0.0, -2.0]);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut r = rng(11);
        for _ in 0..5 {
            let m = random_hermitian(6, &mut r);
            let eig = m.eigendecompose().unwrap();
            let diag = CMatrix::from_diagonal(&CVector::from_iterator(
                6,
                eig.spectrum.values().iter().map(|&x| Complex64::new(x, 0.0)),
            ));
            let rec = &eig.vectors * diag * eig.vectors.adjoint();
            assert!(max_abs(&(rec - m.as_matrix())) <= 1e-8);
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert!(max_abs(&(gram - identity(6))) <= 1e-9);
        }
    }

    #[test]
    fn classical_tuple_gives_identity_operator() {
        let ineq = Inequality::chsh();
        let tuple = classical_tuple(&ineq, 4, &[1, 1, 1, 1]);
        let t = tuple.inequality_operator();
        assert!(max_abs(&(t.as_matrix() - identity(4))) <= 1e-12);
    }

    #[test]
    fn tsirelson_tuple_spectrum() {
        let tuple = tsirelson_tuple();
        let report = tuple.feasibility_report(1e-8);
        assert!(report.pass);
        let spec = tuple.inequality_operator().eigendecompose().unwrap().spectrum;
        let expected = [SQRT2, 0.0, 0.0, -SQRT2];
        for (got, want) in spec.values().iter().zip(expected) {
            assert!((got - want).abs() <= 1e-12, "{:?}", spec.values());
        }
    }

    #[test]
    fn kcbs_pentagram_spectrum() {
        let tuple = kcbs_pentagram_tuple();
        assert!(tuple.feasibility_report(1e-8).pass);
        let spec = tuple.inequality_operator().eigendecompose().unwrap().spectrum;
        let top = (4.0 * 5f64.sqrt() - 5.0) / 3.0;
        let rest = (5.0 - 2.0 * 5f64.sqrt()) / 3.0;
        let expected = [top, rest, rest];
        for (got, want) in spec.values().iter().zip(expected) {
            assert!((got - want).abs() <= 1e-12, "{:?}", spec.values());
        }
    }

    #[test]
    fn pentagram_scan_locates_orthogonality_angle() {
        // independent scan over the tilt: feasibility residual is minimized
        // at the analytic angle and the top eigenvalue there matches
        let ineq = Inequality::kcbs();
        let mut best = (f64::INFINITY, 0.0);
        for step in 1..=400 {
            let theta = std::f64::consts::FRAC_PI_2 * step as f64 / 401.0;
            let obs = pentagram_observables(theta);
            let worst = (0..5)
                .map(|i| {
                    let a = obs[i].as_matrix();
                    let b = obs[(i + 1) % 5].as_matrix();
                    max_abs(&(a * b - b * a))
                })
                .fold(0.0, f64::max);
            if worst < best.0 {
                best = (worst, theta);
            }
        }
        let analytic = pentagram_cos2theta().sqrt().acos();
        assert!((best.1 - analytic).abs() < 0.01, "scan angle {} vs {}", best.1, analytic);
        let obs = pentagram_observables(analytic);
        let tuple = ObservableTuple::new(&ineq, 3, obs).unwrap();
        let top = tuple.inequality_operator().eigendecompose().unwrap().spectrum.values()[0];
        assert!((top - 1.3147573).abs() <= 1e-7);
    }

    #[test]
    fn feasibility_detects_broken_dichotomy() {
        let tuple = tsirelson_tuple();
        let mut obs: Vec<HermitianMatrix> = tuple.observables().to_vec();
        let mut m = obs[0].as_matrix().clone();
        m[(0, 1)] += Complex64::new(0.1, 0.0);
        m[(1, 0)] += Complex64::new(0.1, 0.0);
        obs[0] = HermitianMatrix::new(m).unwrap();
        let candidate = ObservableTuple {
            ineq: tuple.inequality().clone(),
            dim: 4,
            observables: obs,
        };
        let report = candidate.feasibility_report(1e-8);
        assert!(!report.pass);
        assert!(report.worst_dichotomy > 0.01);
        assert!(matches!(
            ObservableTuple::new(
                tuple.inequality(),
                4,
                candidate.observables.clone()
            ),
            Err(Error::InfeasibleTuple(_))
        ));
    }

    #[test]
    fn observable_eigenvalues_are_signs() {
        for tuple in [tsirelson_tuple(), kcbs_pentagram_tuple()] {
            for obs in tuple.observables() {
                for &v in obs.eigendecompose().unwrap().spectrum.values() {
                    assert!((v.abs() - 1.0).abs() <= 1e-7);
                }
            }
        }
    }

    #[test]
    fn t_eigenvalues_bounded_by_coeff_sum() {
        for tuple in [tsirelson_tuple(), kcbs_pentagram_tuple()] {
            let bound = tuple.inequality().coeff_abs_sum().to_f64().unwrap();
            let spec = tuple.inequality_operator().eigendecompose().unwrap().spectrum;
            for &t in spec.values() {
                assert!(t.abs() <= bound + 1e-7);
            }
        }
    }

    #[test]
    fn context_products_have_unit_expectation_bound() {
        let mut r = rng(3);
        let tuple = tsirelson_tuple();
        for _ in 0..20 {
            let rho = random_state(4, 4, &mut r).unwrap();
            for term in tuple.inequality().terms().iter() {
                let mut prod = identity(4);
                for &k in &term.context {
                    prod = prod * tuple.observable(k).as_matrix();
                }
                let val = (rho.matrix().unwrap().as_matrix() * prod).trace();
                assert!(val.norm() <= 1.0 + 1e-7);
            }
        }
    }

    #[test]
    fn joint_eigenspaces_cases() {
        // empty family: one full block
        let blocks = joint_eigenspaces_with_dim(4, &[], 1e-8).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].ncols(), 4);

        // single diagonal: dims (2, 1) in descending eigenvalue order
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 1.0, -1.0]).unwrap();
        let blocks = joint_eigenspaces(&[&a], 1e-8).unwrap();
        let dims: Vec<usize> = blocks.iter().map(|b| b.ncols()).collect();
        assert_eq!(dims, vec![2, 1]);

        // refining pair: four singleton blocks
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]).unwrap();
        let b = HermitianMatrix::from_real_diagonal(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        let blocks = joint_eigenspaces(&[&a, &b], 1e-8).unwrap();
        let dims: Vec<usize> = blocks.iter().map(|m| m.ncols()).collect();
        assert_eq!(dims, vec![1, 1, 1, 1]);
    }

    #[test]
    fn joint_eigenspaces_blocks_are_orthogonal_and_complete() {
        let mut r = rng(17);
        let u = random_unitary(6, &mut r);
        let a = HermitianMatrix::new(
            &u * HermitianMatrix::from_real_diagonal(&[2.0, 2.0, 2.0, -1.0, -1.0, 0.0])
                .unwrap()
                .into_matrix()
                * u.adjoint(),
        )
        .unwrap();
        let b = HermitianMatrix::new(
            &u * HermitianMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 3.0, 3.0, 3.0])
                .unwrap()
                .into_matrix()
                * u.adjoint(),
        )
        .unwrap();
        let blocks = joint_eigenspaces(&[&a, &b], 1e-8).unwrap();
        let total: usize = blocks.iter().map(|m| m.ncols()).sum();
        assert_eq!(total, 6);
        for (i, x) in blocks.iter().enumerate() {
            let gram = x.adjoint() * x;
            assert!(max_abs(&(gram - identity(x.ncols()))) <= 1e-9);
            for y in blocks.iter().skip(i + 1) {
                assert!(max_abs(&(x.adjoint() * y)) <= 1e-9);
            }
            // each operator is diagonal on each block
            for op in [&a, &b] {
                let c = x.adjoint() * op.as_matrix() * x;
                let lambda = c[(0, 0)];
                let off = &c - identity(x.ncols()).scale(1.0) * lambda;
                assert!(max_abs(&off) <= 1e-8);
            }
        }
    }

    #[test]
    fn joint_eigenspaces_rejects_noncommuting() {
        let x = HermitianMatrix::new(sigma_x()).unwrap();
        let z = HermitianMatrix::new(sigma_z()).unwrap();
        assert!(matches!(
            joint_eigenspaces(&[&x, &z], 1e-8),
            Err(Error::NonCommutingInput { .. })
        ));
    }

    #[test]
    fn random_state_ranks() {
        let mut r = rng(7);
        let rho = random_state(1, 1, &mut r).unwrap();
        assert_eq!(rho.spectrum().unwrap().values(), &[1.0]);

        let rho = random_state(4, 4, &mut r).unwrap();
        assert!(rho.min_eigenvalue().unwrap() > 0.0);

        let rho = random_state(5, 2, &mut r).unwrap();
        let spec = rho.spectrum().unwrap();
        let tiny = spec.values().iter().filter(|&&p| p < 1e-12).count();
        assert_eq!(tiny, 3);

        assert!(matches!(
            random_state(3, 4, &mut r),
            Err(Error::InvalidRank { rank: 4, dim: 3 })
        ));
    }

    #[test]
    fn random_state_is_deterministic_per_seed() {
        let a = random_state(4, 4, &mut rng(42)).unwrap();
        let b = random_state(4, 4, &mut rng(42)).unwrap();
        assert_eq!(a.matrix().unwrap().as_matrix(), b.matrix().unwrap().as_matrix());
    }

    #[test]
    fn state_text_round_trips() {
        let mut r = rng(5);
        let rho = random_state(3, 2, &mut r).unwrap();
        let text = rho.to_text();
        let back = parse_state(&text).unwrap();
        assert!(max_abs(
            &(back.matrix().unwrap().as_matrix() - rho.matrix().unwrap().as_matrix())
        ) <= 1e-15);

        let spec_state =
            QuantumState::from_spectrum(Spectrum::new(vec![0.25; 4])).unwrap();
        let text = spec_state.to_text();
        let back = parse_state(&text).unwrap();
        assert!(!back.has_matrix());
        assert_eq!(back.spectrum().unwrap().values(), &[0.25; 4]);
    }

    #[test]
    fn tuple_text_round_trips() {
        let tuple = tsirelson_tuple();
        let text = tuple.to_text();
        let back = parse_tuple(&text, tuple.inequality()).unwrap();
        for (a, b) in back.observables().iter().zip(tuple.observables()) {
            assert!(max_abs(&(a.as_matrix() - b.as_matrix())) <= 1e-15);
        }
    }

    #[test]
    fn classical_point_matches_classical_value() {
        let ineq = Inequality::chsh();
        let a = Assignment::new(vec![1, 1, 1, 1]).unwrap();
        let tuple = classical_tuple(&ineq, 4, a.signs());
        let t = tuple.inequality_operator();
        let rho = QuantumState::maximally_mixed(4).unwrap();
        let val = (rho.matrix().unwrap().as_matrix() * t.as_matrix()).trace().re;
        let classical = ineq.classical_value(&a).unwrap().to_f64().unwrap();
        assert!((val - classical).abs() <= 1e-12);
    }
}
