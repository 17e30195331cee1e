//! Density-matrix algebra: construction, mixing, partial trace, and
//! von Neumann entropy over complex Hermitian matrices.
//!
//! All energies are in units with ħ = 1 and entropies are reported in
//! nats (k_B = 1); [`K_B`] rescales the output unit if needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major logical layout.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = DVector<Complex64>;

/// Tolerance on max|ρ − ρ†| for a valid density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance on |Tr ρ − 1| for a valid density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues below this floor invalidate a density matrix.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Eigenvalues in [EIGENVALUE_FLOOR, EIGENVALUE_CLAMP] are treated as 0
/// in entropy sums; finite-precision eigensolvers produce tiny negatives.
pub const EIGENVALUE_CLAMP: f64 = 1e-12;
/// Norm deviation beyond which a raw amplitude vector is rejected.
pub const PURE_NORM_TOL: f64 = 1e-9;

/// Boltzmann constant in output units. Entropies are S = −k_B Σ λ ln λ;
/// with K_B = 1 the values are plain nats.
pub const K_B: f64 = 1.0;

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("matrix has NaN/Inf entries".into()))
    }
}

/// max_ij |m_ij − conj(m_ji)|
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// max_ij |a_ij − b_ij|
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// [a, b] = ab − ba
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues (ascending)
/// and the unitary of column eigenvectors. The input is symmetrized to
/// (m + m†)/2 first so rounding-level asymmetry cannot leak into the result.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    DVector::from_vec(ev)
}

/// Trace norm distance (1/2)·Tr|a − b| between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    0.5 * hermitian_eigenvalues(&d).iter().map(|x| x.abs()).sum::<f64>()
}

// --- text format ------------------------------------------------------
//
// One row per line, entries as "re+imj" tokens separated by whitespace,
// e.g. "5.0e-1+0.0e0j -2.5e-1-1.0e0j".

pub fn format_complex(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}j", z.re, z.im)
}

pub fn parse_complex(token: &str, line: usize) -> Result<Complex64> {
    let body = token
        .strip_suffix(['j', 'J'])
        .ok_or_else(|| Error::parse(line, format!("complex token `{token}` lacks j suffix")))?;
    // split before the sign of the imaginary part; signs directly after
    // an exponent marker belong to the exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
            break;
        }
    }
    let i = split.ok_or_else(|| Error::parse(line, format!("malformed complex `{token}`")))?;
    let re: f64 = body[..i]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad real part in `{token}`")))?;
    let im: f64 = body[i..]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad imaginary part in `{token}`")))?;
    Ok(Complex64::new(re, im))
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| parse_complex(t, k + 1))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(k + 1, "ragged row width"));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "empty matrix text"));
    }
    let nr = rows.len();
    let nc = rows[0].len();
    Ok(CMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

// --- pure states ------------------------------------------------------

/// Normalized amplitude vector over an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Accepts amplitudes whose norm deviates from 1 by at most
    /// [`PURE_NORM_TOL`], then renormalizes to machine precision.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Validation("empty amplitude vector".into()));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::Validation(format!(
                "amplitude norm² = {norm_sq}, deviates from 1 by more than {PURE_NORM_TOL}"
            )));
        }
        let scale = 1.0 / norm_sq.sqrt();
        let v = CVector::from_vec(amplitudes).scale(scale);
        Ok(Self { amplitudes: v })
    }

    /// |k⟩ in a dim-dimensional space.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut v = CVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }
}

// --- density matrices -------------------------------------------------

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates against the default tolerances.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, HERMITICITY_TOL, TRACE_TOL, EIGENVALUE_FLOOR)
    }

    /// Validates against caller-supplied tolerances. Trajectory recording
    /// uses relaxed tolerances because integrator drift up to the asserted
    /// bounds is legal there.
    pub fn with_tolerances(
        m: CMatrix,
        herm_tol: f64,
        trace_tol: f64,
        eig_floor: f64,
    ) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.is_empty() {
            return Err(Error::Dimension("empty matrix".into()));
        }
        check_finite(&m)?;
        let herm = hermiticity_deviation(&m);
        if herm > herm_tol {
            return Err(Error::Validation(format!(
                "hermiticity deviation {herm:.3e} exceeds {herm_tol:.1e}"
            )));
        }
        let tr = m.trace();
        let tr_dev = (tr - Complex64::new(1.0, 0.0)).norm();
        if tr_dev > trace_tol {
            return Err(Error::Validation(format!(
                "trace deviation {tr_dev:.3e} exceeds {trace_tol:.1e}"
            )));
        }
        let min_eig = hermitian_eigenvalues(&m)[0];
        if min_eig < eig_floor {
            return Err(Error::Validation(format!(
                "minimum eigenvalue {min_eig:.3e} below floor {eig_floor:.1e}"
            )));
        }
        Ok(Self { m })
    }

    /// ρ = |ψ⟩⟨ψ|. Infallible: PureState already guarantees normalization.
    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self { m: v * v.adjoint() }
    }

    /// ρ = |ψ⟩⟨ψ| from raw amplitudes; rejects norm deviation > 1e-9.
    pub fn from_amplitudes(amplitudes: &[Complex64]) -> Result<Self> {
        Ok(Self::from_pure(&PureState::new(amplitudes.to_vec())?))
    }

    /// ρ = Σ p_k ρ_k. Weights must be nonnegative and sum to 1 within 1e-12.
    pub fn mix(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Validation("mix of zero states".into()));
        }
        let dim = parts[0].1.dim();
        let mut wsum = 0.0;
        for (w, rho) in parts {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::Validation(format!("negative or non-finite weight {w}")));
            }
            if rho.dim() != dim {
                return Err(Error::Dimension("mixed states of unequal dimension".into()));
            }
            wsum += w;
        }
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "mixture weights sum to {wsum}, not 1"
            )));
        }
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            m += rho.matrix().scale(*w);
        }
        Self::new(m)
    }

    /// ρ = I/n, the maximally mixed state.
    pub fn maximally_mixed(dim: usize) -> Self {
        assert!(dim > 0);
        let m = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// S = −k_B Σ λ ln λ with λ ln λ := 0 for λ ≤ the clamp tolerance.
    /// Always in [0, k_B ln dim] up to rounding.
    pub fn vn_entropy(&self) -> f64 {
        entropy_from_eigenvalues(self.eigenvalues().as_slice())
    }

    /// (1/2)·Tr|ρ − σ|
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        trace_distance(&self.m, &other.m)
    }
}

fn entropy_from_eigenvalues(eigs: &[f64]) -> f64 {
    let s: f64 = eigs
        .iter()
        .filter(|&&l| l > EIGENVALUE_CLAMP)
        .map(|&l| -l * l.ln())
        .sum();
    K_B * s.max(0.0)
}

/// S = −k_B Tr(ρ ln ρ) for a raw matrix; validates the density-matrix
/// invariants first and rejects eigenvalues below the floor.
pub fn vn_entropy(m: &CMatrix) -> Result<f64> {
    let rho = DensityMatrix::new(m.clone())?;
    Ok(rho.vn_entropy())
}

// --- diagnostics ------------------------------------------------------

/// Diagnostic report from [`check_density`]; never an error.
#[derive(Debug, Clone, Copy)]
pub struct DensityReport {
    pub square: bool,
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub valid: bool,
}

/// Reports Hermiticity deviation, trace deviation, and the minimum
/// eigenvalue of the Hermitian part, judged against a single tolerance.
pub fn check_density(m: &CMatrix, tol: f64) -> DensityReport {
    if m.nrows() != m.ncols() || m.is_empty() {
        return DensityReport {
            square: false,
            hermiticity_deviation: f64::INFINITY,
            trace_deviation: f64::INFINITY,
            min_eigenvalue: f64::NEG_INFINITY,
            valid: false,
        };
    }
    let herm = hermiticity_deviation(m);
    let tr_dev = (m.trace() - Complex64::new(1.0, 0.0)).norm();
    let min_eig = hermitian_eigenvalues(m)[0];
    DensityReport {
        square: true,
        hermiticity_deviation: herm,
        trace_deviation: tr_dev,
        min_eigenvalue: min_eig,
        valid: herm <= tol && tr_dev <= tol && min_eig >= -tol,
    }
}

// --- tensor-factor layout and partial trace ---------------------------

/// Ordered factor dimensions of a tensor-product space, row-major:
/// global index = ((i_0·d_1 + i_1)·d_2 + i_2)···
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    dims: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Validation("factor dims must be ≥ 1".into()));
        }
        Ok(Self { dims })
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.dims
    }
}

/// Traces out every factor except `keep`, returning the reduced state of
/// that factor. Trace is preserved exactly (up to rounding).
pub fn partial_trace(
    rho: &DensityMatrix,
    layout: &SpaceLayout,
    keep: usize,
) -> Result<DensityMatrix> {
    let n = rho.dim();
    if layout.total_dim() != n {
        return Err(Error::Dimension(format!(
            "layout dimension {} does not match state dimension {n}",
            layout.total_dim()
        )));
    }
    if keep >= layout.dims.len() {
        return Err(Error::Dimension(format!(
            "keep index {keep} out of range for {} factors",
            layout.dims.len()
        )));
    }
    let dk = layout.dims[keep];
    // digit of the kept factor and the rank of all remaining digits
    let mut kept_digit = vec![0usize; n];
    let mut rest_rank = vec![0usize; n];
    for i in 0..n {
        let mut rem = i;
        let mut rank = 0usize;
        for (f, &d) in layout.dims.iter().enumerate().rev() {
            let digit = rem % d;
            rem /= d;
            if f == keep {
                kept_digit[i] = digit;
            } else {
                rank = rank * d + digit;
            }
        }
        rest_rank[i] = rank;
    }
    let mut out = CMatrix::zeros(dk, dk);
    let m = rho.matrix();
    for i in 0..n {
        for j in 0..n {
            if rest_rank[i] == rest_rank[j] {
                out[(kept_digit[i], kept_digit[j])] += m[(i, j)];
            }
        }
    }
    DensityMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn from_pure_basis_state() {
        let rho = DensityMatrix::from_pure(&PureState::basis_state(2, 0));
        assert_close(rho.matrix()[(0, 0)].re, 1.0, 1e-15);
        assert_close(rho.matrix()[(1, 1)].re, 0.0, 1e-15);
        assert!(rho.vn_entropy() <= 1e-10);
    }

    #[test]
    fn from_pure_symmetric_superposition() {
        let a = 1.0 / 2.0_f64.sqrt();
        let rho =
            DensityMatrix::from_amplitudes(&[c(a, 0.0), c(a, 0.0)]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(rho.matrix()[(i, j)].re, 0.5, 1e-15);
                assert_close(rho.matrix()[(i, j)].im, 0.0, 1e-15);
            }
        }
    }

    #[test]
    fn from_pure_outer_product_values() {
        // direct outer-product evaluation for c_up = 0.6, c_down = 0.8
        let rho = DensityMatrix::from_amplitudes(&[c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        assert_close(rho.matrix()[(0, 0)].re, 0.36, 1e-15);
        assert_close(rho.matrix()[(1, 1)].re, 0.64, 1e-15);
        assert_close(rho.matrix()[(0, 1)].re, 0.48, 1e-15);
        assert_close(rho.matrix()[(1, 0)].re, 0.48, 1e-15);
    }

    #[test]
    fn from_amplitudes_rejects_bad_norm() {
        let err = DensityMatrix::from_amplitudes(&[c(1.0, 0.0), c(0.1, 0.0)]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn mix_single_entry_equals_from_pure() {
        let psi = PureState::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let direct = DensityMatrix::from_pure(&psi);
        let mixed = DensityMatrix::mix(&[(1.0, direct.clone())]).unwrap();
        assert!(max_abs_diff(direct.matrix(), mixed.matrix()) <= 1e-15);
    }

    #[test]
    fn mix_orthogonal_basis_is_maximally_mixed() {
        let n = 5;
        let parts: Vec<(f64, DensityMatrix)> = (0..n)
            .map(|k| {
                (
                    1.0 / n as f64,
                    DensityMatrix::from_pure(&PureState::basis_state(n, k)),
                )
            })
            .collect();
        let rho = DensityMatrix::mix(&parts).unwrap();
        let expect = DensityMatrix::maximally_mixed(n);
        assert!(max_abs_diff(rho.matrix(), expect.matrix()) <= 1e-15);
        assert_close(rho.vn_entropy(), (n as f64).ln(), 1e-12);
    }

    #[test]
    fn mix_diagonal_convexity() {
        let up = DensityMatrix::from_pure(&PureState::basis_state(2, 0));
        let down = DensityMatrix::from_pure(&PureState::basis_state(2, 1));
        let rho = DensityMatrix::mix(&[(0.25, up), (0.75, down)]).unwrap();
        assert_close(rho.matrix()[(0, 0)].re, 0.25, 1e-15);
        assert_close(rho.matrix()[(1, 1)].re, 0.75, 1e-15);
    }

    #[test]
    fn mix_rejects_negative_weight_and_bad_sum() {
        let up = DensityMatrix::from_pure(&PureState::basis_state(2, 0));
        assert!(DensityMatrix::mix(&[(-0.5, up.clone()), (1.5, up.clone())]).is_err());
        assert!(DensityMatrix::mix(&[(0.6, up.clone()), (0.6, up)]).is_err());
    }

    #[test]
    fn entropy_maximally_mixed_two_level() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert_close(rho.vn_entropy(), 2.0_f64.ln(), 1e-14);
    }

    #[test]
    fn entropy_scalar_evaluation() {
        // oracle: -(0.36 ln 0.36 + 0.64 ln 0.64) evaluated by hand
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.36, 0.0), c(0.64, 0.0)]));
        let rho = DensityMatrix::new(m).unwrap();
        assert_close(rho.vn_entropy(), 0.6534181947937018, 1e-12);
    }

    #[test]
    fn vn_entropy_rejects_invalid_matrix() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(0.7, 0.0)]));
        assert!(vn_entropy(&m).is_err());
    }

    #[test]
    fn partial_trace_product_state() {
        let a = DensityMatrix::from_amplitudes(&[c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        let b = DensityMatrix::maximally_mixed(3);
        let prod = a.matrix().kronecker(b.matrix());
        let rho = DensityMatrix::new(prod).unwrap();
        let layout = SpaceLayout::new(vec![2, 3]).unwrap();
        let ra = partial_trace(&rho, &layout, 0).unwrap();
        let rb = partial_trace(&rho, &layout, 1).unwrap();
        assert!(max_abs_diff(ra.matrix(), a.matrix()) <= 1e-12);
        assert!(max_abs_diff(rb.matrix(), b.matrix()) <= 1e-12);
    }

    #[test]
    fn partial_trace_bell_state() {
        // direct 4x4 oracle: sum over the environment digit by hand
        let s = 1.0 / 2.0_f64.sqrt();
        let psi = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let rho = DensityMatrix::from_amplitudes(&psi).unwrap();
        let mut oracle = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    oracle[(i, j)] += rho.matrix()[(i * 2 + k, j * 2 + k)];
                }
            }
        }
        let layout = SpaceLayout::new(vec![2, 2]).unwrap();
        let reduced = partial_trace(&rho, &layout, 0).unwrap();
        assert!(max_abs_diff(reduced.matrix(), &oracle) <= 1e-15);
        let half = DensityMatrix::maximally_mixed(2);
        assert!(max_abs_diff(reduced.matrix(), half.matrix()) <= 1e-12);
        assert_close(reduced.vn_entropy(), 2.0_f64.ln(), 1e-12);
    }

    #[test]
    fn partial_trace_single_factor_is_identity() {
        let rho = DensityMatrix::from_amplitudes(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let layout = SpaceLayout::new(vec![2]).unwrap();
        let out = partial_trace(&rho, &layout, 0).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) <= 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(4);
        let layout = SpaceLayout::new(vec![3, 2]).unwrap();
        assert!(matches!(
            partial_trace(&rho, &layout, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn check_density_reports() {
        let ok = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        assert!(check_density(&ok, 1e-10).valid);

        let bad_trace = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(0.7, 0.0)]));
        let rep = check_density(&bad_trace, 1e-10);
        assert!(!rep.valid);
        assert_close(rep.trace_deviation, 0.4, 1e-12);

        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.1, 0.0), c(-0.1, 0.0)]));
        let rep = check_density(&neg, 1e-10);
        assert!(!rep.valid);
        assert_close(rep.min_eigenvalue, -0.1, 1e-12);
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.25));
        let text = format_matrix(&m);
        let back = parse_matrix(&text).unwrap();
        assert!(max_abs_diff(&m, &back) == 0.0);
        // terse literals parse too
        let simple = parse_matrix("1+0j 0+0j\n0+0j 0.5-0.25j\n").unwrap();
        assert_eq!(simple[(1, 1)], c(0.5, -0.25));
    }

    #[test]
    fn parse_matrix_reports_line_numbers() {
        let err = parse_matrix("1+0j\nnot-a-number\n");
        match err {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    // --- properties ----------------------------------------------------

    use proptest::prelude::*;

    fn random_density(dim: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = &a * a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
    }

    fn random_unitary(dim: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = (&a + a.adjoint()).scale(0.5);
        let (ev, vecs) = hermitian_eigen(&h);
        let phases = CMatrix::from_diagonal(&CVector::from_iterator(
            dim,
            ev.iter().map(|&l| Complex64::new(0.0, l).exp()),
        ));
        &vecs * phases * vecs.adjoint()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn entropy_bounds(dim in 2usize..6, seed in any::<u64>()) {
            let rho = random_density(dim, seed);
            let s = rho.vn_entropy();
            prop_assert!(s >= 0.0);
            prop_assert!(s <= (dim as f64).ln() + 1e-10);
        }

        #[test]
        fn pure_states_have_zero_entropy(dim in 2usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let raw: Vec<Complex64> = (0..dim)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm: f64 = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let amps: Vec<Complex64> = raw.iter().map(|z| z / norm).collect();
            let rho = DensityMatrix::from_amplitudes(&amps).unwrap();
            prop_assert!(rho.vn_entropy() <= 1e-10);
        }

        #[test]
        fn mix_flattening(seed in any::<u64>(), wa in 0.05f64..0.95, wb in 0.05f64..0.95) {
            let r1 = random_density(3, seed);
            let r2 = random_density(3, seed.wrapping_add(1));
            let r3 = random_density(3, seed.wrapping_add(2));
            // mix of mixes
            let inner = DensityMatrix::mix(&[(wb, r2.clone()), (1.0 - wb, r3.clone())]).unwrap();
            let nested = DensityMatrix::mix(&[(wa, r1.clone()), (1.0 - wa, inner)]).unwrap();
            // flat mix with multiplied weights
            let flat = DensityMatrix::mix(&[
                (wa, r1),
                ((1.0 - wa) * wb, r2),
                ((1.0 - wa) * (1.0 - wb), r3),
            ]);
            prop_assume!(flat.is_ok()); // weight product may miss 1 by > 1e-12
            prop_assert!(max_abs_diff(nested.matrix(), flat.unwrap().matrix()) <= 1e-12);
        }

        #[test]
        fn partial_trace_recovers_factors(seed in any::<u64>()) {
            let a = random_density(2, seed);
            let b = random_density(3, seed.wrapping_add(7));
            let rho = DensityMatrix::new(a.matrix().kronecker(b.matrix())).unwrap();
            let layout = SpaceLayout::new(vec![2, 3]).unwrap();
            let ra = partial_trace(&rho, &layout, 0).unwrap();
            let rb = partial_trace(&rho, &layout, 1).unwrap();
            prop_assert!(max_abs_diff(ra.matrix(), a.matrix()) <= 1e-12);
            prop_assert!(max_abs_diff(rb.matrix(), b.matrix()) <= 1e-12);
        }

        #[test]
        fn entropy_is_unitary_invariant(dim in 2usize..6, seed in any::<u64>()) {
            let rho = random_density(dim, seed);
            let u = random_unitary(dim, seed);
            let rotated = DensityMatrix::new(&u * rho.matrix() * u.adjoint()).unwrap();
            prop_assert!((rotated.vn_entropy() - rho.vn_entropy()).abs() <= 1e-9);
        }
    }
}
