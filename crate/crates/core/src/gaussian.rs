//! Gaussian covariance-matrix engine.
//!
//! States are zero-mean Gaussians over the quadrature ordering
//! (q₁..q_N, p₁..p_N) with vacuum variance 1/2 per quadrature. A cluster
//! with adjacency V is prepared from squeezed vacua by the linear-optics
//! unitary U = (I + iV)(V² + I)^{-1/2} O, O an arbitrary real orthogonal
//! matrix. Cluster quality is read off the nullifiers δᵢ = pᵢ - Σ_{j~i} qⱼ,
//! whose variances are computed both through the covariance matrix and in
//! closed form (Γ = M^{1/2} O D_p Oᵀ M^{1/2}, M = V² + I); the two routes
//! serve as independent checks of each other.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectrum::SqueezingSpectrum;

type C64 = Complex<f64>;

/// Vacuum variance of a single quadrature ([q, p] = i convention).
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Symmetry tolerance for covariance matrices (relative to largest entry).
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Unitarity tolerance for computed unitaries.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Orthogonality tolerance for orthogonal matrices.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Symplecticity tolerance required of transforms fed to
/// [`apply_symplectic`].
pub const SYMPLECTIC_TOL: f64 = 1e-8;

/// Tolerance on the uncertainty-relation spectrum of σ + (i/2)Ω.
pub const PHYSICALITY_TOL: f64 = 1e-8;

/// Relative eigenvalue cutoff for symmetric positive-definite inputs.
pub const SPD_EIG_REL_TOL: f64 = 1e-12;

/// 2N×2N real symmetric covariance matrix over (q₁..q_N, p₁..p_N).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    sigma: DMatrix<f64>,
    modes: usize,
}

impl CovarianceMatrix {
    /// Validates symmetry (within [`SYMMETRY_TOL`] relative to the largest
    /// entry) and even dimension, then stores the exactly symmetrized
    /// matrix.
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if sigma.ncols() != d || d == 0 || d % 2 != 0 {
            return Err(Error::Dimension(format!(
                "covariance must be 2N x 2N, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let scale = sigma.amax().max(1.0);
        let mut max_asym: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                max_asym = max_asym.max((sigma[(i, j)] - sigma[(j, i)]).abs());
            }
        }
        if max_asym > SYMMETRY_TOL * scale {
            return Err(Error::Numeric(format!(
                "covariance asymmetry {max_asym:.3e} exceeds tolerance"
            )));
        }
        let symmetrized = (&sigma + sigma.transpose()) * 0.5;
        Ok(CovarianceMatrix {
            sigma: symmetrized,
            modes: d / 2,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Runs the full physicality battery: positive definiteness,
    /// uncertainty relation σ + (i/2)Ω ⪰ 0, and det(2σ) (equal to 1 for
    /// pure states).
    pub fn physicality(&self) -> PhysicalityReport {
        let eig = self.sigma.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let det_2sigma = eig.eigenvalues.iter().map(|l| 2.0 * l).product();

        let d = 2 * self.modes;
        let omega = symplectic_form(self.modes);
        let mut h = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] = C64::new(self.sigma[(i, j)], 0.5 * omega[(i, j)]);
            }
        }
        let heig = h.symmetric_eigen();
        let min_uncertainty_eig = heig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);

        PhysicalityReport {
            min_eigenvalue: min_eig,
            min_uncertainty_eig,
            det_2sigma,
        }
    }

    /// True when positive definite and the uncertainty spectrum is
    /// non-negative within [`PHYSICALITY_TOL`].
    pub fn is_physical(&self) -> bool {
        let rep = self.physicality();
        rep.min_eigenvalue > 0.0 && rep.min_uncertainty_eig >= -PHYSICALITY_TOL
    }
}

/// Summary of the physicality checks on a covariance matrix.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalityReport {
    /// Smallest eigenvalue of σ (must be positive).
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue of σ + (i/2)Ω (non-negative for physical states).
    pub min_uncertainty_eig: f64,
    /// det(2σ); equals 1 for pure Gaussian states.
    pub det_2sigma: f64,
}

/// N×N complex unitary stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    dim: usize,
}

impl UnitaryMatrix {
    /// Validates U†U = I within [`UNITARITY_TOL`].
    pub fn new(re: DMatrix<f64>, im: DMatrix<f64>) -> Result<Self> {
        UnitaryMatrix::with_tolerance(re, im, UNITARITY_TOL)
    }

    /// Validates U†U = I within `tol`; used for externally supplied
    /// matrices printed at reduced precision.
    pub fn with_tolerance(re: DMatrix<f64>, im: DMatrix<f64>, tol: f64) -> Result<Self> {
        let d = re.nrows();
        if re.ncols() != d || im.nrows() != d || im.ncols() != d || d == 0 {
            return Err(Error::Dimension(
                "unitary parts must be square and same size".into(),
            ));
        }
        let u = complex_from_parts(&re, &im);
        let defect = (u.adjoint() * &u - DMatrix::<C64>::identity(d, d)).camax();
        if defect > tol {
            return Err(Error::Numeric(format!(
                "unitarity defect {defect:.3e} exceeds tolerance {tol:.1e}"
            )));
        }
        Ok(UnitaryMatrix { re, im, dim: d })
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix {
            re: DMatrix::identity(n, n),
            im: DMatrix::zeros(n, n),
            dim: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> &DMatrix<f64> {
        &self.im
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        complex_from_parts(&self.re, &self.im)
    }

    /// Largest absolute entry of U†U - I.
    pub fn unitarity_defect(&self) -> f64 {
        let u = self.to_complex();
        (u.adjoint() * &u - DMatrix::<C64>::identity(self.dim, self.dim)).camax()
    }

    /// Block-diagonal direct sum, acting as `self` on the first modes and
    /// `other` on the rest.
    pub fn direct_sum(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        let n = self.dim;
        let p = other.dim;
        let mut re = DMatrix::zeros(n + p, n + p);
        let mut im = DMatrix::zeros(n + p, n + p);
        re.view_mut((0, 0), (n, n)).copy_from(&self.re);
        im.view_mut((0, 0), (n, n)).copy_from(&self.im);
        re.view_mut((n, n), (p, p)).copy_from(&other.re);
        im.view_mut((n, n), (p, p)).copy_from(&other.im);
        UnitaryMatrix {
            re,
            im,
            dim: n + p,
        }
    }
}

/// N×N real orthogonal matrix (OᵀO = I).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    o: DMatrix<f64>,
}

impl OrthogonalMatrix {
    /// Validates OᵀO = I within [`ORTHOGONALITY_TOL`].
    pub fn new(o: DMatrix<f64>) -> Result<Self> {
        let d = o.nrows();
        if o.ncols() != d || d == 0 {
            return Err(Error::Dimension("orthogonal matrix must be square".into()));
        }
        let defect = (o.transpose() * &o - DMatrix::<f64>::identity(d, d)).amax();
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::Numeric(format!(
                "orthogonality defect {defect:.3e} exceeds tolerance"
            )));
        }
        Ok(OrthogonalMatrix { o })
    }

    pub fn identity(n: usize) -> Self {
        OrthogonalMatrix {
            o: DMatrix::identity(n, n),
        }
    }

    /// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix
    /// with the sign of each R diagonal entry folded into the Q column.
    pub fn random_haar(n: usize, rng: &mut impl Rng) -> Self {
        let normal = StandardNormal;
        let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| normal.sample(rng));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                for i in 0..n {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        OrthogonalMatrix { o: q }
    }

    pub(crate) fn from_matrix_unchecked(o: DMatrix<f64>) -> Self {
        OrthogonalMatrix { o }
    }

    pub fn dim(&self) -> usize {
        self.o.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.o
    }
}

/// Per-node nullifier variances: raw (quadrature units), vacuum-normalized
/// (dimensionless) and in dB, plus their dB mean.
#[derive(Debug, Clone, PartialEq)]
pub struct NullifierReport {
    pub raw_variances: Vec<f64>,
    pub normalized: Vec<f64>,
    pub db: Vec<f64>,
    /// Mean of the per-node dB values.
    pub mu_j: f64,
}

impl NullifierReport {
    fn from_raw(raw: Vec<f64>, divisors: &[f64]) -> Self {
        let normalized: Vec<f64> = raw
            .iter()
            .zip(divisors)
            .map(|(r, d)| r / d)
            .collect();
        let db: Vec<f64> = normalized.iter().map(|v| 10.0 * v.log10()).collect();
        let mu_j = db.iter().sum::<f64>() / db.len() as f64;
        NullifierReport {
            raw_variances: raw,
            normalized,
            db,
            mu_j,
        }
    }

    /// Mean dB over all nodes except those listed in `excluded`.
    pub fn excluded_mean_db(&self, excluded: &[usize]) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, v) in self.db.iter().enumerate() {
            if !excluded.contains(&i) {
                sum += v;
                count += 1;
            }
        }
        sum / count as f64
    }
}

/// Normalization divisor for node `i`: the variance its nullifier would
/// have on pure vacuum input, (1 + deg_i)·vac. Vacuum input then reads
/// 0 dB on every node regardless of degree.
pub fn nullifier_divisors(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|i| (1.0 + g.degree(i) as f64) * VACUUM_VARIANCE)
        .collect()
}

fn complex_from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<C64> {
    DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// Standard symplectic form Ω = [[0, I], [-I, 0]] in (q, p) ordering.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        omega[(i, modes + i)] = 1.0;
        omega[(modes + i, i)] = -1.0;
    }
    omega
}

/// Largest absolute entry of SΩSᵀ - Ω.
pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let modes = s.nrows() / 2;
    let omega = symplectic_form(modes);
    (s * &omega * s.transpose() - omega).amax()
}

/// Inverse square root of a symmetric positive-definite matrix via
/// symmetric eigendecomposition.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(m, -0.5)
}

/// Square root of a symmetric positive-definite matrix.
pub fn sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(m, 0.5)
}

fn spd_power(m: &DMatrix<f64>, exponent: f64) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    if m.ncols() != d || d == 0 {
        return Err(Error::Dimension("matrix must be square".into()));
    }
    let scale = m.amax().max(1.0);
    for i in 0..d {
        for j in i + 1..d {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Numeric("matrix is not symmetric".into()));
            }
        }
    }
    let eig = m.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let cutoff = SPD_EIG_REL_TOL * max_eig.max(1.0);
    if eig.eigenvalues.iter().any(|&l| l <= cutoff) {
        return Err(Error::Numeric(format!(
            "eigenvalue at or below cutoff {cutoff:.3e}; matrix is not positive definite"
        )));
    }
    let powered = DVector::from_iterator(d, eig.eigenvalues.iter().map(|l| l.powf(exponent)));
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..d {
        let f = powered[j];
        for i in 0..d {
            scaled[(i, j)] *= f;
        }
    }
    // Q diag(λ^e) Qᵀ, then exact symmetrization against rounding.
    let out = scaled * eig.eigenvectors.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Construction unitary U = (I + iV)(V² + I)^{-1/2} O of the cluster with
/// adjacency V and free orthogonal matrix O.
pub fn cluster_unitary(g: &Graph, o: &OrthogonalMatrix) -> Result<UnitaryMatrix> {
    let n = g.n();
    if o.dim() != n {
        return Err(Error::Dimension(format!(
            "orthogonal matrix dim {} != node count {n}",
            o.dim()
        )));
    }
    let v = g.adjacency();
    let m = v * v + DMatrix::<f64>::identity(n, n);
    let m_inv_sqrt = inv_sqrt_spd(&m)?;
    let re = &m_inv_sqrt * o.matrix();
    let im = v * &re;
    UnitaryMatrix::new(re, im)
}

/// Orthogonal symplectic transform of a linear-optics unitary, acting on
/// (q, p) ordered quadratures: S = [[Re U, -Im U], [Im U, Re U]].
pub fn symplectic_from_unitary(u: &UnitaryMatrix) -> DMatrix<f64> {
    let n = u.dim();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(u.re());
    s.view_mut((0, n), (n, n)).copy_from(&(-u.im()));
    s.view_mut((n, 0), (n, n)).copy_from(u.im());
    s.view_mut((n, n), (n, n)).copy_from(u.re());
    s
}

/// Covariance of the multimode squeezed vacuum described by `s`: diagonal
/// with q-block entries vac·10^(-dB/10) and p-block entries vac·10^(dB/10).
pub fn input_covariance(s: &SqueezingSpectrum) -> CovarianceMatrix {
    let n = s.len();
    let q = s.q_variances();
    let p = s.p_variances();
    let mut sigma = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        sigma[(k, k)] = q[k];
        sigma[(n + k, n + k)] = p[k];
    }
    CovarianceMatrix {
        sigma,
        modes: n,
    }
}

/// Congruence transform σ → SσSᵀ. Rejects transforms whose symplectic
/// defect exceeds [`SYMPLECTIC_TOL`].
pub fn apply_symplectic(s: &DMatrix<f64>, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let d = 2 * sigma.modes();
    if s.nrows() != d || s.ncols() != d {
        return Err(Error::Dimension(format!(
            "transform is {}x{}, state needs {d}x{d}",
            s.nrows(),
            s.ncols()
        )));
    }
    let defect = symplectic_defect(s);
    if defect > SYMPLECTIC_TOL {
        return Err(Error::Contract(format!(
            "transform symplectic defect {defect:.3e} exceeds {SYMPLECTIC_TOL:.1e}"
        )));
    }
    CovarianceMatrix::new(s * sigma.matrix() * s.transpose())
}

/// Full cluster pipeline: input covariance → construction unitary →
/// symplectic → output covariance.
pub fn cluster_covariance(
    g: &Graph,
    o: &OrthogonalMatrix,
    s: &SqueezingSpectrum,
) -> Result<CovarianceMatrix> {
    if s.len() != g.n() {
        return Err(Error::Dimension(format!(
            "spectrum has {} modes, graph has {} nodes",
            s.len(),
            g.n()
        )));
    }
    let u = cluster_unitary(g, o)?;
    let sp = symplectic_from_unitary(&u);
    apply_symplectic(&sp, &input_covariance(s))
}

/// Nullifier variances read off a covariance matrix: the coefficient
/// vector of δᵢ is -V on the q-block rows and a unit at pᵢ, so
/// raw[i] = dᵢᵀ σ dᵢ.
pub fn nullifier_variances(sigma: &CovarianceMatrix, g: &Graph) -> Result<NullifierReport> {
    let n = g.n();
    if sigma.modes() != n {
        return Err(Error::Dimension(format!(
            "covariance has {} modes, graph has {n} nodes",
            sigma.modes()
        )));
    }
    let v = g.adjacency();
    // Coefficient matrix B = [-V | I], one nullifier per row.
    let mut b = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -v[(i, j)];
        }
        b[(i, n + i)] = 1.0;
    }
    let bs = &b * sigma.matrix();
    let raw: Vec<f64> = (0..n).map(|i| bs.row(i).dot(&b.row(i))).collect();
    Ok(NullifierReport::from_raw(raw, &nullifier_divisors(g)))
}

/// Nullifier variances in closed form, bypassing the covariance matrix:
/// δ = M^{1/2} O p_in with M = V² + I, so Γ = M^{1/2} O D_p Oᵀ M^{1/2}
/// and raw[i] = Γᵢᵢ. Independent of the covariance route above.
pub fn nullifier_variances_closed_form(
    g: &Graph,
    o: &OrthogonalMatrix,
    s: &SqueezingSpectrum,
) -> Result<NullifierReport> {
    let n = g.n();
    if o.dim() != n || s.len() != n {
        return Err(Error::Dimension(format!(
            "graph {n}, orthogonal {}, spectrum {}",
            o.dim(),
            s.len()
        )));
    }
    let v = g.adjacency();
    let m = v * v + DMatrix::<f64>::identity(n, n);
    let m_sqrt = sqrt_spd(&m)?;
    let w = &m_sqrt * o.matrix();
    let d_p = s.p_variances();
    let raw: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| w[(i, k)] * w[(i, k)] * d_p[k]).sum())
        .collect();
    Ok(NullifierReport::from_raw(raw, &nullifier_divisors(g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RngSeed;
    use approx::assert_relative_eq;

    fn edge_graph() -> Graph {
        Graph::from_edge_list_str("nodes 2\n0 1\n").unwrap()
    }

    #[test]
    fn inv_sqrt_identity_and_scalar() {
        let i4 = DMatrix::<f64>::identity(4, 4);
        assert_relative_eq!(inv_sqrt_spd(&i4).unwrap(), i4, epsilon = 1e-12);
        let m = DMatrix::<f64>::identity(3, 3) * 4.0;
        let r = inv_sqrt_spd(&m).unwrap();
        assert_relative_eq!(r, DMatrix::<f64>::identity(3, 3) * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn inv_sqrt_edge_graph_m() {
        // V² + I = 2I for the 2-node edge graph
        let g = edge_graph();
        let v = g.adjacency();
        let m = v * v + DMatrix::<f64>::identity(2, 2);
        let r = inv_sqrt_spd(&m).unwrap();
        let expect = DMatrix::<f64>::identity(2, 2) / 2f64.sqrt();
        assert_relative_eq!(r, expect, epsilon = 1e-12);
        // defining property: r·r·m = I
        let check = &r * &r * &m;
        assert_relative_eq!(check, DMatrix::<f64>::identity(2, 2), epsilon = 1e-9);
    }

    #[test]
    fn inv_sqrt_rejects_bad_inputs() {
        let mut asym = DMatrix::<f64>::identity(2, 2);
        asym[(0, 1)] = 0.5;
        assert!(inv_sqrt_spd(&asym).is_err());
        let mut indef = DMatrix::<f64>::identity(2, 2);
        indef[(1, 1)] = -1.0;
        assert!(inv_sqrt_spd(&indef).is_err());
    }

    #[test]
    fn cluster_unitary_empty_graph_is_o() {
        let g = Graph::empty(3);
        let u = cluster_unitary(&g, &OrthogonalMatrix::identity(3)).unwrap();
        assert_relative_eq!(*u.re(), DMatrix::<f64>::identity(3, 3), epsilon = 1e-12);
        assert_eq!(u.im().amax(), 0.0);
    }

    #[test]
    fn cluster_unitary_edge_graph() {
        let g = edge_graph();
        let u = cluster_unitary(&g, &OrthogonalMatrix::identity(2)).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(*u.re(), DMatrix::<f64>::identity(2, 2) * s, epsilon = 1e-12);
        let expect_im = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, s, s, 0.0]);
        assert_relative_eq!(*u.im(), expect_im, epsilon = 1e-12);
    }

    #[test]
    fn cluster_unitary_is_unitary_for_random_o() {
        let mut rng = RngSeed(21).rng();
        let g = crate::graph::gen_erdos_renyi(6, 0.5, RngSeed(4)).unwrap();
        let o = OrthogonalMatrix::random_haar(6, &mut rng);
        let u = cluster_unitary(&g, &o).unwrap();
        assert!(u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn symplectic_from_identity_and_fourier() {
        let n = 3;
        let s = symplectic_from_unitary(&UnitaryMatrix::identity(n));
        assert_relative_eq!(s, DMatrix::<f64>::identity(2 * n, 2 * n), epsilon = 1e-14);

        // U = iI is the Fourier transform on every mode: q -> -p, p -> q
        let u = UnitaryMatrix::new(DMatrix::zeros(n, n), DMatrix::identity(n, n)).unwrap();
        let f = symplectic_from_unitary(&u);
        let mut expect = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            expect[(i, n + i)] = -1.0;
            expect[(n + i, i)] = 1.0;
        }
        assert_relative_eq!(f, expect, epsilon = 1e-14);
    }

    #[test]
    fn symplectic_properties_of_cluster_transform() {
        let g = edge_graph();
        let u = cluster_unitary(&g, &OrthogonalMatrix::identity(2)).unwrap();
        let s = symplectic_from_unitary(&u);
        assert!(symplectic_defect(&s) < 1e-9);
        let orth = (s.transpose() * &s - DMatrix::<f64>::identity(4, 4)).amax();
        assert!(orth < 1e-9);
    }

    #[test]
    fn input_covariance_examples() {
        let vac = SqueezingSpectrum::equal(3, 0.0).unwrap();
        let sigma = input_covariance(&vac);
        assert_relative_eq!(
            *sigma.matrix(),
            DMatrix::<f64>::identity(6, 6) * VACUUM_VARIANCE,
            epsilon = 1e-14
        );

        let one = SqueezingSpectrum::from_db(vec![-3.01]).unwrap();
        let sigma = input_covariance(&one);
        assert!((sigma.matrix()[(1, 1)] - 0.25).abs() < 1e-3);
        assert!((sigma.matrix()[(0, 0)] - 1.0).abs() < 5e-3);
    }

    #[test]
    fn apply_symplectic_identity_and_fourier() {
        let s = SqueezingSpectrum::from_db(vec![-3.0]).unwrap();
        let sigma = input_covariance(&s);
        let id = DMatrix::<f64>::identity(2, 2);
        let out = apply_symplectic(&id, &sigma).unwrap();
        assert_relative_eq!(out.matrix(), sigma.matrix(), epsilon = 1e-14);

        let fourier = symplectic_from_unitary(
            &UnitaryMatrix::new(DMatrix::zeros(1, 1), DMatrix::identity(1, 1)).unwrap(),
        );
        let swapped = apply_symplectic(&fourier, &sigma).unwrap();
        assert_relative_eq!(
            swapped.matrix()[(0, 0)],
            sigma.matrix()[(1, 1)],
            epsilon = 1e-14
        );
        assert_relative_eq!(
            swapped.matrix()[(1, 1)],
            sigma.matrix()[(0, 0)],
            epsilon = 1e-14
        );
    }

    #[test]
    fn apply_symplectic_rejects_non_symplectic() {
        let s = SqueezingSpectrum::from_db(vec![-3.0]).unwrap();
        let sigma = input_covariance(&s);
        let bad = DMatrix::<f64>::identity(2, 2) * 2.0;
        assert!(matches!(
            apply_symplectic(&bad, &sigma),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn two_node_cluster_covariance_entries() {
        // Equal squeezing r on both modes: Var(Q1) = cosh(2r)·vac,
        // Cov(Q1,P2) = sinh(2r)·vac.
        let db = -5.0;
        let r = -db * 10f64.ln() / 20.0;
        let g = edge_graph();
        let s = SqueezingSpectrum::equal(2, db).unwrap();
        let sigma = cluster_covariance(&g, &OrthogonalMatrix::identity(2), &s).unwrap();
        let m = sigma.matrix();
        assert_relative_eq!(m[(0, 0)], (2.0 * r).cosh() * VACUUM_VARIANCE, epsilon = 1e-10);
        assert_relative_eq!(m[(0, 3)], (2.0 * r).sinh() * VACUUM_VARIANCE, epsilon = 1e-10);
        assert_relative_eq!(m[(1, 2)], (2.0 * r).sinh() * VACUUM_VARIANCE, epsilon = 1e-10);
        assert_relative_eq!(m[(0, 1)], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn vacuum_on_empty_graph_reads_zero_db() {
        let g = Graph::empty(4);
        let s = SqueezingSpectrum::equal(4, 0.0).unwrap();
        let sigma = cluster_covariance(&g, &OrthogonalMatrix::identity(4), &s).unwrap();
        let rep = nullifier_variances(&sigma, &g).unwrap();
        for (norm, db) in rep.normalized.iter().zip(&rep.db) {
            assert_relative_eq!(*norm, 1.0, epsilon = 1e-12);
            assert!(db.abs() < 1e-10);
        }
        assert!(rep.mu_j.abs() < 1e-10);
    }

    #[test]
    fn two_node_cluster_nullifiers_read_input_db() {
        let db = -4.2;
        let g = edge_graph();
        let s = SqueezingSpectrum::equal(2, db).unwrap();
        let sigma = cluster_covariance(&g, &OrthogonalMatrix::identity(2), &s).unwrap();
        let rep = nullifier_variances(&sigma, &g).unwrap();
        for d in &rep.db {
            assert_relative_eq!(*d, db, epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_form_small_cases() {
        // empty graph, O = I: diag of Γ = input p-variances
        let g = Graph::empty(3);
        let s = SqueezingSpectrum::from_db(vec![-3.0, -6.0, -9.0]).unwrap();
        let rep =
            nullifier_variances_closed_form(&g, &OrthogonalMatrix::identity(3), &s).unwrap();
        let p = s.p_variances();
        for (r, expect) in rep.raw_variances.iter().zip(&p) {
            assert_relative_eq!(*r, *expect, epsilon = 1e-12);
        }

        // 2-node edge, O = I: Γ = 2 D_p
        let g = edge_graph();
        let s = SqueezingSpectrum::from_db(vec![-3.0, -7.0]).unwrap();
        let rep =
            nullifier_variances_closed_form(&g, &OrthogonalMatrix::identity(2), &s).unwrap();
        let p = s.p_variances();
        assert_relative_eq!(rep.raw_variances[0], 2.0 * p[0], epsilon = 1e-12);
        assert_relative_eq!(rep.raw_variances[1], 2.0 * p[1], epsilon = 1e-12);
    }

    #[test]
    fn two_path_consistency_randomized() {
        let mut rng = RngSeed(99).rng();
        for trial in 0..40 {
            let n = 2 + (trial % 11);
            let g = crate::graph::gen_erdos_renyi(n, 0.4, RngSeed(1000 + trial as u64)).unwrap();
            let o = OrthogonalMatrix::random_haar(n, &mut rng);
            let s =
                SqueezingSpectrum::uniform_random(n, -14.0, -3.0, &mut rng).unwrap();
            let via_cov =
                nullifier_variances(&cluster_covariance(&g, &o, &s).unwrap(), &g).unwrap();
            let closed = nullifier_variances_closed_form(&g, &o, &s).unwrap();
            for i in 0..n {
                assert!(
                    (via_cov.raw_variances[i] - closed.raw_variances[i]).abs() < 1e-9,
                    "trial {trial} node {i}"
                );
                assert!((via_cov.db[i] - closed.db[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anti_squeezing_does_not_affect_nullifiers() {
        let g = crate::graph::gen_erdos_renyi(5, 0.5, RngSeed(8)).unwrap();
        let s = SqueezingSpectrum::from_db(vec![-3.0, -5.0, -7.0, -9.0, -11.0]).unwrap();
        let o = OrthogonalMatrix::random_haar(5, &mut RngSeed(77).rng());
        let u = cluster_unitary(&g, &o).unwrap();
        let sp = symplectic_from_unitary(&u);

        let baseline =
            nullifier_variances(&apply_symplectic(&sp, &input_covariance(&s)).unwrap(), &g)
                .unwrap();

        // Perturb only the q-block input variances.
        let mut sigma_in = input_covariance(&s).matrix().clone();
        for k in 0..5 {
            sigma_in[(k, k)] *= 3.7;
        }
        let perturbed = CovarianceMatrix::new(&sp * sigma_in * sp.transpose()).unwrap();
        let rep = nullifier_variances(&perturbed, &g).unwrap();
        for i in 0..5 {
            assert!((rep.raw_variances[i] - baseline.raw_variances[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn floor_bound_and_db_monotonicity() {
        let mut rng = RngSeed(31).rng();
        for trial in 0..20 {
            let n = 3 + trial % 6;
            let g = crate::graph::gen_erdos_renyi(n, 0.5, RngSeed(trial as u64)).unwrap();
            let o = OrthogonalMatrix::random_haar(n, &mut rng);
            let s = SqueezingSpectrum::uniform_random(n, -12.0, -2.0, &mut rng).unwrap();
            let rep = nullifier_variances_closed_form(&g, &o, &s).unwrap();
            let floor = 10f64.powf(s.best_db() / 10.0);
            let min_norm = rep.normalized.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min_norm >= floor - 1e-9, "floor violated: {min_norm} < {floor}");

            let mut pairs: Vec<(f64, f64)> =
                rep.normalized.iter().copied().zip(rep.db.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pairs.windows(2) {
                if w[1].0 > w[0].0 {
                    assert!(w[1].1 > w[0].1, "dB not increasing in normalized variance");
                }
            }
        }
    }

    #[test]
    fn unoptimized_baseline_tracks_mean_input_variance() {
        // With O = I each normalized nullifier variance is a convex
        // combination of the input linear variances, so the node average
        // sits near the linear mean regardless of edge density.
        let s = SqueezingSpectrum::standin_48();
        let mean_lin = s.p_variances().iter().sum::<f64>() / 48.0 / VACUUM_VARIANCE;
        let mean_db = 10.0 * mean_lin.log10();
        for p in [0.2, 0.5, 0.9] {
            let g = crate::graph::gen_erdos_renyi(48, p, RngSeed(3)).unwrap();
            let rep =
                nullifier_variances_closed_form(&g, &OrthogonalMatrix::identity(48), &s)
                    .unwrap();
            assert!(
                (rep.mu_j - mean_db).abs() < 0.25,
                "p={p}: baseline {} vs linear mean {mean_db}",
                rep.mu_j
            );
        }
    }

    #[test]
    fn physicality_of_cluster_states() {
        let g = crate::graph::gen_barabasi_albert(6, 2, RngSeed(5)).unwrap();
        let s = SqueezingSpectrum::uniform_random(6, -10.0, -3.0, &mut RngSeed(6).rng()).unwrap();
        let o = OrthogonalMatrix::random_haar(6, &mut RngSeed(7).rng());
        let sigma = cluster_covariance(&g, &o, &s).unwrap();
        let rep = sigma.physicality();
        assert!(rep.min_eigenvalue > 0.0);
        assert!(rep.min_uncertainty_eig >= -PHYSICALITY_TOL);
        assert!((rep.det_2sigma - 1.0).abs() < 1e-6, "purity: {}", rep.det_2sigma);
        assert!(sigma.is_physical());
    }
}
