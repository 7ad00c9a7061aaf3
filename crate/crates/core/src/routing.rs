//! Two-party entanglement routing with local linear optics.
//!
//! A cluster distributed between Alice (n modes) and Bob (p modes) is
//! reshaped by local unitaries U_A and U_B, acting jointly as the block
//! symplectic S built from their real and imaginary parts. The goal is to
//! turn two chosen nodes into an EPR channel: the four covariance rows of
//! the pair must match the two-mode-squeezed pattern (diagonal cosh(2r)·vac
//! entries, q↔p cross correlations sinh(2r)·vac) and decouple from every
//! other mode. The fit is scored by the Frobenius distance between those
//! rows and the target, minimized by the evolution strategy over the
//! n² + p² parameters of the two unitaries.

use nalgebra::{Complex, DMatrix};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::es::{es_minimize, EsConfig};
use crate::gaussian::{
    cluster_covariance, symplectic_from_unitary, CovarianceMatrix, OrthogonalMatrix,
    UnitaryMatrix, VACUUM_VARIANCE,
};
use crate::graph::{Graph, RngSeed};
use crate::par;
use crate::spectrum::SqueezingSpectrum;

type C64 = Complex<f64>;

/// f_opt below this value counts as a found channel.
pub const FOUND_THRESHOLD: f64 = 1e-6;

/// Ordered split of the cluster nodes between the two parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    alice: Vec<usize>,
    bob: Vec<usize>,
}

impl Partition {
    pub fn new(alice: Vec<usize>, bob: Vec<usize>) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::Param("both parties need at least one node".into()));
        }
        for a in &alice {
            if bob.contains(a) {
                return Err(Error::Param(format!("node {a} assigned to both parties")));
            }
        }
        Ok(Partition { alice, bob })
    }

    pub fn alice(&self) -> &[usize] {
        &self.alice
    }

    pub fn bob(&self) -> &[usize] {
        &self.bob
    }

    fn validate_for(&self, n_nodes: usize) -> Result<()> {
        let mut seen = vec![false; n_nodes];
        for &v in self.alice.iter().chain(&self.bob) {
            if v >= n_nodes {
                return Err(Error::Param(format!("node {v} out of range")));
            }
            if seen[v] {
                return Err(Error::Param(format!("node {v} listed twice")));
            }
            seen[v] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Param("partition must cover every node".into()));
        }
        Ok(())
    }
}

/// Target covariance values for the channel pair, derived from the channel
/// squeezing parameter r: diagonal cosh(2r)·vac, cross sinh(2r)·vac.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelTarget {
    pub n1: usize,
    pub n2: usize,
    pub ch_diag: f64,
    pub ch_offdiag: f64,
    pub r_channel: f64,
}

impl ChannelTarget {
    /// Builds the target from a squeezing magnitude in dB (positive number
    /// of decibels below vacuum; 10^(-dB/10) = e^(-2r)).
    pub fn from_squeezing_db(n1: usize, n2: usize, db: f64) -> Result<Self> {
        if !(db.is_finite() && db >= 0.0) {
            return Err(Error::Param(format!(
                "channel squeezing must be a non-negative dB magnitude, got {db}"
            )));
        }
        let r = db * std::f64::consts::LN_10 / 20.0;
        ChannelTarget::from_r(n1, n2, r)
    }

    pub fn from_r(n1: usize, n2: usize, r: f64) -> Result<Self> {
        if n1 == n2 {
            return Err(Error::Param("channel nodes must be distinct".into()));
        }
        Ok(ChannelTarget {
            n1,
            n2,
            ch_diag: (2.0 * r).cosh() * VACUUM_VARIANCE,
            ch_offdiag: (2.0 * r).sinh() * VACUUM_VARIANCE,
            r_channel: r,
        })
    }
}

/// Joint block symplectic of two party-local unitaries over the ordering
/// (q_A, q_B, p_A, p_B):
/// [[Re U_A, 0, -Im U_A, 0], [0, Re U_B, 0, -Im U_B],
///  [Im U_A, 0, Re U_A, 0], [0, Im U_B, 0, Re U_B]].
pub fn block_symplectic(u_a: &UnitaryMatrix, u_b: &UnitaryMatrix) -> DMatrix<f64> {
    symplectic_from_unitary(&u_a.direct_sum(u_b))
}

/// Unitary from d² real parameters: U = exp(iH) with H Hermitian assembled
/// from d diagonal entries, d(d-1)/2 real symmetric parts and d(d-1)/2
/// imaginary antisymmetric parts. Surjective onto the unitary group.
pub fn unitary_from_params(theta: &[f64]) -> Result<UnitaryMatrix> {
    let len = theta.len();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len || d == 0 {
        return Err(Error::Dimension(format!(
            "parameter count {len} is not a positive perfect square"
        )));
    }
    let mut h = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = C64::new(theta[i], 0.0);
    }
    let offs = d * (d - 1) / 2;
    let mut idx = 0;
    for i in 0..d {
        for j in i + 1..d {
            let re = theta[d + idx];
            let im = theta[d + offs + idx];
            h[(i, j)] = C64::new(re, im);
            h[(j, i)] = C64::new(re, -im);
            idx += 1;
        }
    }
    let eig = h.symmetric_eigen();
    let phases = DMatrix::<C64>::from_diagonal(
        &eig.eigenvalues.map(|l| C64::new(0.0, l).exp()),
    );
    let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
    let re = u.map(|z| z.re);
    let im = u.map(|z| z.im);
    UnitaryMatrix::new(re, im)
}

/// The 4×2(n+p) target matrix: zero except the EPR pattern on the channel
/// pair, ch_diag on the pair's own quadrature positions and ch_offdiag on
/// the q↔p cross positions.
pub fn channel_target_rows(t: &ChannelTarget, n: usize, p: usize) -> Result<DMatrix<f64>> {
    let total = n + p;
    if t.n1 >= total || t.n2 >= total {
        return Err(Error::Param(format!(
            "pair ({}, {}) out of range for {total} modes",
            t.n1, t.n2
        )));
    }
    let mut m = DMatrix::zeros(4, 2 * total);
    let (n1, n2) = (t.n1, t.n2);
    // rows: q_{n1}, q_{n2}, p_{n1}, p_{n2}
    m[(0, n1)] = t.ch_diag;
    m[(1, n2)] = t.ch_diag;
    m[(2, total + n1)] = t.ch_diag;
    m[(3, total + n2)] = t.ch_diag;
    m[(0, total + n2)] = t.ch_offdiag;
    m[(1, total + n1)] = t.ch_offdiag;
    m[(2, n2)] = t.ch_offdiag;
    m[(3, n1)] = t.ch_offdiag;
    Ok(m)
}

/// Rows (q_{n1}, q_{n2}, p_{n1}, p_{n2}) of a 2(n+p)-dimensional covariance
/// matrix.
pub fn reduced_rows(
    sigma2: &CovarianceMatrix,
    n1: usize,
    n2: usize,
    n: usize,
    p: usize,
) -> Result<DMatrix<f64>> {
    let total = n + p;
    if sigma2.modes() != total {
        return Err(Error::Dimension(format!(
            "covariance has {} modes, partition implies {total}",
            sigma2.modes()
        )));
    }
    if n1 >= total || n2 >= total {
        return Err(Error::Param(format!("pair ({n1}, {n2}) out of range")));
    }
    Ok(extract_rows(sigma2.matrix(), &[n1, n2, total + n1, total + n2]))
}

fn extract_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), m.ncols());
    for (k, &r) in rows.iter().enumerate() {
        out.row_mut(k).copy_from(&m.row(r));
    }
    out
}

/// A routing instance: the given cluster covariance (Alice's modes first),
/// the party sizes and the channel target.
#[derive(Debug, Clone)]
pub struct RoutingProblem {
    sigma1: CovarianceMatrix,
    n: usize,
    p: usize,
    target: ChannelTarget,
    target_rows: DMatrix<f64>,
}

impl RoutingProblem {
    /// Builds the instance from a graph. Nodes are renumbered so Alice's
    /// come first in the order listed; the cluster is prepared with O = I
    /// and equal squeezing of `squeezing_db` dB on every mode, which is
    /// also the channel target. The pair is given in original node labels
    /// and may sit in one party or across both.
    pub fn from_graph(
        g: &Graph,
        partition: &Partition,
        pair: (usize, usize),
        squeezing_db: f64,
    ) -> Result<Self> {
        partition.validate_for(g.n())?;
        let order: Vec<usize> = partition
            .alice()
            .iter()
            .chain(partition.bob())
            .copied()
            .collect();
        let g2 = g.reordered(&order)?;
        let map = |node: usize| -> Result<usize> {
            order
                .iter()
                .position(|&v| v == node)
                .ok_or_else(|| Error::Param(format!("pair node {node} out of range")))
        };
        let n1 = map(pair.0)?;
        let n2 = map(pair.1)?;
        if n1 == n2 {
            return Err(Error::Param("channel nodes must be distinct".into()));
        }
        let spectrum = SqueezingSpectrum::equal(g.n(), -squeezing_db)?;
        let sigma1 = cluster_covariance(&g2, &OrthogonalMatrix::identity(g.n()), &spectrum)?;
        let target = ChannelTarget::from_squeezing_db(n1, n2, squeezing_db)?;
        RoutingProblem::from_covariance(sigma1, partition.alice().len(), target)
    }

    /// Builds the instance from an existing covariance whose first `n`
    /// modes belong to Alice.
    pub fn from_covariance(
        sigma1: CovarianceMatrix,
        n: usize,
        target: ChannelTarget,
    ) -> Result<Self> {
        let total = sigma1.modes();
        if n == 0 || n >= total {
            return Err(Error::Param(format!(
                "Alice must hold between 1 and {} modes, got {n}",
                total - 1
            )));
        }
        let p = total - n;
        let target_rows = channel_target_rows(&target, n, p)?;
        Ok(RoutingProblem {
            sigma1,
            n,
            p,
            target,
            target_rows,
        })
    }

    pub fn alice_modes(&self) -> usize {
        self.n
    }

    pub fn bob_modes(&self) -> usize {
        self.p
    }

    pub fn total_modes(&self) -> usize {
        self.n + self.p
    }

    /// Number of search parameters, n² + p².
    pub fn param_count(&self) -> usize {
        self.n * self.n + self.p * self.p
    }

    pub fn target(&self) -> &ChannelTarget {
        &self.target
    }

    pub fn sigma1(&self) -> &CovarianceMatrix {
        &self.sigma1
    }

    /// Splits a joint parameter vector into the two local unitaries.
    pub fn unitaries_from_params(&self, theta: &[f64]) -> Result<(UnitaryMatrix, UnitaryMatrix)> {
        if theta.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "theta length {} != n² + p² = {}",
                theta.len(),
                self.param_count()
            )));
        }
        let u_a = unitary_from_params(&theta[..self.n * self.n])?;
        let u_b = unitary_from_params(&theta[self.n * self.n..])?;
        Ok((u_a, u_b))
    }

    /// σ₂ = S σ₁ Sᵀ for the block symplectic of the two unitaries.
    pub fn transformed_covariance(
        &self,
        u_a: &UnitaryMatrix,
        u_b: &UnitaryMatrix,
    ) -> Result<CovarianceMatrix> {
        let s = block_symplectic(u_a, u_b);
        CovarianceMatrix::new(&s * self.sigma1.matrix() * s.transpose())
    }
}

/// Frobenius distance between the channel target rows and the transformed
/// covariance rows of the pair. Total and non-negative; zero exactly when
/// the pair is an EPR channel decoupled from all other modes in those
/// rows.
pub fn routing_fitness(theta: &[f64], prob: &RoutingProblem) -> f64 {
    let (u_a, u_b) = match prob.unitaries_from_params(theta) {
        Ok(us) => us,
        Err(_) => return f64::MAX, // wrong length is caught before search
    };
    let s = block_symplectic(&u_a, &u_b);
    let total = prob.total_modes();
    let rows = [
        prob.target.n1,
        prob.target.n2,
        total + prob.target.n1,
        total + prob.target.n2,
    ];
    let s_rows = extract_rows(&s, &rows);
    let reduced = &s_rows * prob.sigma1.matrix() * s.transpose();
    (&prob.target_rows - reduced).norm()
}

/// Feasibility verdict of a routing search. Not-found is budget-bounded,
/// never a nonexistence claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Found,
    NotFoundWithinBudget,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Found => write!(f, "FOUND"),
            Verdict::NotFoundWithinBudget => write!(f, "NOT_FOUND_WITHIN_BUDGET"),
        }
    }
}

/// Best solution returned by [`solve_routing`].
#[derive(Debug, Clone)]
pub struct RoutingSolution {
    pub u_a: UnitaryMatrix,
    pub u_b: UnitaryMatrix,
    pub f_opt: f64,
    /// Largest absolute correlation between the channel pair and any other
    /// mode in the transformed covariance.
    pub residual_max: f64,
    pub evaluations: u64,
    pub verdict: Verdict,
}

/// Search options: restart count and the ES template (its seed is the
/// master seed; each restart derives its own).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    pub restarts: usize,
    pub es: EsConfig,
}

impl SolveOptions {
    /// 10 restarts of the default ES at the problem's dimension.
    pub fn default_for(prob: &RoutingProblem, seed: RngSeed) -> Result<Self> {
        Ok(SolveOptions {
            restarts: 10,
            es: EsConfig::default_for_dim(prob.param_count())?.with_seed(seed),
        })
    }
}

/// Multi-restart ES minimization of [`routing_fitness`]. Restart 0 starts
/// from θ = 0 (the identity transform); later restarts start from seeded
/// Gaussian points. Restarts run independently (in parallel under the
/// default feature) and the best result wins, ties broken by restart
/// index.
pub fn solve_routing(prob: &RoutingProblem, opts: &SolveOptions) -> Result<RoutingSolution> {
    if opts.restarts == 0 {
        return Err(Error::Param("need at least one restart".into()));
    }
    let dim = prob.param_count();
    if opts.es.dim != dim {
        return Err(Error::Dimension(format!(
            "ES config dim {} != problem parameter count {dim}",
            opts.es.dim
        )));
    }
    let master = opts.es.seed;
    let runs = par::map_indexed(opts.restarts, |r| {
        let restart_seed = RngSeed(master.0 ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let cfg = EsConfig {
            seed: restart_seed,
            ..opts.es.clone()
        };
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; dim]
        } else {
            let normal = StandardNormal;
            let mut rng = restart_seed.stream_rng(1);
            (0..dim).map(|_| normal.sample(&mut rng)).collect()
        };
        es_minimize(|theta| routing_fitness(theta, prob), &x0, &cfg)
    });

    let mut best: Option<(f64, usize)> = None;
    let mut evaluations = 0u64;
    let mut results = Vec::with_capacity(opts.restarts);
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        evaluations += run.trace.evaluations_used;
        if best.is_none_or(|(f, _)| run.best_f < f) {
            best = Some((run.best_f, r));
        }
        results.push(run);
    }
    let (f_opt, best_idx) = best.expect("at least one restart");
    let best_x = &results[best_idx].best_x;
    let (u_a, u_b) = prob.unitaries_from_params(best_x)?;
    let sigma2 = prob.transformed_covariance(&u_a, &u_b)?;
    let residual_max = residual_correlation(&sigma2, prob.target.n1, prob.target.n2);
    let verdict = if f_opt < FOUND_THRESHOLD {
        Verdict::Found
    } else {
        Verdict::NotFoundWithinBudget
    };
    Ok(RoutingSolution {
        u_a,
        u_b,
        f_opt,
        residual_max,
        evaluations,
        verdict,
    })
}

/// Largest |σ₂| entry linking the channel pair's quadratures to any other
/// mode's quadratures.
pub fn residual_correlation(sigma2: &CovarianceMatrix, n1: usize, n2: usize) -> f64 {
    let total = sigma2.modes();
    let pair_cols = [n1, n2, total + n1, total + n2];
    let m = sigma2.matrix();
    let mut worst: f64 = 0.0;
    for &r in &pair_cols {
        for c in 0..2 * total {
            if !pair_cols.contains(&c) {
                worst = worst.max(m[(r, c)].abs());
            }
        }
    }
    worst
}

/// Per-check outcome of [`verify_solution`].
#[derive(Debug, Clone)]
pub struct SolutionChecks {
    /// Largest deviation of the pair's 4×4 covariance block from the EPR
    /// pattern.
    pub channel_block_dev: f64,
    pub channel_block_ok: bool,
    pub residual_max: f64,
    pub residual_ok: bool,
    pub unitarity_defect: f64,
    pub unitarity_ok: bool,
    /// |det(2σ₂) - 1|, zero for pure pipelines.
    pub purity_dev: f64,
}

impl SolutionChecks {
    pub fn all_pass(&self) -> bool {
        self.channel_block_ok && self.residual_ok && self.unitarity_ok
    }
}

/// Recomputes σ₂ from the solution and checks (a) the channel 2-mode block
/// against the EPR relations, (b) the residual correlations to all other
/// modes, (c) unitarity of U_A and U_B, each within `tol`.
pub fn verify_solution(
    sol: &RoutingSolution,
    prob: &RoutingProblem,
    tol: f64,
) -> Result<SolutionChecks> {
    verify_unitaries(&sol.u_a, &sol.u_b, prob, tol)
}

/// Same checks as [`verify_solution`] for externally supplied unitaries.
pub fn verify_unitaries(
    u_a: &UnitaryMatrix,
    u_b: &UnitaryMatrix,
    prob: &RoutingProblem,
    tol: f64,
) -> Result<SolutionChecks> {
    if u_a.dim() != prob.n || u_b.dim() != prob.p {
        return Err(Error::Dimension(format!(
            "unitaries are {}x{} / {}x{}, parties hold {} / {} modes",
            u_a.dim(),
            u_a.dim(),
            u_b.dim(),
            u_b.dim(),
            prob.n,
            prob.p
        )));
    }
    let sigma2 = prob.transformed_covariance(u_a, u_b)?;
    let total = prob.total_modes();
    let (n1, n2) = (prob.target.n1, prob.target.n2);
    let idx = [n1, n2, total + n1, total + n2];

    // expected 4×4 block of a cluster-type EPR pair
    let lam = prob.target.ch_diag;
    let mu = prob.target.ch_offdiag;
    let expected = DMatrix::from_row_slice(
        4,
        4,
        &[
            lam, 0.0, 0.0, mu, //
            0.0, lam, mu, 0.0, //
            0.0, mu, lam, 0.0, //
            mu, 0.0, 0.0, lam,
        ],
    );
    let m = sigma2.matrix();
    let mut channel_block_dev: f64 = 0.0;
    for (a, &ra) in idx.iter().enumerate() {
        for (b, &rb) in idx.iter().enumerate() {
            channel_block_dev = channel_block_dev.max((m[(ra, rb)] - expected[(a, b)]).abs());
        }
    }
    let residual_max = residual_correlation(&sigma2, n1, n2);
    let unitarity_defect = u_a.unitarity_defect().max(u_b.unitarity_defect());
    let purity_dev = (sigma2.physicality().det_2sigma - 1.0).abs();
    Ok(SolutionChecks {
        channel_block_dev,
        channel_block_ok: channel_block_dev <= tol,
        residual_max,
        residual_ok: residual_max <= tol,
        unitarity_defect,
        unitarity_ok: unitarity_defect <= 1e-8_f64.max(tol),
        purity_dev,
    })
}

/// Global reshaping between two clusters built from the same inputs:
/// S = S_B · S_A^{-1}.
pub fn global_reshape(s_a: &DMatrix<f64>, s_b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s_a.nrows() != s_b.nrows() || s_a.ncols() != s_b.ncols() || s_a.nrows() != s_a.ncols() {
        return Err(Error::Dimension("transforms must be square and same size".into()));
    }
    let inv = s_a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("transform is singular".into()))?;
    Ok(s_b * inv)
}

pub mod fixtures;
