//! Analytic optimization of the orthogonal freedom in the cluster
//! construction.
//!
//! The weighted quality objective Σᵢ wᵢ·Δ²δ̄ᵢ equals
//! trace(B·O·D_p·Oᵀ) with B = M^{1/2} diag(wᵢ/divᵢ) M^{1/2}, M = V² + I
//! and D_p the diagonal of input p-variances. Over the orthogonal group
//! the minimum of that trace is Σ λ↓·d↑ (Ruhe's trace inequality), reached
//! by aligning the eigenbasis of B with the modes so that the largest
//! eigenvalue meets the smallest p-variance. The optimizer is therefore a
//! single eigendecomposition plus a sort; a sampling-based dominance check
//! and an evolution-strategy search over Givens angles guard the
//! construction numerically.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::es::{es_minimize, EsConfig};
use crate::gaussian::{
    nullifier_divisors, nullifier_variances_closed_form, sqrt_spd, NullifierReport,
    OrthogonalMatrix,
};
use crate::graph::{Graph, RngSeed};
use crate::par;
use crate::spectrum::SqueezingSpectrum;

/// Weight applied to each targeted node when concentrating squeezing on a
/// pair.
pub const CONCENTRATION_WEIGHT: f64 = 1e5;

/// Per-node weights of the quality objective. All ones for the uniform
/// overall-quality optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityObjective {
    weights: Vec<f64>,
}

impl QualityObjective {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Param("objective needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Param("weights must be finite and non-negative".into()));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::Param("at least one weight must be positive".into()));
        }
        Ok(QualityObjective { weights })
    }

    /// Uniform quality: every node weighted 1.
    pub fn uniform(n: usize) -> Self {
        QualityObjective {
            weights: vec![1.0; n],
        }
    }

    /// Concentration objective: weight [`CONCENTRATION_WEIGHT`] on the two
    /// targeted nodes, 1 elsewhere.
    pub fn concentrate(n: usize, n1: usize, n2: usize) -> Result<Self> {
        if n1 == n2 || n1 >= n || n2 >= n {
            return Err(Error::Param(format!(
                "target pair ({n1}, {n2}) invalid for {n} nodes"
            )));
        }
        let mut weights = vec![1.0; n];
        weights[n1] = CONCENTRATION_WEIGHT;
        weights[n2] = CONCENTRATION_WEIGHT;
        Ok(QualityObjective { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Optimized orthogonal matrix with its nullifier report and objective
/// value Σᵢ wᵢ·normalizedᵢ.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub o_star: OrthogonalMatrix,
    pub report: NullifierReport,
    pub objective_value: f64,
}

/// Precomputed pieces for repeated objective evaluations at different O.
struct ObjectiveContext {
    m_sqrt: DMatrix<f64>,
    p_variances: Vec<f64>,
    weight_over_div: Vec<f64>,
}

impl ObjectiveContext {
    fn new(g: &Graph, s: &SqueezingSpectrum, obj: &QualityObjective) -> Result<Self> {
        let n = g.n();
        if s.len() != n || obj.weights().len() != n {
            return Err(Error::Dimension(format!(
                "graph {n} nodes, spectrum {}, weights {}",
                s.len(),
                obj.weights().len()
            )));
        }
        let v = g.adjacency();
        let m = v * v + DMatrix::<f64>::identity(n, n);
        let m_sqrt = sqrt_spd(&m)?;
        let divisors = nullifier_divisors(g);
        let weight_over_div = obj
            .weights()
            .iter()
            .zip(&divisors)
            .map(|(w, d)| w / d)
            .collect();
        Ok(ObjectiveContext {
            m_sqrt,
            p_variances: s.p_variances(),
            weight_over_div,
        })
    }

    /// Σᵢ wᵢ/divᵢ · (M^{1/2} O D_p Oᵀ M^{1/2})ᵢᵢ
    fn objective(&self, o: &DMatrix<f64>) -> f64 {
        let n = o.nrows();
        let w = &self.m_sqrt * o;
        let mut total = 0.0;
        for i in 0..n {
            let mut gi = 0.0;
            for k in 0..n {
                gi += w[(i, k)] * w[(i, k)] * self.p_variances[k];
            }
            total += self.weight_over_div[i] * gi;
        }
        total
    }
}

/// Minimizes the weighted nullifier objective over all real orthogonal
/// matrices by eigen-pairing: eigenvectors of B ordered by descending
/// eigenvalue become the columns assigned to modes ordered by ascending
/// input p-variance. Eigenvalue and variance ties break by stable index
/// order.
pub fn optimize_orthogonal(
    g: &Graph,
    s: &SqueezingSpectrum,
    obj: &QualityObjective,
) -> Result<OptimizationResult> {
    let n = g.n();
    let ctx = ObjectiveContext::new(g, s, obj)?;

    // B = M^{1/2} diag(w/div) M^{1/2}
    let mut b = ctx.m_sqrt.clone();
    for j in 0..n {
        let f = ctx.weight_over_div[j];
        for i in 0..n {
            b[(i, j)] *= f;
        }
    }
    let b = &b * &ctx.m_sqrt;
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();

    let mut eig_order: Vec<usize> = (0..n).collect();
    eig_order.sort_by(|&a, &c| eig.eigenvalues[c]
        .total_cmp(&eig.eigenvalues[a])
        .then(a.cmp(&c)));
    let mut mode_order: Vec<usize> = (0..n).collect();
    mode_order.sort_by(|&a, &c| ctx.p_variances[a]
        .total_cmp(&ctx.p_variances[c])
        .then(a.cmp(&c)));

    let mut o = DMatrix::<f64>::zeros(n, n);
    for (rank, (&e, &mode)) in eig_order.iter().zip(&mode_order).enumerate() {
        let _ = rank;
        o.column_mut(mode).copy_from(&eig.eigenvectors.column(e));
    }
    let o_star = OrthogonalMatrix::new(o)?;
    let report = nullifier_variances_closed_form(g, &o_star, s)?;
    let objective_value = obj
        .weights()
        .iter()
        .zip(&report.normalized)
        .map(|(w, v)| w * v)
        .sum();
    Ok(OptimizationResult {
        o_star,
        report,
        objective_value,
    })
}

/// Pairing value Σ λ↓·d↑ the optimizer is expected to reach; exposed for
/// cross-checks.
pub fn pairing_objective_value(
    g: &Graph,
    s: &SqueezingSpectrum,
    obj: &QualityObjective,
) -> Result<f64> {
    let n = g.n();
    let ctx = ObjectiveContext::new(g, s, obj)?;
    let mut b = ctx.m_sqrt.clone();
    for j in 0..n {
        let f = ctx.weight_over_div[j];
        for i in 0..n {
            b[(i, j)] *= f;
        }
    }
    let b = &b * &ctx.m_sqrt;
    let b = (&b + b.transpose()) * 0.5;
    let mut lams: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().copied().collect();
    lams.sort_by(|a, c| c.total_cmp(a));
    let mut d = ctx.p_variances.clone();
    d.sort_by(f64::total_cmp);
    Ok(lams.iter().zip(&d).map(|(l, v)| l * v).sum())
}

/// Concentrates squeezing on the nullifiers of `n1` and `n2` by running
/// the weighted optimization with weight 10⁵ on the pair.
pub fn concentrate_on_pair(
    g: &Graph,
    s: &SqueezingSpectrum,
    n1: usize,
    n2: usize,
) -> Result<OptimizationResult> {
    let obj = QualityObjective::concentrate(g.n(), n1, n2)?;
    optimize_orthogonal(g, s, &obj)
}

/// Outcome of the sampling / evolution-strategy cross-check.
#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub analytic_objective: f64,
    pub trials: usize,
    /// Random samples that beat the analytic optimum by more than 1e-9.
    pub violations: usize,
    /// Largest analytic-minus-sampled gap observed (positive would mean a
    /// violation).
    pub worst_gap: f64,
    /// ES best minus analytic best over a Givens-angle search, when run.
    pub es_gap: Option<f64>,
}

/// Samples `trials` Haar-random orthogonal matrices and checks none beats
/// the analytic optimum. With `es_check`, additionally runs the evolution
/// strategy on a Givens-angle parametrization (dimension n(n-1)/2) and
/// reports its gap to the analytic value; the ES can stall above the
/// optimum but must never fall below it.
pub fn verify_optimum_numerically(
    g: &Graph,
    s: &SqueezingSpectrum,
    obj: &QualityObjective,
    trials: usize,
    seed: RngSeed,
    es_check: bool,
) -> Result<DominanceReport> {
    if trials < 1 {
        return Err(Error::Param("need at least one trial".into()));
    }
    let n = g.n();
    let ctx = ObjectiveContext::new(g, s, obj)?;
    let analytic = optimize_orthogonal(g, s, obj)?.objective_value;

    let sampled = par::map_indexed(trials, |t| {
        let mut rng = seed.stream_rng(t as u64 + 1);
        let o = OrthogonalMatrix::random_haar(n, &mut rng);
        ctx.objective(o.matrix())
    });
    let mut violations = 0usize;
    let mut worst_gap = f64::NEG_INFINITY;
    for v in &sampled {
        let gap = analytic - v;
        worst_gap = worst_gap.max(gap);
        if gap > 1e-9 {
            violations += 1;
        }
    }

    let es_gap = if es_check && n <= 8 {
        let dim = n * (n - 1) / 2;
        let fitness = |theta: &[f64]| -> f64 {
            let o = orthogonal_from_givens(n, theta).expect("angle count fixed by dim");
            ctx.objective(o.matrix())
        };
        let restarts = 6usize;
        let results = par::map_indexed(restarts, |r| {
            let mut cfg = EsConfig::default_for_dim(dim)
                .expect("dim >= 1")
                .with_seed(RngSeed(seed.0 ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            cfg.max_evals = 60_000;
            cfg.target_fitness = analytic + 1e-9;
            cfg.sigma0 = 0.5;
            let mut rng = seed.stream_rng(0x4553 + r as u64);
            let x0: Vec<f64> = if r == 0 {
                vec![0.0; dim]
            } else {
                use rand::Rng;
                (0..dim)
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect()
            };
            es_minimize(fitness, &x0, &cfg).map(|r| r.best_f)
        });
        let mut best = f64::INFINITY;
        for r in results {
            best = best.min(r?);
        }
        Some(best - analytic)
    } else {
        None
    };

    Ok(DominanceReport {
        analytic_objective: analytic,
        trials,
        violations,
        worst_gap,
        es_gap,
    })
}

/// Orthogonal matrix from n(n-1)/2 Givens angles, one rotation per index
/// pair (i, j), i < j, applied in lexicographic order. Spans the rotation
/// group, which suffices for search-based cross-checks.
pub fn orthogonal_from_givens(n: usize, angles: &[f64]) -> Result<OrthogonalMatrix> {
    let expect = n * (n - 1) / 2;
    if angles.len() != expect {
        return Err(Error::Dimension(format!(
            "{} angles for n = {n}, expected {expect}",
            angles.len()
        )));
    }
    let mut o = DMatrix::<f64>::identity(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (sin, cos) = angles[idx].sin_cos();
            for col in 0..n {
                let oi = o[(i, col)];
                let oj = o[(j, col)];
                o[(i, col)] = cos * oi - sin * oj;
                o[(j, col)] = sin * oi + cos * oj;
            }
            idx += 1;
        }
    }
    Ok(OrthogonalMatrix::from_matrix_unchecked(o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::VACUUM_VARIANCE;
    use crate::graph::{gen_barabasi_albert, gen_erdos_renyi, gen_watts_strogatz, Graph};

    /// Independent oracle: minimum of Σ λ_{π(i)} dᵢ over all
    /// eigenvalue-to-mode assignments π, by exhaustive enumeration.
    fn brute_force_pairing_minimum(
        g: &Graph,
        s: &SqueezingSpectrum,
        obj: &QualityObjective,
    ) -> f64 {
        let n = g.n();
        let v = g.adjacency();
        let m = v * v + DMatrix::<f64>::identity(n, n);
        let m_sqrt = sqrt_spd(&m).unwrap();
        let div = nullifier_divisors(g);
        let mut b = m_sqrt.clone();
        for j in 0..n {
            let f = obj.weights()[j] / div[j];
            for i in 0..n {
                b[(i, j)] *= f;
            }
        }
        let b = (&b * &m_sqrt + (&b * &m_sqrt).transpose()) * 0.5;
        let lams: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().copied().collect();
        let d = s.p_variances();

        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..n).collect();
        permute_all(&mut perm, 0, &mut |p: &[usize]| {
            let val: f64 = p.iter().enumerate().map(|(i, &pi)| lams[pi] * d[i]).sum();
            if val < best {
                best = val;
            }
        });
        best
    }

    fn permute_all(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute_all(perm, k + 1, visit);
            perm.swap(k, i);
        }
    }

    #[test]
    fn equal_squeezing_makes_objective_o_independent() {
        let g = gen_erdos_renyi(5, 0.6, RngSeed(2)).unwrap();
        let s = SqueezingSpectrum::equal(5, -5.0).unwrap();
        let obj = QualityObjective::uniform(5);
        let ctx = ObjectiveContext::new(&g, &s, &obj).unwrap();
        let base = optimize_orthogonal(&g, &s, &obj).unwrap().objective_value;
        let mut rng = RngSeed(3).rng();
        for _ in 0..10 {
            let o = OrthogonalMatrix::random_haar(5, &mut rng);
            assert!((ctx.objective(o.matrix()) - base).abs() < 1e-9);
        }
        // value equals trace(B)·d for scalar D_p
        let d = s.p_variances()[0];
        let trace_target = pairing_objective_value(&g, &s, &obj).unwrap();
        assert!((base - trace_target).abs() < 1e-9);
        assert!(base > 0.0 && d > 0.0);
    }

    #[test]
    fn matches_brute_force_pairing_minimum() {
        for trial in 0..12u64 {
            let n = 3 + (trial % 3) as usize; // 3..5
            let g = gen_erdos_renyi(n, 0.5, RngSeed(trial)).unwrap();
            let s = SqueezingSpectrum::uniform_random(
                n,
                -13.0,
                -3.0,
                &mut RngSeed(100 + trial).rng(),
            )
            .unwrap();
            let obj = QualityObjective::uniform(n);
            let got = optimize_orthogonal(&g, &s, &obj).unwrap().objective_value;
            let oracle = brute_force_pairing_minimum(&g, &s, &obj);
            assert!(
                (got - oracle).abs() < 1e-9,
                "trial {trial}: got {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn weighted_brute_force_agrees() {
        for trial in 0..8u64 {
            let n = 4 + (trial % 2) as usize;
            let g = gen_barabasi_albert(n, 2, RngSeed(trial)).unwrap();
            let s = SqueezingSpectrum::uniform_random(
                n,
                -11.0,
                -4.0,
                &mut RngSeed(200 + trial).rng(),
            )
            .unwrap();
            let obj = QualityObjective::concentrate(n, 0, 1).unwrap();
            let got = optimize_orthogonal(&g, &s, &obj).unwrap().objective_value;
            let oracle = brute_force_pairing_minimum(&g, &s, &obj);
            assert!((got - oracle).abs() < 1e-6 * oracle.max(1.0));
        }
    }

    #[test]
    fn objective_value_consistent_with_report() {
        let g = gen_erdos_renyi(6, 0.5, RngSeed(5)).unwrap();
        let s =
            SqueezingSpectrum::uniform_random(6, -12.0, -3.0, &mut RngSeed(6).rng()).unwrap();
        let obj = QualityObjective::uniform(6);
        let res = optimize_orthogonal(&g, &s, &obj).unwrap();
        let recomputed: f64 = res.report.normalized.iter().sum();
        assert!((res.objective_value - recomputed).abs() < 1e-9);
        let pairing = pairing_objective_value(&g, &s, &obj).unwrap();
        assert!((res.objective_value - pairing).abs() < 1e-9);
    }

    #[test]
    fn dominance_over_random_samples() {
        let g = Graph::path(4).unwrap();
        let s =
            SqueezingSpectrum::from_db(vec![-3.0, -6.0, -9.0, -12.0]).unwrap();
        let obj = QualityObjective::uniform(4);
        let rep = verify_optimum_numerically(&g, &s, &obj, 200, RngSeed(9), false).unwrap();
        assert_eq!(rep.violations, 0, "worst gap {:+.3e}", rep.worst_gap);
    }

    #[test]
    fn uniform_spectrum_sampled_objectives_all_equal() {
        let g = Graph::cycle(5).unwrap();
        let s = SqueezingSpectrum::equal(5, -6.0).unwrap();
        let obj = QualityObjective::uniform(5);
        let rep = verify_optimum_numerically(&g, &s, &obj, 50, RngSeed(4), false).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.worst_gap.abs() < 1e-9);
    }

    #[test]
    fn es_cross_check_on_grid() {
        let g = Graph::grid(2, 3).unwrap();
        let s =
            SqueezingSpectrum::uniform_random(6, -12.0, -3.0, &mut RngSeed(13).rng()).unwrap();
        let obj = QualityObjective::uniform(6);
        let rep = verify_optimum_numerically(&g, &s, &obj, 20, RngSeed(14), true).unwrap();
        assert_eq!(rep.violations, 0);
        let gap = rep.es_gap.expect("es check requested");
        assert!(gap >= -1e-6, "ES beat the analytic optimum: gap {gap:+.3e}");
        assert!(gap.abs() <= 1e-6, "ES did not reach the optimum: gap {gap:+.3e}");
    }

    #[test]
    fn complete_graph_is_spectrum_permutation_invariant() {
        let g = Graph::complete(48);
        let s = SqueezingSpectrum::standin_48();
        let obj = QualityObjective::uniform(48);
        let base = optimize_orthogonal(&g, &s, &obj).unwrap();
        let mut db = s.db_values().to_vec();
        for i in (1..db.len()).rev() {
            let j = (i * 7919) % (i + 1);
            db.swap(i, j);
        }
        let shuffled = SqueezingSpectrum::from_db(db).unwrap();
        let permuted = optimize_orthogonal(&g, &shuffled, &obj).unwrap();
        assert!((base.objective_value - permuted.objective_value).abs() < 1e-9);
        assert!((base.report.mu_j - permuted.report.mu_j).abs() < 1e-9);
    }

    #[test]
    fn relabeling_invariance() {
        let g = gen_erdos_renyi(6, 0.5, RngSeed(21)).unwrap();
        let db: Vec<f64> = vec![-3.0, -4.5, -6.0, -7.5, -9.0, -10.5];
        let s = SqueezingSpectrum::from_db(db.clone()).unwrap();
        let obj = QualityObjective::uniform(6);
        let base = optimize_orthogonal(&g, &s, &obj).unwrap().objective_value;

        let perm = [3usize, 0, 4, 1, 5, 2];
        let g_perm = g.permuted(&perm).unwrap();
        let mut db_perm = vec![0.0; 6];
        for (i, &pi) in perm.iter().enumerate() {
            db_perm[pi] = db[i];
        }
        let s_perm = SqueezingSpectrum::from_db(db_perm).unwrap();
        let relabeled = optimize_orthogonal(&g_perm, &s_perm, &obj).unwrap().objective_value;
        assert!((base - relabeled).abs() < 1e-9);
    }

    #[test]
    fn more_squeezing_never_hurts() {
        let g = gen_watts_strogatz(8, 4, 0.3, RngSeed(17)).unwrap();
        let db: Vec<f64> = vec![-3.0, -4.0, -5.0, -6.0, -7.0, -8.0, -9.0, -10.0];
        let s = SqueezingSpectrum::from_db(db.clone()).unwrap();
        let better = SqueezingSpectrum::from_db(db.iter().map(|v| v - 1.5).collect()).unwrap();
        let obj = QualityObjective::uniform(8);
        let base = optimize_orthogonal(&g, &s, &obj).unwrap().objective_value;
        let improved = optimize_orthogonal(&g, &better, &obj).unwrap().objective_value;
        assert!(improved <= base + 1e-12);
    }

    #[test]
    fn regular_graph_objective_is_seed_independent() {
        // WS with p = 0 is the same ring lattice for every seed.
        let s =
            SqueezingSpectrum::uniform_random(10, -12.0, -3.0, &mut RngSeed(3).rng()).unwrap();
        let obj = QualityObjective::uniform(10);
        let vals: Vec<f64> = (0..4)
            .map(|seed| {
                let g = gen_watts_strogatz(10, 4, 0.0, RngSeed(seed)).unwrap();
                optimize_orthogonal(&g, &s, &obj).unwrap().objective_value
            })
            .collect();
        for v in &vals[1..] {
            assert!((v - vals[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn concentration_reaches_best_input_on_paired_spectrum() {
        let s = SqueezingSpectrum::standin_48();
        let best = s.best_db();
        for seed in 0..3u64 {
            let g = gen_barabasi_albert(48, 3, RngSeed(seed)).unwrap();
            let res = concentrate_on_pair(&g, &s, 11, 12).unwrap();
            for &node in &[11usize, 12] {
                let db = res.report.db[node];
                assert!(db >= best - 1e-6, "floor violated: {db} < {best}");
                assert!(db - best <= 0.05, "did not reach best: {db} vs {best}");
            }
        }
    }

    #[test]
    fn concentration_on_isolated_node_reaches_best() {
        // node 0 isolated: its nullifier is p_0 alone and can carry the
        // most squeezed input directly
        let mut adj = DMatrix::<f64>::zeros(5, 5);
        for i in 1..4 {
            adj[(i, i + 1)] = 1.0;
            adj[(i + 1, i)] = 1.0;
        }
        let g = Graph::from_adjacency(adj).unwrap();
        let s = SqueezingSpectrum::from_db(vec![-3.0, -4.0, -8.0, -8.0, -5.0]).unwrap();
        let res = concentrate_on_pair(&g, &s, 0, 2).unwrap();
        assert!((res.report.db[0] - -8.0).abs() < 0.05);
    }

    #[test]
    fn givens_parametrization_is_orthogonal() {
        let mut rng = RngSeed(8).rng();
        use rand::Rng;
        let angles: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let o = orthogonal_from_givens(5, &angles).unwrap();
        let d = (o.matrix().transpose() * o.matrix() - DMatrix::<f64>::identity(5, 5)).amax();
        assert!(d < 1e-12);
        assert!(orthogonal_from_givens(5, &angles[..9]).is_err());
    }

    #[test]
    fn divisors_are_degree_based() {
        let g = Graph::grid(2, 3).unwrap();
        let div = nullifier_divisors(&g);
        for (i, d) in div.iter().enumerate() {
            assert!((d - (1.0 + g.degree(i) as f64) * VACUUM_VARIANCE).abs() < 1e-15);
        }
    }
}
