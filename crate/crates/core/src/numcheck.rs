//! Floating-point finite-perturbation verification: instantiate affine rate
//! laws, solve for steady states before and after a finite rate perturbation,
//! and compare the observed zero/nonzero response pattern with the structural
//! prediction.
//!
//! Affine rates r_j(eps_j, x) = (1+eps_j)(c_j + sum_m k_{jm} x_m) make every
//! steady state a linear solve, so the harness tests structure without any
//! Newton-iteration flakiness. Negative rate values are permitted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::influence::InfluenceMatrix;
use crate::network::{input_pattern, stoich_matrix, ReactionNetwork};

#[derive(Debug, thiserror::Error)]
pub enum NumcheckError {
    #[error("Jacobian SR is numerically singular at the steady state")]
    SingularJacobian,
    #[error("could not construct a well-conditioned affine model in {0} attempts")]
    ModelConstruction(u32),
    #[error("tolerances must satisfy tol_zero <= 1e-3 * tol_nonzero (got {tol_zero} vs {tol_nonzero})")]
    BadTolerances { tol_zero: f64, tol_nonzero: f64 },
    #[error(
        "hard violation: structural zero at {kind} index {index} responded with \
         magnitude {magnitude:.3e} (tolerance {tol:.3e})"
    )]
    HardViolation {
        kind: &'static str,
        index: usize,
        magnitude: f64,
        tol: f64,
    },
}

/// Affine rate law per reaction: r_j(eps, x) = c_j + eps_j + sum k_{jm} x_m,
/// with k entries only for m |- j. The perturbation is an additive shift of
/// the rate function: its derivative in the perturbation parameter is the
/// constant 1, a generic direction even when the steady-state flux itself is
/// zero (as it necessarily is in the square case E = M).
#[derive(Debug, Clone)]
pub struct AffineRateModel {
    pub c: Vec<f64>,
    /// per reaction: (metabolite, coefficient) for each input
    pub k: Vec<Vec<(usize, f64)>>,
    /// the positive steady state the model was constructed around
    pub x_star: Vec<f64>,
}

impl AffineRateModel {
    pub fn rate(&self, j: usize, eps_j: f64, x: &[f64]) -> f64 {
        self.c[j] + eps_j + self.k[j].iter().map(|&(m, kk)| kk * x[m]).sum::<f64>()
    }

    pub fn rates(&self, eps: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.c.len()).map(|j| self.rate(j, eps[j], x)).collect()
    }
}

/// One finite-perturbation experiment.
#[derive(Debug, Clone)]
pub struct ResponseRecord {
    pub j_star: usize,
    pub eps_step: f64,
    /// x^1 - x^0
    pub delta_x: Vec<f64>,
    /// flux response (r^1 - r^0)/eps_step; includes the forced term on j*
    pub phi: Vec<f64>,
    /// ||S Phi||_inf
    pub flux_residual: f64,
    /// tolerance scale: max(1, ||x^0||_inf)
    pub scale: f64,
}

/// Solve A x = b by Gaussian elimination with partial pivoting. Returns the
/// solution and a crude condition estimate (max/min pivot magnitude).
fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut max_piv: f64 = 0.0;
    let mut min_piv = f64::INFINITY;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        max_piv = max_piv.max(p.abs());
        min_piv = min_piv.min(p.abs());
        for i in 0..n {
            if i == col || m[i][col] == 0.0 {
                continue;
            }
            let f = m[i][col] / p;
            for j in col..=n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    let x = (0..n).map(|i| m[i][n] / m[i][i]).collect();
    Some((x, max_piv / min_piv))
}

/// Real kernel basis of S (dimension E - M for full-rank S) via RREF.
fn kernel_basis(net: &ReactionNetwork) -> Vec<Vec<f64>> {
    let s = stoich_matrix(net);
    let (rows, cols) = (s.rows, s.cols);
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|i| (0..cols).map(|j| s.get(i, j) as f64).collect())
        .collect();
    let mut pivot_col_of_row: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        let Some(piv) = (r..rows)
            .filter(|&i| a[i][col].abs() > 1e-9)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
        else {
            continue;
        };
        a.swap(r, piv);
        let p = a[r][col];
        for j in 0..cols {
            a[r][j] /= p;
        }
        for i in 0..rows {
            if i != r && a[i][col].abs() > 0.0 {
                let f = a[i][col];
                for j in 0..cols {
                    a[i][j] -= f * a[r][j];
                }
            }
        }
        pivot_col_of_row.push(col);
        r += 1;
        if r == rows {
            break;
        }
    }
    let pivot_cols: Vec<usize> = pivot_col_of_row.clone();
    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free_cols
        .iter()
        .map(|&fc| {
            let mut v = vec![0.0; cols];
            v[fc] = 1.0;
            for (row, &pc) in pivot_col_of_row.iter().enumerate() {
                v[pc] = -a[row][fc];
            }
            v
        })
        .collect()
}

/// Assemble the M x M steady-state system (S K) x = -S (c + eps).
fn steady_system(
    net: &ReactionNetwork,
    model: &AffineRateModel,
    eps: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let s = stoich_matrix(net);
    let (e, m) = (net.num_reactions(), net.num_metabolites());
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        for j in 0..e {
            let sij = s.get(i, j) as f64;
            if sij == 0.0 {
                continue;
            }
            b[i] -= sij * (model.c[j] + eps[j]);
            for &(mm, kk) in &model.k[j] {
                a[i][mm] += sij * kk;
            }
        }
    }
    (a, b)
}

/// Construct a random affine model admitting the constructed positive steady
/// state x*: k random in +-[0.5, 2], rho a random kernel combination,
/// c := rho - K x*. Retries until the Jacobian SK is well conditioned.
pub fn random_affine_model(
    net: &ReactionNetwork,
    seed: u64,
) -> Result<AffineRateModel, NumcheckError> {
    const MAX_ATTEMPTS: u32 = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern = input_pattern(net);
    let (e, m) = (net.num_reactions(), net.num_metabolites());
    let kernel = kernel_basis(net);
    for _ in 0..MAX_ATTEMPTS {
        let x_star: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
        let mut k: Vec<Vec<(usize, f64)>> = vec![Vec::new(); e];
        for &(mm, j) in &pattern.edges {
            let mag = rng.gen_range(0.5..2.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            k[j].push((mm, sign * mag));
        }
        // rho in ker S: random combination of basis vectors (zero when E = M)
        let mut rho = vec![0.0; e];
        for basis in &kernel {
            let w: f64 = rng.gen_range(-1.0..1.0);
            for j in 0..e {
                rho[j] += w * basis[j];
            }
        }
        let c: Vec<f64> = (0..e)
            .map(|j| rho[j] - k[j].iter().map(|&(mm, kk)| kk * x_star[mm]).sum::<f64>())
            .collect();
        let model = AffineRateModel { c, k, x_star };
        let eps = vec![0.0; e];
        let (a, b) = steady_system(net, &model, &eps);
        if let Some((x, cond)) = solve_linear(&a, &b) {
            let close = x
                .iter()
                .zip(&model.x_star)
                .all(|(&xi, &xs)| (xi - xs).abs() <= 1e-8 * xs.abs().max(1.0));
            if cond < 1e12 && close {
                return Ok(model);
            }
        }
    }
    Err(NumcheckError::ModelConstruction(MAX_ATTEMPTS))
}

/// Solve the steady-state equation 0 = S r(eps, x).
pub fn steady_state(
    net: &ReactionNetwork,
    model: &AffineRateModel,
    eps: &[f64],
) -> Result<Vec<f64>, NumcheckError> {
    let (a, b) = steady_system(net, model, eps);
    let (x, cond) = solve_linear(&a, &b).ok_or(NumcheckError::SingularJacobian)?;
    if cond > 1e12 {
        return Err(NumcheckError::SingularJacobian);
    }
    Ok(x)
}

pub const DEFAULT_EPS_STEP: f64 = 0.05;

/// Perturb reaction j* by eps_step, re-solve, and record the response.
pub fn finite_perturbation(
    net: &ReactionNetwork,
    model: &AffineRateModel,
    j_star: usize,
    eps_step: f64,
) -> Result<ResponseRecord, NumcheckError> {
    let e = net.num_reactions();
    let eps0 = vec![0.0; e];
    let mut eps1 = vec![0.0; e];
    eps1[j_star] = eps_step;
    let x0 = steady_state(net, model, &eps0)?;
    let x1 = steady_state(net, model, &eps1)?;
    let r0 = model.rates(&eps0, &x0);
    let r1 = model.rates(&eps1, &x1);
    let delta_x: Vec<f64> = x1.iter().zip(&x0).map(|(a, b)| a - b).collect();
    let phi: Vec<f64> = r1.iter().zip(&r0).map(|(a, b)| (a - b) / eps_step).collect();
    let s = stoich_matrix(net);
    let flux_residual = (0..net.num_metabolites())
        .map(|i| (0..e).map(|j| s.get(i, j) as f64 * phi[j]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let scale = x0.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    Ok(ResponseRecord {
        j_star,
        eps_step,
        delta_x,
        phi,
        flux_residual,
        scale,
    })
}

/// Outcome of comparing one record against the structural prediction.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct PatternReport {
    pub hard_checked: usize,
    pub soft_checked: usize,
    /// structural nonzeros whose numeric response stayed below tol_nonzero
    pub soft_misses: usize,
}

pub const DEFAULT_TOL_ZERO: f64 = 1e-8;
pub const DEFAULT_TOL_NONZERO: f64 = 1e-4;

/// Classify each response entry. Structural zeros must be numerically zero
/// (hard assertion); structural nonzeros are expected nonzero (soft count).
pub fn compare_patterns(
    record: &ResponseRecord,
    infl: &InfluenceMatrix,
    tol_zero: f64,
    tol_nonzero: f64,
) -> Result<PatternReport, NumcheckError> {
    if tol_zero > 1e-3 * tol_nonzero {
        return Err(NumcheckError::BadTolerances {
            tol_zero,
            tol_nonzero,
        });
    }
    let mut rep = PatternReport::default();
    let j = record.j_star;
    let scale = record.scale;
    let mut check = |structural: bool, value: f64, kind: &'static str, index: usize| {
        if structural {
            rep.soft_checked += 1;
            if value.abs() <= tol_nonzero * scale {
                rep.soft_misses += 1;
            }
            Ok(())
        } else {
            rep.hard_checked += 1;
            if value.abs() >= tol_zero * scale {
                return Err(NumcheckError::HardViolation {
                    kind,
                    index,
                    magnitude: value.abs(),
                    tol: tol_zero * scale,
                });
            }
            Ok(())
        }
    };
    for jp in 0..infl.num_reactions {
        check(infl.flux(j, jp), record.phi[jp], "flux", jp)?;
    }
    for m in 0..infl.num_metabolites {
        check(infl.metab(j, m), record.delta_x[m], "metabolite", m)?;
    }
    Ok(rep)
}
