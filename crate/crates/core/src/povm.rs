//! Brute-force check that every orthogonality-preserving POVM element on X
//! is proportional to the identity: assemble the linear constraints on a
//! Hermitian E and measure the dimension of their common solution space.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::construct::OpsInstance;
use crate::error::{domain, Result};
use crate::state::{group_vector, Bipartition, StateTag, ORTHO_TOL};

/// Relative singular-value cut for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Ratios σ/σ_max inside this window are too close to call.
pub const BORDERLINE_WINDOW: (f64, f64) = (1e-10, 1e-6);

#[derive(Clone, Debug)]
pub struct PovmConstraintSystem {
    pub bipartition: Bipartition,
    pub dim_x: usize,
    /// (ψ₁, ψ₂) meaning ⟨ψ₁|E|ψ₂⟩ = 0.
    pub constraints: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    pub provenance: Vec<(StateTag, StateTag)>,
}

fn phase_key(v: &[Complex64]) -> Vec<i64> {
    let lead = v.iter().find(|a| a.norm() > ORTHO_TOL).copied().unwrap_or(Complex64::new(1.0, 0.0));
    let unit = lead.conj() / lead.norm();
    let scale = 1.0 / v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    v.iter()
        .flat_map(|a| {
            let z = a * unit * scale;
            [(z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64]
        })
        .collect()
}

pub fn assemble_constraints(ops: &OpsInstance, bip: &Bipartition) -> Result<PovmConstraintSystem> {
    assemble_constraints_with_tol(ops, bip, ORTHO_TOL)
}

pub fn assemble_constraints_with_tol(
    ops: &OpsInstance,
    bip: &Bipartition,
    tol: f64,
) -> Result<PovmConstraintSystem> {
    let parts = ops
        .states()
        .map(|s| group_vector(s, bip, &ops.dims).map(|(x, y)| (s.tag, x, y)))
        .collect::<Result<Vec<_>>>()?;
    let mut constraints = Vec::new();
    let mut provenance = Vec::new();
    let mut seen: HashSet<(Vec<i64>, Vec<i64>)> = HashSet::new();
    for a in 0..parts.len() {
        for b in a + 1..parts.len() {
            let ov: Complex64 = parts[a].2.iter().zip(&parts[b].2).map(|(p, q)| p.conj() * q).sum();
            if ov.norm() < tol {
                continue;
            }
            let (ka, kb) = (phase_key(&parts[a].1), phase_key(&parts[b].1));
            let key = if ka <= kb { (ka, kb) } else { (kb, ka) };
            if !seen.insert(key) {
                continue;
            }
            constraints.push((parts[a].1.clone(), parts[b].1.clone()));
            provenance.push((parts[a].0, parts[b].0));
        }
    }
    Ok(PovmConstraintSystem {
        bipartition: bip.clone(),
        dim_x: bip.dim_x(&ops.dims),
        constraints,
        provenance,
    })
}

/// Column of each real unknown: diagonal entries first, then (Re, Im) of
/// every upper-triangle entry in row-major order.
fn offdiag_col(d: usize, i: usize, j: usize) -> usize {
    // number of pairs (p, q), p < q, preceding (i, j)
    let before = i * (2 * d - i - 1) / 2 + (j - i - 1);
    d + 2 * before
}

impl PovmConstraintSystem {
    pub fn unknowns(&self) -> usize {
        self.dim_x * self.dim_x
    }

    /// Two real rows per complex constraint.
    pub fn real_matrix(&self) -> DMatrix<f64> {
        let d = self.dim_x;
        let mut m = DMatrix::<f64>::zeros(2 * self.constraints.len(), d * d);
        for (c, (a, b)) in self.constraints.iter().enumerate() {
            let sa: Vec<usize> = (0..d).filter(|&i| a[i].norm() > 0.0).collect();
            let sb: Vec<usize> = (0..d).filter(|&j| b[j].norm() > 0.0).collect();
            let mut add = |col: usize, z: Complex64| {
                m[(2 * c, col)] += z.re;
                m[(2 * c + 1, col)] += z.im;
            };
            for &i in &sa {
                for &j in &sb {
                    let z = a[i].conj() * b[j];
                    if i == j {
                        add(i, z);
                    } else {
                        let (p, q) = if i < j { (i, j) } else { (j, i) };
                        let col = offdiag_col(d, p, q);
                        // E_pq = x + iy and E_qp = x − iy
                        let sign = if i < j { 1.0 } else { -1.0 };
                        add(col, z);
                        add(col + 1, z * Complex64::new(0.0, sign));
                    }
                }
            }
        }
        m
    }

    /// Largest |⟨ψ₁|I|ψ₂⟩| over the constraints.
    pub fn identity_residual(&self) -> f64 {
        let mut x = vec![0.0; self.unknowns()];
        x[..self.dim_x].iter_mut().for_each(|v| *v = 1.0);
        let m = self.real_matrix();
        let r = &m * nalgebra::DVector::from_vec(x);
        r.amax()
    }

    /// Hermitian matrix from a real parameter vector.
    #[allow(clippy::needless_range_loop)]
    pub fn hermitian_from(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        let d = self.dim_x;
        let mut e = vec![vec![Complex64::default(); d]; d];
        for i in 0..d {
            e[i][i] = Complex64::new(x[i], 0.0);
            for j in i + 1..d {
                let c = offdiag_col(d, i, j);
                let z = Complex64::new(x[c], x[c + 1]);
                e[i][j] = z;
                e[j][i] = z.conj();
            }
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrivialityVerdict {
    pub nullspace_dim: usize,
    pub trivial: bool,
    pub borderline: bool,
    /// Smallest retained over largest discarded singular value.
    pub gap_ratio: f64,
    pub sigma_max: f64,
    /// A non-identity solution, rows of (re, im), when one exists.
    pub basis_sample: Option<Vec<Vec<(f64, f64)>>>,
}

fn sorted_desc(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut s: Vec<f64> = v.into_iter().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn nullspace_dimension(sys: &PovmConstraintSystem) -> Result<TrivialityVerdict> {
    if sys.dim_x == 0 {
        return domain("X side of dimension 0");
    }
    let n = sys.unknowns();
    let mut a = sys.real_matrix();
    if a.nrows() == 0 {
        a = DMatrix::zeros(1, n);
    }
    // Square the problem down first; R has the singular values of A.
    let r = if a.nrows() > n { a.qr().r() } else { a };
    let svd = nalgebra::SVD::new(r, false, true);
    let mut sigma = sorted_desc(svd.singular_values.iter().copied());
    sigma.resize(n, 0.0);
    let sigma_max = sigma[0];
    let cut = RANK_THRESHOLD * sigma_max;
    let rank = if sigma_max == 0.0 { 0 } else { sigma.iter().filter(|&&s| s > cut).count() };
    let nullspace_dim = n - rank;
    let borderline = sigma_max > 0.0
        && sigma.iter().any(|&s| {
            let q = s / sigma_max;
            q >= BORDERLINE_WINDOW.0 && q <= BORDERLINE_WINDOW.1
        });
    let gap_ratio = match (rank, nullspace_dim) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        _ if sigma[rank] == 0.0 => f64::INFINITY,
        _ => sigma[rank - 1] / sigma[rank],
    };
    let basis_sample = (nullspace_dim > 1).then(|| null_sample(sys, &svd, rank, &sigma)).flatten();
    Ok(TrivialityVerdict {
        nullspace_dim,
        trivial: nullspace_dim == 1,
        borderline,
        gap_ratio,
        sigma_max,
        basis_sample,
    })
}

fn null_sample(
    sys: &PovmConstraintSystem,
    svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rank: usize,
    sorted: &[f64],
) -> Option<Vec<Vec<(f64, f64)>>> {
    let n = sys.unknowns();
    let d = sys.dim_x;
    let vt = svd.v_t.as_ref()?;
    let sv = &svd.singular_values;
    // rows of V^T paired with their singular values; rows beyond the matrix
    // height span the rest of the null space
    let mut null_rows: Vec<Vec<f64>> = (0..vt.nrows())
        .filter(|&k| sv[k] <= RANK_THRESHOLD * sorted[0] || sorted[0] == 0.0)
        .map(|k| vt.row(k).iter().copied().collect())
        .collect();
    if vt.nrows() < n {
        // complete with the orthogonal complement of the row space
        let rows: Vec<Vec<f64>> = (0..vt.nrows()).map(|k| vt.row(k).iter().copied().collect()).collect();
        for e in 0..n {
            let mut v = vec![0.0; n];
            v[e] = 1.0;
            for r in rows.iter().chain(null_rows.clone().iter()) {
                let dot: f64 = r.iter().zip(&v).map(|(p, q)| p * q).sum();
                v.iter_mut().zip(r).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|x| *x /= norm);
                null_rows.push(v);
            }
            if null_rows.len() >= n - rank {
                break;
            }
        }
    }
    let id_norm = (d as f64).sqrt();
    let best = null_rows
        .into_iter()
        .map(|mut v| {
            let dot: f64 = v[..d].iter().sum::<f64>() / id_norm;
            v[..d].iter_mut().for_each(|x| *x -= dot / id_norm);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (norm, v)
        })
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())?;
    if best.0 < 1e-6 {
        return None;
    }
    let e = sys.hermitian_from(&best.1);
    Some(e.iter().map(|row| row.iter().map(|z| (z.re, z.im)).collect()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupingVerdict {
    pub grouping: String,
    pub d_x: usize,
    pub n_constraints: usize,
    pub nullspace_dim: usize,
    pub trivial: bool,
    pub borderline: bool,
    pub gap_ratio: f64,
    #[serde(skip)]
    pub detail: TrivialityVerdict,
}

pub fn oracle_for(ops: &OpsInstance, bip: &Bipartition) -> Result<GroupingVerdict> {
    oracle_for_with_tol(ops, bip, ORTHO_TOL)
}

/// As [`oracle_for`], with the orthogonality tolerance used to drop vanishing constraints.
pub fn oracle_for_with_tol(ops: &OpsInstance, bip: &Bipartition, tol: f64) -> Result<GroupingVerdict> {
    let sys = assemble_constraints_with_tol(ops, bip, tol)?;
    let v = nullspace_dimension(&sys)?;
    Ok(GroupingVerdict {
        grouping: bip.label(),
        d_x: sys.dim_x,
        n_constraints: sys.constraints.len(),
        nullspace_dim: v.nullspace_dim,
        trivial: v.trivial,
        borderline: v.borderline,
        gap_ratio: v.gap_ratio,
        detail: v,
    })
}

/// Runs the oracle on several groupings at once, one thread each.
pub fn oracle_for_all(ops: &OpsInstance, bips: &[Bipartition]) -> Result<Vec<GroupingVerdict>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = bips.iter().map(|b| s.spawn(move || oracle_for(ops, b))).collect();
        handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSummary {
    pub groupings: Vec<GroupingVerdict>,
    pub trivial: bool,
    pub borderline: bool,
}

/// Triviality on every (n−1)-party cyclic grouping.
pub fn strongest_nonlocality_bruteforce(ops: &OpsInstance) -> Result<OracleSummary> {
    let n = ops.n();
    if n < 3 {
        return domain(format!("strongest nonlocality needs at least 3 parties, got {n}"));
    }
    let bips = (0..n).map(|i| Bipartition::cyclic(i, n)).collect::<Result<Vec<_>>>()?;
    let groupings = oracle_for_all(ops, &bips)?;
    let borderline = groupings.iter().any(|g| g.borderline);
    let trivial = !borderline && groupings.iter().all(|g| g.trivial);
    Ok(OracleSummary {
        groupings,
        trivial,
        borderline,
    })
}
