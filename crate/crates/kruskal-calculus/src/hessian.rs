use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use tensor_core::gram_skip_factors;

use crate::values::beta_product;
use crate::CalculusError;

/// Weighted Hessian `coeff_norm * H_f + coeff_misfit * H_c` in factored
/// form, where `H_f` is the exact Hessian of the rank-1-norm objective and
/// `H_c` the Gauss-Newton Hessian of the squared fit residual.
///
/// Only the factor matrices and their R x R Gram products are stored. The
/// dense parameter-space matrix exists solely through [`Self::materialize`],
/// which is meant for small test instances.
#[derive(Debug, Clone)]
pub struct StructuredHessian {
    factors: Vec<DMatrix<f64>>,
    dims: Vec<usize>,
    rank: usize,
    /// Single-mode Grams `Gamma_n = U^(n)' U^(n)`.
    grams: Vec<DMatrix<f64>>,
    /// Skip-mode Hadamard Grams `Gamma_{-n}`.
    gamma_skip: Vec<DMatrix<f64>>,
    /// Full Hadamard Gram `Gamma`.
    gamma_full: DMatrix<f64>,
    coeff_norm: f64,
    coeff_misfit: f64,
    multiplier: f64,
    damping: f64,
}

impl StructuredHessian {
    fn weighted(factors: &[DMatrix<f64>], coeff_norm: f64, coeff_misfit: f64) -> Self {
        let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
        let rank = factors[0].ncols();
        let grams: Vec<DMatrix<f64>> = factors.iter().map(|f| f.transpose() * f).collect();
        let gamma_skip: Vec<DMatrix<f64>> = (0..factors.len())
            .map(|n| gram_skip_factors(factors, n))
            .collect();
        let mut gamma_full = DMatrix::from_element(rank, rank, 1.0);
        for g in &grams {
            gamma_full.component_mul_assign(g);
        }
        Self {
            factors: factors.to_vec(),
            dims,
            rank,
            grams,
            gamma_skip,
            gamma_full,
            coeff_norm,
            coeff_misfit,
            multiplier: 0.0,
            damping: 0.0,
        }
    }

    /// Exact Hessian of the rank-1-norm objective.
    pub fn of_component_norm(factors: &[DMatrix<f64>]) -> Self {
        Self::weighted(factors, 1.0, 0.0)
    }

    /// Gauss-Newton Hessian of the squared fit residual.
    pub fn of_misfit(factors: &[DMatrix<f64>]) -> Self {
        Self::weighted(factors, 0.0, 1.0)
    }

    /// Lagrangian Hessian `H_f + lambda * H_c`.
    pub fn lagrangian(factors: &[DMatrix<f64>], lambda: f64) -> Self {
        let mut h = Self::weighted(factors, 1.0, lambda);
        h.multiplier = lambda;
        h
    }

    /// Role-swapped Lagrangian `H_c + lambda * H_f`, used when the fit is
    /// the objective and the rank-1 norm the constraint.
    pub fn swapped_lagrangian(factors: &[DMatrix<f64>], lambda: f64) -> Self {
        let mut h = Self::weighted(factors, lambda, 1.0);
        h.multiplier = lambda;
        h
    }

    pub fn with_damping(mut self, mu: f64) -> Self {
        self.damping = mu;
        self
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn param_len(&self) -> usize {
        self.dims.iter().map(|d| d * self.rank).sum()
    }

    fn mode_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.dims.len());
        let mut acc = 0;
        for &d in &self.dims {
            offsets.push(acc);
            acc += d * self.rank;
        }
        offsets
    }

    /// Mean of the block-diagonal entries, the scale reference for the
    /// damping policy.
    pub fn mean_block_diagonal(&self) -> f64 {
        let mut total = 0.0;
        for (n, &d) in self.dims.iter().enumerate() {
            let skip = self.coeff_combo_skip(n);
            total += skip.diagonal().sum() * d as f64;
        }
        2.0 * total / self.param_len() as f64
    }

    /// `C^(-n) = coeff_misfit * Gamma_{-n} + coeff_norm * diag(Gamma_{-n})`,
    /// the coefficient of the `C^(-n) kron I` part of mode-n's diagonal
    /// block (half the true scale).
    fn coeff_combo_skip(&self, n: usize) -> DMatrix<f64> {
        let g = &self.gamma_skip[n];
        let mut c = g * self.coeff_misfit;
        for r in 0..self.rank {
            c[(r, r)] += self.coeff_norm * g[(r, r)];
        }
        c
    }

    /// `C = coeff_misfit * Gamma + 2 coeff_norm * diag(Gamma)`, the core of
    /// the rank-R^2 correction (half the true scale).
    fn coeff_combo_full(&self) -> DMatrix<f64> {
        let mut c = &self.gamma_full * self.coeff_misfit;
        for r in 0..self.rank {
            c[(r, r)] += 2.0 * self.coeff_norm * self.gamma_full[(r, r)];
        }
        c
    }

    /// Division-free cross coefficient for the mode pair `(n, m)`:
    /// `coeff_misfit * Gamma_{-(n,m)} + 2 coeff_norm * diag(beta_{-(n,m)})`.
    fn coeff_cross(&self, n: usize, m: usize) -> DMatrix<f64> {
        let r = self.rank;
        let mut gamma_pair = DMatrix::from_element(r, r, 1.0);
        for (k, g) in self.grams.iter().enumerate() {
            if k == n || k == m {
                continue;
            }
            gamma_pair.component_mul_assign(g);
        }
        let mut c = &gamma_pair * self.coeff_misfit;
        for i in 0..r {
            c[(i, i)] += 2.0 * self.coeff_norm * gamma_pair[(i, i)];
        }
        c
    }

    /// Hessian-vector product `H v`, never forming the dense matrix.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let offsets = self.mode_offsets();
        let n_modes = self.dims.len();
        let r = self.rank;
        let v_mats: Vec<DMatrix<f64>> = (0..n_modes)
            .map(|n| {
                DMatrix::from_column_slice(
                    self.dims[n],
                    r,
                    v.rows(offsets[n], self.dims[n] * r).as_slice(),
                )
            })
            .collect();
        let d_mats: Vec<DMatrix<f64>> = (0..n_modes)
            .map(|m| self.factors[m].transpose() * &v_mats[m])
            .collect();

        let mut out = DVector::zeros(v.len());
        for n in 0..n_modes {
            let mut block = &v_mats[n] * self.coeff_combo_skip(n);
            for m in 0..n_modes {
                if m == n {
                    continue;
                }
                let coupled = self.coeff_cross(n, m).component_mul(&d_mats[m]);
                block += &self.factors[n] * coupled.transpose();
            }
            block *= 2.0;
            out.rows_mut(offsets[n], self.dims[n] * r)
                .copy_from_slice(block.as_slice());
        }
        out
    }

    /// Dense Hessian, for test instances only.
    pub fn materialize(&self) -> DMatrix<f64> {
        let p = self.param_len();
        let mut out = DMatrix::zeros(p, p);
        let mut e = DVector::zeros(p);
        for j in 0..p {
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e));
            e[j] = 0.0;
        }
        out
    }

    /// Factors the damped matrix `H + mu I` for repeated solves.
    ///
    /// The primary path splits the matrix into per-mode blocks and a global
    /// rank-R^2 correction, inverting blocks through a second Woodbury pass
    /// (or directly when `R >= I_n`). The correction core divides by the
    /// single-mode Grams, so when any `Gamma_n` entry is near zero relative
    /// to its column norms (orthogonal columns) the factorization falls back
    /// to a division-free form whose correction couples mode pairs.
    pub fn factorize(&self, mu: f64) -> Result<DampedHessian<'_>, CalculusError> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(CalculusError::BadDamping(mu));
        }
        let nu = 0.5 * mu;
        if self.rank_r2_path_is_safe() {
            if let Ok(solver) = self.factorize_rank_r2(nu) {
                return Ok(solver);
            }
        }
        self.factorize_cross(nu)
    }

    fn rank_r2_path_is_safe(&self) -> bool {
        for (n, g) in self.grams.iter().enumerate() {
            for r in 0..self.rank {
                for s in 0..self.rank {
                    let scale =
                        (g[(r, r)] * g[(s, s)]).sqrt().max(f64::EPSILON);
                    if g[(r, s)].abs() < 1e-8 * scale {
                        let _ = n;
                        return false;
                    }
                }
            }
        }
        true
    }

    fn block_coeff(&self, n: usize, nu: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), CalculusError> {
        let r = self.rank;
        let mut b = self.coeff_combo_skip(n);
        for i in 0..r {
            b[(i, i)] += nu;
        }
        let b_inv = Cholesky::new(b.clone())
            .map(|ch| ch.inverse())
            .ok_or(CalculusError::DampingTooSmall)?;
        Ok((b, b_inv))
    }

    fn factorize_rank_r2(&self, nu: f64) -> Result<DampedHessian<'_>, CalculusError> {
        let n_modes = self.dims.len();
        let r = self.rank;
        let r2 = r * r;
        let c_full = self.coeff_combo_full();

        let mut blocks = Vec::with_capacity(n_modes);
        for n in 0..n_modes {
            // A_within = C ./ (Gamma_n .* Gamma_n)
            let mut a_within = c_full.clone();
            for i in 0..r {
                for j in 0..r {
                    let g = self.grams[n][(i, j)];
                    a_within[(i, j)] /= g * g;
                }
            }
            let (_, b_inv) = self.block_coeff(n, nu)?;
            if r < self.dims[n] {
                // T = I - (B^-1 kron Gamma_n) P dvec(A_within)
                let mut t = DMatrix::identity(r2, r2);
                for cr in 0..r {
                    for cs in 0..r {
                        let a = a_within[(cr, cs)];
                        // (B^-1 kron Gamma) e_(s,r) = (B^-1 e_r) kron (Gamma e_s)
                        for i in 0..r {
                            for j in 0..r {
                                t[(i + j * r, cr + cs * r)] -=
                                    a * self.grams[n][(i, cs)] * b_inv[(j, cr)];
                            }
                        }
                    }
                }
                let lu = t.lu();
                blocks.push(BlockSolver::Woodbury {
                    b_inv,
                    a_within,
                    lu,
                });
            } else {
                let d = self.dims[n];
                let mut dense = DMatrix::zeros(d * r, d * r);
                for br in 0..r {
                    for bs in 0..r {
                        let coef = a_within[(br, bs)];
                        for i in 0..d {
                            for j in 0..d {
                                dense[(i + br * d, j + bs * d)] = -coef
                                    * self.factors[n][(i, bs)]
                                    * self.factors[n][(j, br)];
                            }
                        }
                    }
                }
                for br in 0..r {
                    for bs in 0..r {
                        let add = if br == bs { nu } else { 0.0 };
                        let coef = self.coeff_combo_skip(n)[(br, bs)] + add;
                        for i in 0..d {
                            dense[(i + br * d, i + bs * d)] += coef;
                        }
                    }
                }
                let solver = match Cholesky::new(dense.clone()) {
                    Some(ch) => DenseBlock::Chol(ch),
                    None => DenseBlock::Lu(dense.lu()),
                };
                blocks.push(BlockSolver::Dense(solver));
            }
        }

        let solver_core = DampedHessian {
            h: self,
            blocks,
            global: None,
            cross: None,
        };

        // S = Ztilde' Bblk^-1 Ztilde, assembled one column at a time.
        let mut s_glob: DMatrix<f64> = DMatrix::zeros(r2, r2);
        for n in 0..n_modes {
            let d = self.dims[n];
            let mut col_vec = DVector::zeros(d * r);
            for cr in 0..r {
                for cs in 0..r {
                    // column (r,s) of Ztilde_n = (e_s kron u_r) / Gamma_n(r,s)
                    col_vec.fill(0.0);
                    let g = self.grams[n][(cr, cs)];
                    for i in 0..d {
                        col_vec[i + cs * d] = self.factors[n][(i, cr)] / g;
                    }
                    let q = solver_core.block_solve(n, &col_vec)?;
                    let qm = DMatrix::from_column_slice(d, r, q.as_slice());
                    let uq = self.factors[n].transpose() * qm;
                    for rr in 0..r {
                        for ss in 0..r {
                            s_glob[(rr + ss * r, cr + cs * r)] +=
                                uq[(rr, ss)] / self.grams[n][(rr, ss)];
                        }
                    }
                }
            }
        }
        // T = I + S * PsiC with PsiC e_(r,s) = C(r,s) e_(s,r)
        let mut t_glob = DMatrix::identity(r2, r2);
        for cr in 0..r {
            for cs in 0..r {
                let coef = c_full[(cr, cs)];
                for row in 0..r2 {
                    t_glob[(row, cr + cs * r)] += coef * s_glob[(row, cs + cr * r)];
                }
            }
        }
        let mut solver = solver_core;
        solver.global = Some(GlobalCorrection {
            c_full,
            lu: t_glob.lu(),
        });
        Ok(solver)
    }

    fn factorize_cross(&self, nu: f64) -> Result<DampedHessian<'_>, CalculusError> {
        let n_modes = self.dims.len();
        let r = self.rank;
        let r2 = r * r;
        let mut blocks = Vec::with_capacity(n_modes);
        let mut b_invs = Vec::with_capacity(n_modes);
        for n in 0..n_modes {
            let (_, b_inv) = self.block_coeff(n, nu)?;
            b_invs.push(b_inv.clone());
            blocks.push(BlockSolver::KronDiagonal { b_inv });
        }

        // Inner system I + blkdiag(B_n^-1 kron Gamma_n) * M, where M couples
        // mode pairs through P dvec(A_cross).
        let dim = n_modes * r2;
        let mut t = DMatrix::identity(dim, dim);
        for n in 0..n_modes {
            for m in 0..n_modes {
                if m == n {
                    continue;
                }
                let a = self.coeff_cross(n, m);
                for cr in 0..r {
                    for cs in 0..r {
                        let coef = a[(cr, cs)];
                        // column (r,s) of block (n,m):
                        // coef * (B_n^-1 kron Gamma_n) e_(s,r)
                        for i in 0..r {
                            for j in 0..r {
                                t[(n * r2 + i + j * r, m * r2 + cr + cs * r)] +=
                                    coef * self.grams[n][(i, cs)] * b_invs[n][(j, cr)];
                            }
                        }
                    }
                }
            }
        }
        Ok(DampedHessian {
            h: self,
            blocks,
            global: None,
            cross: Some(CrossCorrection { lu: t.lu() }),
        })
    }
}

enum DenseBlock {
    Chol(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

enum BlockSolver {
    /// `(B kron I - W M W')^{-1}` through the inner R^2 Woodbury pass.
    Woodbury {
        b_inv: DMatrix<f64>,
        a_within: DMatrix<f64>,
        lu: LU<f64, Dyn, Dyn>,
    },
    /// Materialized block, for `R >= I_n`.
    Dense(DenseBlock),
    /// Plain `(B kron I)^{-1}`, used on the division-free path.
    KronDiagonal { b_inv: DMatrix<f64> },
}

struct GlobalCorrection {
    c_full: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

struct CrossCorrection {
    lu: LU<f64, Dyn, Dyn>,
}

/// Factored form of `H + mu I`, reusable across right-hand sides.
pub struct DampedHessian<'a> {
    h: &'a StructuredHessian,
    blocks: Vec<BlockSolver>,
    global: Option<GlobalCorrection>,
    cross: Option<CrossCorrection>,
}

impl<'a> DampedHessian<'a> {
    fn block_solve(&self, n: usize, b: &DVector<f64>) -> Result<DVector<f64>, CalculusError> {
        let d = self.h.dims[n];
        let r = self.h.rank;
        match &self.blocks[n] {
            BlockSolver::KronDiagonal { b_inv } => {
                let bm = DMatrix::from_column_slice(d, r, b.as_slice());
                let x = bm * b_inv;
                Ok(DVector::from_column_slice(x.as_slice()))
            }
            BlockSolver::Dense(solver) => {
                let x = match solver {
                    DenseBlock::Chol(ch) => ch.solve(b),
                    DenseBlock::Lu(lu) => {
                        lu.solve(b).ok_or(CalculusError::DampingTooSmall)?
                    }
                };
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(CalculusError::DampingTooSmall);
                }
                Ok(x)
            }
            BlockSolver::Woodbury { b_inv, a_within, lu } => {
                let bm = DMatrix::from_column_slice(d, r, b.as_slice());
                let u0 = &bm * b_inv;
                // w = vec(U' U0), then t = T^{-1} w, p = M t, x = u0 + Phi W p
                let w_m = self.h.factors[n].transpose() * &u0;
                let w = DVector::from_column_slice(w_m.as_slice());
                let t = lu.solve(&w).ok_or(CalculusError::DampingTooSmall)?;
                // (M t)(s,r) = A(r,s) t(r,s)
                let tm = DMatrix::from_column_slice(r, r, t.as_slice());
                let p = (a_within.component_mul(&tm)).transpose();
                let wp = &self.h.factors[n] * p;
                let x = u0 + wp * b_inv;
                let out = DVector::from_column_slice(x.as_slice());
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(CalculusError::DampingTooSmall);
                }
                Ok(out)
            }
        }
    }

    fn block_diag_solve(&self, v: &DVector<f64>) -> Result<DVector<f64>, CalculusError> {
        let offsets = self.h.mode_offsets();
        let mut out = DVector::zeros(v.len());
        for n in 0..self.h.dims.len() {
            let len = self.h.dims[n] * self.h.rank;
            let x = self.block_solve(n, &v.rows(offsets[n], len).clone_owned())?;
            out.rows_mut(offsets[n], len).copy_from(&x);
        }
        Ok(out)
    }

    /// Solves `(H + mu I) x = v`.
    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>, CalculusError> {
        let r = self.h.rank;
        let r2 = r * r;
        let offsets = self.h.mode_offsets();
        let n_modes = self.h.dims.len();
        let u0 = self.block_diag_solve(v)?;

        let half = match (&self.global, &self.cross) {
            (Some(global), None) => {
                // w = Ztilde' u0
                let mut w = DVector::zeros(r2);
                for n in 0..n_modes {
                    let d = self.h.dims[n];
                    let um = DMatrix::from_column_slice(
                        d,
                        r,
                        u0.rows(offsets[n], d * r).as_slice(),
                    );
                    let uu = self.h.factors[n].transpose() * um;
                    for rr in 0..r {
                        for ss in 0..r {
                            w[rr + ss * r] += uu[(rr, ss)] / self.h.grams[n][(rr, ss)];
                        }
                    }
                }
                let t = global
                    .lu
                    .solve(&w)
                    .ok_or(CalculusError::DampingTooSmall)?;
                // p = PsiC t: p(s,r) = C(r,s) t(r,s)
                let tm = DMatrix::from_column_slice(r, r, t.as_slice());
                let pm = global.c_full.component_mul(&tm).transpose();
                // x = u0 - Bblk^{-1} (Ztilde p)
                let mut zp = DVector::zeros(v.len());
                for n in 0..n_modes {
                    let d = self.h.dims[n];
                    let mut scaled = pm.clone();
                    for rr in 0..r {
                        for ss in 0..r {
                            scaled[(rr, ss)] /= self.h.grams[n][(rr, ss)];
                        }
                    }
                    let zn = &self.h.factors[n] * scaled;
                    zp.rows_mut(offsets[n], d * r)
                        .copy_from_slice(zn.as_slice());
                }
                let correction = self.block_diag_solve(&zp)?;
                u0 - correction
            }
            (None, Some(cross)) => {
                // w_n = vec(U^(n)' U0_n) stacked over modes
                let mut w = DVector::zeros(n_modes * r2);
                for n in 0..n_modes {
                    let d = self.h.dims[n];
                    let um = DMatrix::from_column_slice(
                        d,
                        r,
                        u0.rows(offsets[n], d * r).as_slice(),
                    );
                    let uu = self.h.factors[n].transpose() * um;
                    w.rows_mut(n * r2, r2).copy_from_slice(uu.as_slice());
                }
                let t = cross
                    .lu
                    .solve(&w)
                    .ok_or(CalculusError::DampingTooSmall)?;
                // p_n = sum_{m != n} M_{n,m} t_m with
                // (M t)(s,r) = A_cross(r,s) t(r,s)
                let mut x = u0.clone();
                for n in 0..n_modes {
                    let d = self.h.dims[n];
                    let mut pm = DMatrix::zeros(r, r);
                    for m in 0..n_modes {
                        if m == n {
                            continue;
                        }
                        let tm = DMatrix::from_column_slice(
                            r,
                            r,
                            t.rows(m * r2, r2).as_slice(),
                        );
                        pm += self.h.coeff_cross(n, m).component_mul(&tm).transpose();
                    }
                    let zn = &self.h.factors[n] * pm;
                    let corr = self.block_solve(
                        n,
                        &DVector::from_column_slice(zn.as_slice()),
                    )?;
                    let mut rows = x.rows_mut(offsets[n], d * r);
                    rows -= corr;
                }
                x
            }
            _ => u0,
        };
        let out = half * 0.5;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(CalculusError::DampingTooSmall);
        }
        Ok(out)
    }
}
