//! Symmetric eigensolvers: a dense path for small matrices and a block
//! Krylov (Lanczos with full reorthogonalization) path for the sparse
//! stencil and for large assembled Hamiltonians.
//!
//! The iterative solver is deterministic: start vectors come from a
//! fixed counter-based stream, the basis is expanded in a fixed order,
//! and no parallel reductions are involved. Convergence is declared on
//! explicitly computed residuals ‖Ax − θx‖ ≤ tol·scale, where scale is
//! the current Ritz spectral radius; failure to converge within the
//! basis cap reports the worst residual.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{Error, Result};
use crate::rng;

/// Real symmetric linear operator, applied to blocks of column-major
/// packed vectors.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;
    /// y = A·x for `cols` vectors of length `dim()` packed column-major.
    fn apply_block(&self, x: &[f64], y: &mut [f64], cols: usize);
}

impl SymOp for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_block(&self, x: &[f64], y: &mut [f64], cols: usize) {
        let n = self.nrows();
        let xm = DMatrixView::from_slice(&x[..n * cols], n, cols);
        let mut ym = DMatrixViewMut::from_slice(&mut y[..n * cols], n, cols);
        ym.gemm(1.0, self, &xm, 0.0);
    }
}

/// Tuning knobs for [`lowest_eigenpairs`].
#[derive(Debug, Clone)]
pub struct LanczosOpts {
    /// Vectors added to the basis per iteration.
    pub block: usize,
    /// Residual tolerance relative to the Ritz spectral radius.
    pub tol: f64,
    /// Hard cap on the basis size (0 = automatic).
    pub max_basis: usize,
    /// Seed for the start block.
    pub seed: u64,
}

impl Default for LanczosOpts {
    fn default() -> Self {
        LanczosOpts { block: 4, tol: 1e-10, max_basis: 0, seed: 0 }
    }
}

/// Lowest `k` eigenpairs of a symmetric operator, values ascending,
/// vectors as the columns of an n×k matrix.
pub fn lowest_eigenpairs<O: SymOp + ?Sized>(
    op: &O,
    k: usize,
    opts: &LanczosOpts,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("requested {k} eigenpairs of a {n}-dim operator")));
    }
    if !(opts.tol > 0.0) || opts.block == 0 {
        return Err(Error::Invalid(format!(
            "eigensolver needs tol > 0 and block ≥ 1, got tol {} block {}",
            opts.tol, opts.block
        )));
    }
    let b = opts.block.min(n);
    let cap = if opts.max_basis > 0 {
        opts.max_basis.clamp(k, n)
    } else {
        (12 * k + 120).min(n)
    };

    let mut q = DMatrix::<f64>::zeros(n, cap);
    let mut w = DMatrix::<f64>::zeros(n, cap);
    let mut h = DMatrix::<f64>::zeros(cap, cap);
    let mut rng_ = rng::stream(opts.seed, 0, rng::STREAM_EIGEN);
    let mut z = DMatrix::<f64>::zeros(n, b);
    for v in z.iter_mut() {
        *v = rng::normal(&mut rng_);
    }

    let mut m = 0usize;
    let mut since_check = 0usize;
    let mut worst_res = f64::INFINITY;

    loop {
        let take = b.min(cap - m);
        orthonormalize_block(&mut z, take, &q, m, &mut rng_)?;
        q.columns_mut(m, take).copy_from(&z.columns(0, take));
        apply_columns(op, &q, &mut w, m, take);

        // extend the projected matrix: H[0..m+take, m..m+take] = QᵀW_new
        let mut coupling = DMatrix::<f64>::zeros(m + take, take);
        coupling.gemm_tr(1.0, &q.columns(0, m + take), &w.columns(m, take), 0.0);
        for j in 0..take {
            for i in 0..m + take {
                h[(i, m + j)] = coupling[(i, j)];
                h[(m + j, i)] = coupling[(i, j)];
            }
        }
        m += take;
        since_check += take;

        // the projected eigensolve is O(m³), so space checks out as the
        // basis grows
        let check_stride = (2 * b).max(8).max(m / 6);
        if m >= k && (m >= cap || since_check >= check_stride) {
            since_check = 0;
            let (theta, y) = ritz(&h, m);
            let scale = theta
                .first()
                .unwrap()
                .abs()
                .max(theta.last().unwrap().abs())
                .max(f64::MIN_POSITIVE);
            // Ritz vectors X = QY and residuals AX − XΘ = WY − XΘ
            let yk = y.columns(0, k.min(m)).into_owned();
            let mut x = DMatrix::<f64>::zeros(n, k);
            x.gemm(1.0, &q.columns(0, m), &yk, 0.0);
            let mut r = DMatrix::<f64>::zeros(n, k);
            r.gemm(1.0, &w.columns(0, m), &yk, 0.0);
            worst_res = 0.0;
            for j in 0..k {
                let mut ss = 0.0;
                for i in 0..n {
                    let d = r[(i, j)] - theta[j] * x[(i, j)];
                    ss += d * d;
                }
                worst_res = worst_res.max(ss.sqrt());
            }
            if worst_res <= opts.tol * scale {
                return Ok((theta[..k].to_vec(), x));
            }
        }

        if m >= cap {
            return Err(Error::Numerical(format!(
                "eigensolver stalled at basis {m}/{n}: worst residual {worst_res:.3e} \
                 exceeds tol {:.1e} × scale",
                opts.tol
            )));
        }
        // next candidates: the images A·(latest block)
        z.columns_mut(0, take).copy_from(&w.columns(m - take, take));
    }
}

/// Lowest `k` eigenpairs by dense diagonalization.
pub fn dense_lowest(mat: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = mat.nrows();
    if mat.ncols() != n {
        return Err(Error::Invalid(format!("matrix is {}×{}, not square", n, mat.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("requested {k} eigenpairs of a {n}-dim matrix")));
    }
    let se = mat.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = idx.iter().take(k).map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, k);
    for (j, &i) in idx.iter().take(k).enumerate() {
        vecs.column_mut(j).copy_from(&se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

fn apply_columns<O: SymOp + ?Sized>(op: &O, q: &DMatrix<f64>, w: &mut DMatrix<f64>, at: usize, take: usize) {
    let n = q.nrows();
    // the column blocks of a DMatrix are contiguous in memory
    let xs = &q.as_slice()[at * n..(at + take) * n];
    let ys = &mut w.as_mut_slice()[at * n..(at + take) * n];
    op.apply_block(xs, ys, take);
}

/// Eigen-decomposition of the leading m×m block, ascending.
fn ritz(h: &DMatrix<f64>, m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let hm = h.view((0, 0), (m, m)).into_owned();
    let se = hm.symmetric_eigen();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<f64>::zeros(m, m);
    for (j, &i) in idx.iter().enumerate() {
        vecs.column_mut(j).copy_from(&se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormalize the first `take` columns of `z` against the basis
/// `q[:, 0..m]` and against each other. Columns that collapse (the
/// Krylov direction is already spanned) are replaced by fresh seeded
/// random vectors so the basis keeps growing.
fn orthonormalize_block(
    z: &mut DMatrix<f64>,
    take: usize,
    q: &DMatrix<f64>,
    m: usize,
    rng_: &mut rand_chacha::ChaCha8Rng,
) -> Result<()> {
    let n = z.nrows();
    let scale = z
        .columns(0, take)
        .column_iter()
        .map(|c| c.norm())
        .fold(f64::MIN_POSITIVE, f64::max);
    let drop_tol = 1e-10 * scale;

    project_out(z, take, q, m);
    for j in 0..take {
        let mut ok = false;
        for attempt in 0..5 {
            for i in 0..j {
                let d = z.column(i).dot(&z.column(j));
                let ci = z.column(i).into_owned();
                z.column_mut(j).axpy(-d, &ci, 1.0);
            }
            let nrm = z.column(j).norm();
            if nrm > drop_tol && attempt < 4 || nrm > f64::MIN_POSITIVE && attempt == 4 {
                z.column_mut(j).scale_mut(1.0 / nrm);
                // one extra pass against the basis keeps orthogonality
                // at working precision even for refilled columns
                if m > 0 {
                    let mut c = DMatrix::<f64>::zeros(m, 1);
                    c.gemm_tr(1.0, &q.columns(0, m), &z.columns(j, 1), 0.0);
                    let mut upd = DMatrix::<f64>::zeros(n, 1);
                    upd.gemm(1.0, &q.columns(0, m), &c, 0.0);
                    let mut col = z.column_mut(j);
                    col -= upd.column(0);
                    let n2 = col.norm();
                    if n2 > f64::MIN_POSITIVE {
                        col.scale_mut(1.0 / n2);
                    }
                }
                ok = true;
                break;
            }
            for v in z.column_mut(j).iter_mut() {
                *v = rng::normal(rng_);
            }
            project_out_single(z, j, q, m);
        }
        if !ok {
            return Err(Error::Numerical(
                "eigensolver could not extend the orthonormal basis".into(),
            ));
        }
    }
    Ok(())
}

/// Two classical Gram–Schmidt passes of `z[:, 0..take]` against `q[:, 0..m]`.
fn project_out(z: &mut DMatrix<f64>, take: usize, q: &DMatrix<f64>, m: usize) {
    if m == 0 {
        return;
    }
    let n = z.nrows();
    for _ in 0..2 {
        let mut c = DMatrix::<f64>::zeros(m, take);
        c.gemm_tr(1.0, &q.columns(0, m), &z.columns(0, take), 0.0);
        let mut upd = DMatrix::<f64>::zeros(n, take);
        upd.gemm(1.0, &q.columns(0, m), &c, 0.0);
        let mut zv = z.columns_mut(0, take);
        zv -= upd;
    }
}

fn project_out_single(z: &mut DMatrix<f64>, j: usize, q: &DMatrix<f64>, m: usize) {
    if m == 0 {
        return;
    }
    let n = z.nrows();
    for _ in 0..2 {
        let mut c = DMatrix::<f64>::zeros(m, 1);
        c.gemm_tr(1.0, &q.columns(0, m), &z.columns(j, 1), 0.0);
        let mut upd = DMatrix::<f64>::zeros(n, 1);
        upd.gemm(1.0, &q.columns(0, m), &c, 0.0);
        let mut col = z.column_mut(j);
        col -= upd.column(0);
    }
}
