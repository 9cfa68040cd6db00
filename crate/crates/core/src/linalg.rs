//! Dense linear-algebra helpers shared by the Gaussian modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Block-diagonal symplectic form with `n_modes` copies of `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Computes `Ω M` by row permutation instead of a dense product.
pub fn omega_left(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 0..m.nrows() / 2 {
        out.row_mut(2 * k).copy_from(&m.row(2 * k + 1));
        out.row_mut(2 * k + 1).copy_from(&(-m.row(2 * k)));
    }
    out
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Largest absolute entry of `M - Mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `S M Sᵀ`, symmetrized to remove rounding asymmetry.
pub fn congruence(s: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let sm = s * m;
    let mut out = &sm * s.transpose();
    symmetrize_in_place(&mut out);
    out
}

pub fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Columns and rows of `m` at `indices`, in the given order.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Direct sum `a ⊕ b`.
pub fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norms for which each diagonal Padé degree reaches unit-roundoff backward error.
#[allow(clippy::excessive_precision)]
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068e0;
const THETA13: f64 = 5.371920351148152e0;

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("matrix exponential needs a square matrix".into()));
    }
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("matrix exponential of non-finite matrix".into()));
    }

    let (u, v, squarings) = if norm <= THETA9 {
        let coeffs: &[f64] = if norm <= THETA3 {
            &PADE3
        } else if norm <= THETA5 {
            &PADE5
        } else if norm <= THETA7 {
            &PADE7
        } else {
            &PADE9
        };
        let a2 = a * a;
        // Even powers I, A², A⁴, ...
        let mut powers = vec![ident.clone(), a2.clone()];
        while powers.len() < coeffs.len().div_ceil(2) {
            let next = powers.last().unwrap() * &a2;
            powers.push(next);
        }
        let mut u_inner = DMatrix::zeros(n, n);
        let mut v = DMatrix::zeros(n, n);
        for (k, p) in powers.iter().enumerate() {
            v += p * coeffs[2 * k];
            if 2 * k + 1 < coeffs.len() {
                u_inner += p * coeffs[2 * k + 1];
            }
        }
        (a * u_inner, v, 0)
    } else {
        let s = (norm / THETA13).log2().ceil().max(0.0) as u32;
        let scaled = a * 2f64.powi(-(s as i32));
        let b = &PADE13;
        let a2 = &scaled * &scaled;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let u_high = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
        let u_inner = u_high + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
        let u = &scaled * u_inner;
        let v_high = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
        let v = v_high + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
        (u, v, s)
    };

    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::DecompositionFailure("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn lapack_dim(m: &DMatrix<f64>) -> Result<i32> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("expected a square matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::SpectralFailure("matrix has non-finite entries".into()));
    }
    i32::try_from(m.nrows()).map_err(|_| Error::InvalidArgument("matrix too large".into()))
}

/// Eigenvalues of a real square matrix via the real Schur form (LAPACK `dgees`).
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    lapack_self_check()?;
    let n = lapack_dim(m)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let nu = n as usize;
    let mut a = m.clone();
    let mut wr = vec![0.0; nu];
    let mut wi = vec![0.0; nu];
    let mut vs = [0.0f64; 1];
    let mut sdim = 0;
    let mut info = 0;
    let lwork = (8 * n).max(1);
    let mut work = vec![0.0; lwork as usize];
    let mut bwork = [0i32; 1];
    // SAFETY: buffers sized per the dgees contract; a is column-major n × n.
    unsafe {
        lapack_sys::dgees_(
            c"N".as_ptr(),
            c"N".as_ptr(),
            None,
            &n,
            a.as_mut_ptr(),
            &n,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            vs.as_mut_ptr(),
            &1,
            work.as_mut_ptr(),
            &lwork,
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::SpectralFailure(format!("dgees failed with info = {info}")));
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Complex Schur factorization `M = Q T Qᴴ` with `T` upper triangular (LAPACK `zgees`).
pub fn complex_schur(m: &DMatrix<f64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    lapack_self_check()?;
    let n = lapack_dim(m)?;
    let nu = n as usize;
    let mut t = to_complex(m);
    let mut q = DMatrix::<Complex64>::zeros(nu, nu);
    if n == 0 {
        return Ok((q, t));
    }
    let mut w = vec![Complex64::new(0.0, 0.0); nu];
    let mut sdim = 0;
    let mut info = 0;
    let lwork = (4 * n).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0; nu];
    let mut bwork = [0i32; 1];
    // SAFETY: Complex64 is repr(C) { re, im }, matching the LAPACK complex layout.
    unsafe {
        lapack_sys::zgees_(
            c"V".as_ptr(),
            c"N".as_ptr(),
            None,
            &n,
            t.as_mut_ptr().cast(),
            &n,
            &mut sdim,
            w.as_mut_ptr().cast(),
            q.as_mut_ptr().cast(),
            &n,
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::SpectralFailure(format!("zgees failed with info = {info}")));
    }
    Ok((q, t))
}

/// Eigen-decomposition of a real symmetric matrix (LAPACK `dsyevd`), eigenvalues ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    lapack_self_check()?;
    dsyevd(m)
}

fn dsyevd(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = lapack_dim(m)?;
    let nu = n as usize;
    let mut a = m.clone();
    let mut w = vec![0.0; nu];
    if n == 0 {
        return Ok((w, a));
    }
    let mut info = 0;
    let mut work_query = [0.0f64; 1];
    let mut iwork_query = [0i32; 1];
    // SAFETY: workspace query with lwork = liwork = −1 writes only the first entries.
    unsafe {
        lapack_sys::dsyevd_(
            c"V".as_ptr(),
            c"L".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &-1,
            iwork_query.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::DecompositionFailure(format!("dsyevd workspace query failed with info = {info}")));
    }
    let lwork = work_query[0] as i32;
    let liwork = iwork_query[0];
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    // SAFETY: buffers sized from the workspace query; a is column-major n × n.
    unsafe {
        lapack_sys::dsyevd_(
            c"V".as_ptr(),
            c"L".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::DecompositionFailure(format!("dsyevd failed with info = {info}")));
    }
    Ok((w, a))
}

/// Reconstruction error of a blocked symmetric eigendecomposition, computed once.
///
/// Some OpenBLAS builds pick miscompiled kernels on newer CPUs; setting
/// `OPENBLAS_CORETYPE=Haswell` avoids them.
pub fn lapack_self_check() -> Result<()> {
    static CHECK: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    let err = *CHECK.get_or_init(|| {
        let n = 160;
        let m = DMatrix::from_fn(n, n, |i, j| ((7 * (i + j)) % 11) as f64 + if i == j { 3.0 } else { 0.0 });
        match dsyevd(&m) {
            Ok((w, v)) => {
                let rec = &v * DMatrix::from_diagonal(&DVector::from_vec(w)) * v.transpose();
                max_abs_diff(&rec, &m)
            }
            Err(_) => f64::INFINITY,
        }
    });
    if err < 1e-9 {
        Ok(())
    } else {
        Err(Error::DecompositionFailure(format!(
            "LAPACK backend failed its self-check (reconstruction error {err:.3e}); try OPENBLAS_CORETYPE=Haswell"
        )))
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn cvec_norm_sqr(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_passes_self_check() {
        lapack_self_check().unwrap();
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let n = 120;
        let m = DMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let (w, v) = symmetric_eigen(&m).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        assert!(max_abs_diff(&(v.transpose() * &v), &DMatrix::identity(n, n)) < 1e-12);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]) * 0.7;
        let r = expm(&g).unwrap();
        assert!((r[(0, 0)] - 0.7f64.cos()).abs() < 1e-15);
        assert!((r[(0, 1)] - 0.7f64.sin()).abs() < 1e-15);
    }
}
