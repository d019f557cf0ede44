//! Minimal dense Hermitian eigensolver on top of LAPACK's divide-and-conquer
//! routine, plus the few matrix helpers the rest of the crate needs.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Eigendecomposition of a Hermitian matrix.
///
/// `vh` stores the adjoint of the eigenvector matrix: row k holds the
/// conjugated components of eigenvector k. That is the layout LAPACK hands
/// back when a row-major Hermitian buffer is passed as column-major (the
/// solver then sees the conjugate matrix, whose eigenvectors are the
/// conjugates of ours), so no transposition pass is needed.
pub struct Spectrum {
    pub eigenvalues: Array1<f64>,
    vh: Array2<C64>,
}

impl Spectrum {
    /// Diagonalize a Hermitian matrix. The caller is responsible for
    /// Hermiticity; see [`hermitian_deviation`].
    pub fn eigh(matrix: ArrayView2<C64>) -> Result<Self> {
        let n = matrix.nrows();
        assert_eq!(n, matrix.ncols(), "eigh needs a square matrix");
        let mut buf: Vec<C64> = matrix.iter().cloned().collect();
        let mut w = vec![0.0f64; n];
        let ni = n as i32;
        let mut info = 0i32;
        let jobz = b'V' as std::os::raw::c_char;
        let uplo = b'L' as std::os::raw::c_char;
        unsafe {
            // workspace query
            let (mut wq, mut rwq, mut iwq) = (C64::new(0.0, 0.0), 0.0f64, 0i32);
            let m1 = -1i32;
            lapack_sys::zheevd_(
                &jobz,
                &uplo,
                &ni,
                buf.as_mut_ptr() as *mut _,
                &ni,
                w.as_mut_ptr(),
                &mut wq as *mut _ as *mut _,
                &m1,
                &mut rwq,
                &m1,
                &mut iwq,
                &m1,
                &mut info,
            );
            if info != 0 {
                return Err(Error::LapackFailure { info });
            }
            let lwork = wq.re as i32;
            let lrwork = rwq as i32;
            let liwork = iwq;
            let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
            let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
            let mut iwork = vec![0i32; liwork.max(1) as usize];
            lapack_sys::zheevd_(
                &jobz,
                &uplo,
                &ni,
                buf.as_mut_ptr() as *mut _,
                &ni,
                w.as_mut_ptr(),
                work.as_mut_ptr() as *mut _,
                &lwork,
                rwork.as_mut_ptr(),
                &lrwork,
                iwork.as_mut_ptr(),
                &liwork,
                &mut info,
            );
            if info != 0 {
                return Err(Error::LapackFailure { info });
            }
        }
        Ok(Spectrum {
            eigenvalues: Array1::from_vec(w),
            vh: Array2::from_shape_vec((n, n), buf).expect("square buffer"),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coordinates of `amp` in the eigenbasis: c_k = <v_k | amp>.
    pub fn coords(&self, amp: ArrayView1<C64>) -> Array1<C64> {
        self.vh.dot(&amp)
    }

    /// Eigenvector k in the original basis.
    pub fn eigenvector(&self, k: usize) -> Array1<C64> {
        self.vh.row(k).mapv(|z| z.conj())
    }

    /// Apply exp(-i H t) to an amplitude vector.
    pub fn evolve(&self, amp: ArrayView1<C64>, t: f64) -> Array1<C64> {
        let mut coords = self.coords(amp);
        for (c, &w) in coords.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= C64::from_polar(1.0, -w * t);
        }
        self.synthesize(&coords)
    }

    /// Reassemble a vector from eigenbasis coordinates: sum_k c_k v_k.
    pub fn synthesize(&self, coords: &Array1<C64>) -> Array1<C64> {
        let n = self.dim();
        let mut out = Array1::<C64>::zeros(n);
        for (k, row) in self.vh.rows().into_iter().enumerate() {
            let c = coords[k];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(row.iter()) {
                *o += v.conj() * c;
            }
        }
        out
    }

    /// Matrix elements of `m` in the eigenbasis: (V^H m V)_{kl}.
    pub fn transform_operator(&self, m: ArrayView2<C64>) -> Array2<C64> {
        let n = self.dim();
        let v = Array2::from_shape_fn((n, n), |(i, k)| self.vh[(k, i)].conj());
        self.vh.dot(&m).dot(&v)
    }

    /// Columns sqrt(w_k) v_k for eigenvalues w_k > floor (negatives dropped),
    /// so the original matrix equals S S^H up to the truncated tail.
    pub fn sqrt_factor(&self, floor: f64) -> Array2<C64> {
        let n = self.dim();
        let kept: Vec<usize> = (0..n).filter(|&k| self.eigenvalues[k] > floor).collect();
        let mut s = Array2::<C64>::zeros((n, kept.len()));
        for (col, &k) in kept.iter().enumerate() {
            let root = self.eigenvalues[k].sqrt();
            for i in 0..n {
                s[(i, col)] = self.vh[(k, i)].conj() * root;
            }
        }
        s
    }
}

/// Dense exp(-i H t) for small Hermitian matrices.
pub fn expi_hermitian(h: ArrayView2<C64>, t: f64) -> Result<Array2<C64>> {
    let spec = Spectrum::eigh(h)?;
    let n = spec.dim();
    let mut u = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let phase = C64::from_polar(1.0, -spec.eigenvalues[k] * t);
        let row = spec.vh.row(k);
        for i in 0..n {
            let vi = row[i].conj() * phase;
            for j in 0..n {
                u[(i, j)] += vi * row[j];
            }
        }
    }
    Ok(u)
}

/// Largest absolute deviation from Hermiticity.
pub fn hermitian_deviation(m: ArrayView2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest absolute entry of U^H U - I.
pub fn unitarity_deviation(u: ArrayView2<C64>) -> f64 {
    let n = u.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += u[(k, i)].conj() * u[(k, j)];
            }
            if i == j {
                s -= 1.0;
            }
            dev = dev.max(s.norm());
        }
    }
    dev
}

/// Singular values of a (possibly rectangular) complex matrix, via the
/// eigenvalues of M^H M. Accurate enough for the small sector matrices used
/// in the fidelity computations, where values below 1e-12 of the largest are
/// discarded anyway.
pub fn singular_values(m: ArrayView2<C64>) -> Result<Vec<f64>> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut gram = Array2::<C64>::zeros((cols, cols));
    for i in 0..cols {
        for j in 0..cols {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..rows {
                s += m[(k, i)].conj() * m[(k, j)];
            }
            gram[(i, j)] = s;
        }
    }
    let spec = Spectrum::eigh(gram.view())?;
    Ok(spec
        .eigenvalues
        .iter()
        .map(|&w| w.max(0.0).sqrt())
        .collect())
}
