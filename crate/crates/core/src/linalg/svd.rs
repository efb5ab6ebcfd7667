//! Singular value decomposition backed by faer.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `m = u · diag(s) · v†`, singular values descending.
pub(crate) struct Svd {
    pub u: DMatrix<Complex64>,
    pub s: Vec<f64>,
    pub v: DMatrix<Complex64>,
}

pub(crate) fn svd(m: &DMatrix<Complex64>) -> Result<Svd> {
    let (r, c) = m.shape();
    let a = Mat::<faer::c64>::from_fn(r, c, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let dec = a.svd().map_err(|_| {
        Error::InvalidOperator("singular value decomposition did not converge".into())
    })?;
    let to_na = |x: faer::MatRef<'_, faer::c64>| {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let z = x[(i, j)];
            Complex64::new(z.re, z.im)
        })
    };
    let s = dec.S().column_vector();
    Ok(Svd {
        u: to_na(dec.U()),
        s: (0..s.nrows()).map(|i| s[i].re).collect(),
        v: to_na(dec.V()),
    })
}
