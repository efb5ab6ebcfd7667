//! Random models satisfying every structural identity by construction.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qsde_core::{Complex64, Operator, ScaledModel};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) / 2f64.sqrt()
    })
}

pub fn hermitian(rng: &mut impl Rng, d: usize) -> DMatrix<Complex64> {
    let g = gaussian(rng, d, d);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn unitary(rng: &mut impl Rng, d: usize) -> DMatrix<Complex64> {
    let qr = gaussian(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    // fix the phase ambiguity so the result is Haar distributed
    let phases = DMatrix::from_diagonal(&r.diagonal().map(|z| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    }));
    q * phases
}

pub fn random_op(rng: &mut impl Rng, d: usize, scale: f64) -> Operator {
    Operator::new(gaussian(rng, d, d) * Complex64::new(scale, 0.0)).unwrap()
}

/// A model with ground space of dimension `d0`, excited space of dimension
/// `d1` and `n` channels, satisfying the dissipativity split, the structural
/// identities and the ground-space conditions on the limit couplings. With
/// `rotate` the block structure is hidden by a random change of basis.
pub fn random_valid_model(
    rng: &mut impl Rng,
    d0: usize,
    d1: usize,
    n: usize,
    rotate: bool,
) -> ScaledModel {
    let d = d0 + d1;
    let c = |re: f64| Complex64::new(re, 0.0);
    let ci = Complex64::new(0.0, 1.0);
    let p0 = DMatrix::from_fn(d, d, |i, j| if i == j && i < d0 { c(1.0) } else { c(0.0) });
    let p1 = DMatrix::<Complex64>::identity(d, d) - &p0;
    let embed = |block: &DMatrix<Complex64>, r0: usize, c0: usize| {
        let mut m = DMatrix::zeros(d, d);
        m.view_mut((r0, c0), (block.nrows(), block.ncols()))
            .copy_from(block);
        m
    };

    let f: Vec<DMatrix<Complex64>> = (0..n).map(|_| gaussian(rng, d, d) * c(0.6) * &p1).collect();
    let ff = f
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, fi| acc + fi.adjoint() * fi);
    let h11 = embed(&hermitian(rng, d1), d0, d0);
    let y = &p1 * (&ff * c(-0.5) - &h11 * ci) * &p1;
    let y_block = y.view((d0, d0), (d1, d1)).into_owned();
    let y1inv = embed(
        &y_block
            .try_inverse()
            .expect("dissipative block is invertible"),
        d0,
        d0,
    );

    // A maps ground to excited through `a`; the slow couplings' excited
    // components on the ground space are then fixed by P1·L_i = 0.
    let a = embed(&(gaussian(rng, d1, d0) * c(0.7)), d0, 0);
    let g: Vec<DMatrix<Complex64>> = f
        .iter()
        .map(|fi| {
            let ground_block = embed(&(gaussian(rng, d0, d0) * c(0.5)), 0, 0);
            let excited_from_ground = &p1 * fi * &y1inv * &a;
            let free = gaussian(rng, d, d) * c(0.5) * &p1;
            ground_block + excited_from_ground + free
        })
        .collect();
    let fg_ground = f
        .iter()
        .zip(&g)
        .fold(DMatrix::zeros(d, d), |acc, (fi, gi)| {
            acc + fi.adjoint() * gi * &p0
        });
    let a01 = -(a.adjoint()) - fg_ground.adjoint();
    let cross = f
        .iter()
        .zip(&g)
        .fold(DMatrix::zeros(d, d), |acc, (fi, gi)| {
            acc + fi.adjoint() * gi + gi.adjoint() * fi
        });
    let a11 = &p1 * (embed(&hermitian(rng, d1), d0, d0) * -ci - &cross * c(0.5)) * &p1;
    let a_full = &a + &p0 * a01 * &p1 + a11;

    let gg = g
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, gi| acc + gi.adjoint() * gi);
    let b = hermitian(rng, d) * -ci - gg * c(0.5);

    // W = M†·Σ with M_il = δ_il + F_i·Y1inv·F_l† unitary and Σ block diagonal
    let block_grid =
        |u: &DMatrix<Complex64>, dim: usize, offset: usize| -> Vec<Vec<DMatrix<Complex64>>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            embed(
                                &u.view((i * dim, j * dim), (dim, dim)).into_owned(),
                                offset,
                                offset,
                            )
                        })
                        .collect()
                })
                .collect()
        };
    let s0 = block_grid(&unitary(rng, n * d0), d0, 0);
    let s1 = block_grid(&unitary(rng, n * d1), d1, d0);
    let m_adj = |i: usize, l: usize| {
        let mut op = (&f[l] * &y1inv * f[i].adjoint()).adjoint();
        if i == l {
            op += DMatrix::identity(d, d);
        }
        op
    };
    let w: Vec<Vec<DMatrix<Complex64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(DMatrix::zeros(d, d), |acc, l| {
                        acc + m_adj(i, l) * (&s0[l][j] + &s1[l][j])
                    })
                })
                .collect()
        })
        .collect();

    let u = if rotate {
        unitary(rng, d)
    } else {
        DMatrix::identity(d, d)
    };
    let conj = |x: &DMatrix<Complex64>| Operator::new(&u * x * u.adjoint()).unwrap();
    ScaledModel::new(
        conj(&y),
        conj(&a_full),
        conj(&b),
        f.iter().map(conj).collect(),
        g.iter().map(conj).collect(),
        w.iter().map(|row| row.iter().map(conj).collect()).collect(),
    )
    .unwrap()
}
