//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3, 5, 7, 9, 13), following Higham's 2005 selection
//! of degree by the 1-norm.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Operator;
use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
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
const B13: [f64; 14] = [
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

/// `e^M` for a finite square operator.
pub fn expm(m: &Operator) -> Result<Operator> {
    if !m.is_finite() {
        return Err(Error::InvalidOperator(
            "matrix exponential of non-finite entries".into(),
        ));
    }
    Ok(Operator::wrap(expm_matrix(m.matrix())))
}

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Matrix exponential of a raw square matrix (used for superoperators too).
pub fn expm_matrix(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix exponential needs a square matrix");
    let ident = DMatrix::<Complex64>::identity(n, n);
    let norm = one_norm(a);
    if norm == 0.0 {
        return ident;
    }

    for &(degree, theta) in &THETA[..4] {
        if norm <= theta {
            let (u, v) = pade_low(a, degree);
            return solve_pade(&u, &v);
        }
    }

    let theta13 = THETA[4].1;
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * real(0.5f64.powi(squarings));
    let (u, v) = pade13(&scaled);
    let mut r = solve_pade(&u, &v);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

fn pade_low(a: &DMatrix<Complex64>, degree: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let b: &[f64] = match degree {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => unreachable!("unsupported Padé degree {degree}"),
    };
    let n = a.nrows();
    let a2 = a * a;
    // powers[j] = A^(2j)
    let mut powers = vec![DMatrix::<Complex64>::identity(n, n), a2.clone()];
    while powers.len() <= degree / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::<Complex64>::zeros(n, n);
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    for (j, p) in powers.iter().enumerate() {
        if 2 * j < degree {
            u_inner += p * real(b[2 * j + 1]);
        }
        v += p * real(b[2 * j]);
    }
    (a * u_inner, v)
}

fn pade13(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let b = &B13;
    let n = a.nrows();
    let ident = DMatrix::<Complex64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]);
    let u_inner =
        &a6 * u_hi + &a6 * real(b[7]) + &a4 * real(b[5]) + &a2 * real(b[3]) + &ident * real(b[1]);
    let u = a * u_inner;
    let v_hi = &a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]);
    let v =
        &a6 * v_hi + &a6 * real(b[6]) + &a4 * real(b[4]) + &a2 * real(b[2]) + &ident * real(b[0]);
    (u, v)
}

fn solve_pade(u: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for norms within the degree bound")
}
