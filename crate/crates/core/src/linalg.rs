//! Small dense linear-algebra helpers shared by the analytic modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Condition numbers above this are logged as a warning on inversion.
pub const CONDITION_WARN: f64 = 1e12;

fn norm1(a: &Mat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU inverse with a condition-number warning.
pub fn inverse(a: &Mat, what: &str) -> Result<Mat> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::singular(what))?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::singular(what));
    }
    let cond = norm1(a) * norm1(&inv);
    if cond > CONDITION_WARN {
        log::warn!("{what}: condition number {cond:.3e} exceeds {CONDITION_WARN:e}");
    }
    Ok(inv)
}

pub fn cinverse(a: &CMat, what: &str) -> Result<CMat> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::singular(what))?;
    if inv.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::singular(what));
    }
    Ok(inv)
}

pub fn to_complex(a: &Mat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(a: &CMat) -> Mat {
    a.map(|x| x.re)
}

pub fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&DVector::from_column_slice(v))
}

/// Stationary row vector of an irreducible generator: `pi Q = 0`, `sum pi = 1`.
pub fn stationary(q: &Mat) -> Result<DVector<f64>> {
    let m = q.nrows();
    // Replace one balance equation by the normalization.
    let mut a = q.transpose();
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::singular("stationary distribution"))
}

/// True when the directed graph with an edge `i -> j` for every positive
/// off-diagonal entry is strongly connected.
pub fn strongly_connected(q: &Mat) -> bool {
    let m = q.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; m];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                let w = if forward { q[(i, j)] } else { q[(j, i)] };
                if i != j && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Eigenvalues of a real square matrix, sorted by ascending real part.
pub fn eigenvalues(a: &Mat) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = a.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    ev
}

/// Unit null vector of `a` together with the smallest and second-smallest
/// singular values (the latter measures how simple the null space is).
pub fn null_vector(a: &Mat) -> (DVector<f64>, f64, f64) {
    let m = a.nrows();
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = svd.singular_values[idx[0]];
    let second = if m > 1 {
        svd.singular_values[idx[1]]
    } else {
        f64::INFINITY
    };
    let v = vt.row(idx[0]).transpose();
    (v, smallest, second)
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}
