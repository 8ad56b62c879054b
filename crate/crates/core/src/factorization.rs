//! Closed-form ruin probabilities through the rational factorization of the
//! negated process.
//!
//! For the dual `xi_1 = -xi` (positive drift) the matrix
//! `G(r) = r K_dual(r)^{-1} (C - rI)^{-1}` is rational. Its partial-fraction
//! terms with poles in the left half-plane form `[G]^-`, and
//!
//! ```text
//! E_i[e^{r inf xi_1}; inf xi_1 < 0] = ([G(r)]^- R+ e)_i,
//! R+ = ([G]^-(0) + (Lambda - Q)^{-1})^{-1} e pi,
//! ```
//!
//! which inverts to `psi_i(u) = sum_k (A_i^k / rho_k) e^{-rho_k u}`.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};
use crate::model::{dual_spec, DualSpec, ValidatedModel};
use crate::poly::{rationalize, Poly, QPoly, RatFn};
use crate::transforms::p0_limit;

/// Residual bound for polished roots, relative to the largest coefficient.
pub const ROOT_RESIDUAL: f64 = 1e-9;

/// `G(r) = numerators(r) / denominator(r)` with exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMatrix {
    numerators: Vec<Vec<QPoly>>,
    denominator: QPoly,
}

impl PolynomialMatrix {
    pub fn new(numerators: Vec<Vec<QPoly>>, denominator: QPoly) -> Self {
        PolynomialMatrix {
            numerators,
            denominator,
        }
    }

    pub fn dim(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerator(&self, i: usize, j: usize) -> &QPoly {
        &self.numerators[i][j]
    }

    pub fn denominator(&self) -> &QPoly {
        &self.denominator
    }

    /// Double-precision copies, jointly rescaled so the largest
    /// denominator coefficient has unit magnitude.
    pub fn to_f64(&self) -> (Vec<Vec<Poly>>, Poly) {
        let scale = self
            .denominator
            .coeffs()
            .iter()
            .map(|c| c.abs())
            .fold(BigRational::zero(), |a, c| if c > a { c } else { a });
        let inv = if scale.is_zero() {
            BigRational::one()
        } else {
            scale.recip()
        };
        let nums = self
            .numerators
            .iter()
            .map(|row| row.iter().map(|p| p.scale(&inv).to_f64()).collect())
            .collect();
        (nums, self.denominator.scale(&inv).to_f64())
    }

    pub fn eval(&self, r: f64) -> Mat {
        let (nums, den) = self.to_f64();
        let d = den.eval(r);
        let m = self.dim();
        Mat::from_fn(m, m, |i, j| nums[i][j].eval(r) / d)
    }

    fn max_numerator_degree(&self) -> usize {
        self.numerators
            .iter()
            .flatten()
            .map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }
}

/// Fraction-free (Bareiss) determinant over `Q[r]`.
fn determinant(mut a: Vec<Vec<QPoly>>) -> QPoly {
    let n = a.len();
    if n == 0 {
        return QPoly::one();
    }
    let mut negate = false;
    let mut prev = QPoly::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    negate = !negate;
                }
                None => return QPoly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = t.div_exact(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -&d
    } else {
        d
    }
}

fn minor(a: &[Vec<QPoly>], row: usize, col: usize) -> Vec<Vec<QPoly>> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

/// Diagonal entry of the dual cumulant as an exact rational function.
fn dual_diagonal(dual: &DualSpec, i: usize) -> RatFn {
    let law = &dual.laws[i];
    let q = |x: f64| rationalize(x);
    let r = QPoly::linear(BigRational::zero(), BigRational::one());
    let m = dual.states();
    // Conservative by construction: the diagonal is minus the exact sum of
    // the rationalized off-diagonal rates.
    let out: BigRational = (0..m).filter(|&j| j != i).map(|j| q(dual.chain.q[(i, j)])).sum();
    let mut f = RatFn::constant(-out);
    if law.up_rate > 0.0 {
        // lambda (c / (c - r) - 1) = lambda r / (c - r)
        let c = q(law.up_exp_rate);
        let num = r.scale(&q(law.up_rate));
        let den = QPoly::linear(c, -BigRational::one());
        f = f.add(&RatFn::new(num, den));
    }
    if let (Some(mix), true) = (&law.down_law, law.down_rate > 0.0) {
        // lambda (sum w (delta / (delta + r))^n - 1)
        let lam = q(law.down_rate);
        let mut s = RatFn::constant(-lam.clone());
        for t in mix.terms() {
            let delta = q(t.rate);
            let num = QPoly::constant(&lam * q(t.weight) * num_traits::pow(delta.clone(), t.shape as usize));
            let den = QPoly::linear(delta, BigRational::one()).pow(t.shape);
            s = s.add(&RatFn::new(num, den));
        }
        f = f.add(&s);
    }
    f
}

/// Assemble `G(r) = r K_dual(r)^{-1} (C - rI)^{-1}` exactly, with all
/// entries over one reduced denominator `D(r)` normalized to coprime
/// integer coefficients and a positive leading coefficient.
pub fn build_g_rational(dual: &DualSpec) -> Result<PolynomialMatrix> {
    let m = dual.states();
    let pi = linalg::stationary(&dual.chain.q)?;
    let drift = dual.drift(&pi);
    if !(drift > 0.0) {
        return Err(Error::Drift(format!(
            "the negated process must drift upward, got {drift}"
        )));
    }

    let diag: Vec<RatFn> = (0..m).map(|i| dual_diagonal(dual, i)).collect();
    // K = diag(d)^{-1} N with N polynomial.
    let n: Vec<Vec<QPoly>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        diag[i].num.clone()
                    } else {
                        diag[i].den.scale(&rationalize(dual.chain.q[(i, j)]))
                    }
                })
                .collect()
        })
        .collect();
    let det = determinant(n.clone());
    if det.is_zero() {
        return Err(Error::singular("K_dual(r) is singular for every r"));
    }
    let r = QPoly::linear(BigRational::zero(), BigRational::one());

    // Entry (i, j) is r cof_ji den_j / ((c_j - r) det); put everything over
    // det * prod (c - r) for the distinct c, then cancel the common factor.
    let cs: Vec<BigRational> = (0..m).map(|j| rationalize(dual.laws[j].up_exp_rate)).collect();
    let mut distinct: Vec<BigRational> = Vec::new();
    for c in &cs {
        if !distinct.contains(c) {
            distinct.push(c.clone());
        }
    }
    let shift = |c: &BigRational| QPoly::linear(c.clone(), -BigRational::one());
    let d0 = distinct.iter().fold(det, |acc, c| &acc * &shift(c));
    let mut numerators: Vec<Vec<QPoly>> = vec![Vec::with_capacity(m); m];
    for (i, row) in numerators.iter_mut().enumerate() {
        for j in 0..m {
            let cof = determinant(minor(&n, j, i));
            let cof = if (i + j) % 2 == 1 { -&cof } else { cof };
            let others = distinct
                .iter()
                .filter(|c| *c != &cs[j])
                .fold(&r * &diag[j].den, |acc, c| &acc * &shift(c));
            row.push(&cof * &others);
        }
    }
    let mut common = d0.clone();
    for p in numerators.iter().flatten() {
        if common.degree() == 0 {
            break;
        }
        common = common.gcd(p);
    }
    let (d, factor) = d0.div_exact(&common).primitive_integer();
    let numerators: Vec<Vec<QPoly>> = numerators
        .iter()
        .map(|row| row.iter().map(|p| p.div_exact(&common).scale(&factor)).collect())
        .collect();
    let g = PolynomialMatrix::new(numerators, d);
    if g.max_numerator_degree() > g.denominator.degree() {
        return Err(Error::ImproperRational {
            num: g.max_numerator_degree(),
            den: g.denominator.degree(),
        });
    }
    Ok(g)
}

/// Roots of `d` via companion-matrix eigenvalues, Newton-polished and
/// sorted by real part. Complex roots come in exact conjugate pairs.
pub fn find_poles(d: &Poly) -> Result<Vec<Complex64>> {
    let n = d.degree();
    if n == 0 {
        return Err(Error::Argument("constant polynomial has no roots".into()));
    }
    let lc = d.leading();
    let companion = Mat::from_fn(n, n, |i, j| {
        if i == 0 {
            -d.coeffs[n - 1 - j] / lc
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let dd = d.derivative();
    let mut roots: Vec<Complex64> = linalg::eigenvalues(&companion)
        .into_iter()
        .map(|z| newton_polish(d, &dd, z))
        .collect();

    for z in roots.iter_mut() {
        if z.im.abs() < 1e-10 * (1.0 + z.norm()) {
            *z = newton_polish(d, &dd, Complex64::new(z.re, 0.0));
            z.im = 0.0;
        }
    }
    // Force exact conjugate symmetry.
    let mut paired = vec![false; n];
    for a in 0..n {
        if roots[a].im <= 0.0 || paired[a] {
            continue;
        }
        let partner = (0..n)
            .filter(|&b| !paired[b] && b != a && roots[b].im < 0.0)
            .min_by(|&x, &y| {
                (roots[x] - roots[a].conj())
                    .norm()
                    .total_cmp(&(roots[y] - roots[a].conj()).norm())
            });
        if let Some(b) = partner {
            roots[b] = roots[a].conj();
            paired[a] = true;
            paired[b] = true;
        }
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let norm = d.max_abs_coeff();
    for (k, z) in roots.iter().enumerate() {
        // Backward error: |D(z)| relative to sum |a_k| |z|^k.
        let scale = d.coeffs.iter().rev().fold(0.0, |acc, c| acc * z.norm() + c.abs());
        let residual = d.eval_c(*z).norm() / scale;
        if residual > ROOT_RESIDUAL {
            return Err(Error::Convergence(format!(
                "root {z} has residual {residual:e}"
            )));
        }
        let close = roots
            .iter()
            .enumerate()
            .any(|(l, w)| l != k && (w - z).norm() < 1e-7 * (1.0 + z.norm()));
        if close || dd.eval_c(*z).norm() < 1e-10 * norm {
            return Err(Error::MultiplePole {
                root: format!("{z}"),
            });
        }
    }
    Ok(roots)
}

fn newton_polish(p: &Poly, dp: &Poly, mut z: Complex64) -> Complex64 {
    for _ in 0..60 {
        let d = dp.eval_c(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = p.eval_c(z) / d;
        let next = z - step;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        let done = step.norm() <= 1e-16 * z.norm().max(1e-300);
        z = next;
        if done {
            break;
        }
    }
    z
}

/// `G(r) = C0 + sum_l R_l / (r - p_l)` with simple poles.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrixPF {
    pub constant: Mat,
    pub poles: Vec<Complex64>,
    pub residues: Vec<CMat>,
}

impl RationalMatrixPF {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval_c(&self, r: Complex64) -> CMat {
        let mut out = linalg::to_complex(&self.constant);
        for (p, res) in self.poles.iter().zip(&self.residues) {
            out += res / (r - p);
        }
        out
    }

    pub fn eval(&self, r: f64) -> Mat {
        linalg::real_part(&self.eval_c(Complex64::new(r, 0.0)))
    }

    pub fn has_complex_poles(&self) -> bool {
        self.poles.iter().any(|p| p.im != 0.0)
    }
}

/// Residues `g(p_l) / D'(p_l)` and the constant `lc(g) / lc(D)`.
pub fn partial_fractions(g: &PolynomialMatrix, poles: &[Complex64]) -> Result<RationalMatrixPF> {
    let m = g.dim();
    let (nums, den) = g.to_f64();
    let dd = den.degree();
    for p in nums.iter().flatten() {
        if p.degree() > dd {
            return Err(Error::ImproperRational {
                num: p.degree(),
                den: dd,
            });
        }
    }
    if poles.len() != dd {
        return Err(Error::Inconsistent(format!(
            "{} poles supplied for a degree-{dd} denominator",
            poles.len()
        )));
    }
    let dprime = den.derivative();
    let constant = Mat::from_fn(m, m, |i, j| {
        if nums[i][j].degree() == dd && !nums[i][j].coeffs.is_empty() {
            nums[i][j].leading() / den.leading()
        } else {
            0.0
        }
    });
    let residues = poles
        .iter()
        .map(|&p| {
            let dp = dprime.eval_c(p);
            CMat::from_fn(m, m, |i, j| nums[i][j].eval_c(p) / dp)
        })
        .collect();
    Ok(RationalMatrixPF {
        constant,
        poles: poles.to_vec(),
        residues,
    })
}

/// `[G]^-`: keep only the terms whose poles have negative real part.
pub fn project_minus(pf: &RationalMatrixPF) -> Result<RationalMatrixPF> {
    let m = pf.dim();
    let mut poles = Vec::new();
    let mut residues = Vec::new();
    for (p, res) in pf.poles.iter().zip(&pf.residues) {
        if p.re.abs() <= 1e-12 * (1.0 + p.norm()) {
            return Err(Error::ProjectionUndefined {
                pole: format!("{p}"),
            });
        }
        if p.re < 0.0 {
            poles.push(*p);
            residues.push(res.clone());
        }
    }
    Ok(RationalMatrixPF {
        constant: Mat::zeros(m, m),
        poles,
        residues,
    })
}

/// `R+ = ([G]^-(0) + (Lambda - Q)^{-1})^{-1} e pi`.
pub fn ladder_exit_matrix(model: &ValidatedModel, gminus: &RationalMatrixPF) -> Result<Mat> {
    let g0 = gminus.eval(0.0);
    let a = g0 + p0_limit(model)?;
    let inv = linalg::inverse(&a, "G^-(0) + (Lambda - Q)^{-1}")?;
    let m = model.states();
    let e_pi = Mat::from_fn(m, m, |_, j| model.pi()[j]);
    Ok(inv * e_pi)
}

/// `sum_k coef_k e^{-rate_k u}`; complex terms appear in conjugate pairs so
/// the value is real.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarExpMixture {
    pub terms: Vec<(Complex64, Complex64)>,
}

impl ScalarExpMixture {
    pub fn value(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, rate)| (c * (-rate * u).exp()).re)
            .sum()
    }

    /// Real coefficient/rate pairs (complex pairs are reported by real part).
    pub fn real_terms(&self) -> Vec<(f64, f64)> {
        self.terms.iter().map(|(c, r)| (c.re, r.re)).collect()
    }
}

/// Law of the all-time infimum of the negated process, per initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct InfimumDistribution {
    /// `P_i{inf xi_1 = 0}`.
    pub atoms: Vec<f64>,
    /// `x -> P_i{inf xi_1 < -x}` for `x > 0`.
    pub tails: Vec<ScalarExpMixture>,
}

impl InfimumDistribution {
    /// `P_i{inf xi_1 < x}` for `x < 0`.
    pub fn cdf(&self, i: usize, x: f64) -> f64 {
        self.tails[i].value(-x)
    }
}

/// Every intermediate of the ruin factorization.
#[derive(Clone, Debug)]
pub struct RuinFactorization {
    pub dual: DualSpec,
    pub g: PolynomialMatrix,
    pub poles: Vec<Complex64>,
    pub pf: RationalMatrixPF,
    pub minus: RationalMatrixPF,
    pub r_plus: Mat,
    pub infimum: InfimumDistribution,
}

impl RuinFactorization {
    pub fn psi(&self, i: usize, u: f64) -> f64 {
        self.infimum.tails[i].value(u)
    }

    /// Decay rates `rho_k` (negated left-half-plane poles).
    pub fn rates(&self) -> Vec<Complex64> {
        self.minus.poles.iter().map(|p| -p).collect()
    }

    /// Poles of `G` in the right half-plane.
    pub fn positive_poles(&self) -> Vec<Complex64> {
        self.poles.iter().copied().filter(|p| p.re > 0.0).collect()
    }

    pub fn has_complex_poles(&self) -> bool {
        self.pf.has_complex_poles()
    }
}

/// Full pipeline from a validated (negative-drift) model to the ruin mixtures.
pub fn factorize(model: &ValidatedModel) -> Result<RuinFactorization> {
    model.require_no_switching("ruin factorization")?;
    model.require_negative_drift("ruin factorization")?;
    let dual = dual_spec(model)?;
    let g = build_g_rational(&dual)?;
    let (_, den) = g.to_f64();
    let poles = find_poles(&den)?;
    let pf = partial_fractions(&g, &poles)?;
    let minus = project_minus(&pf)?;
    let r_plus = ladder_exit_matrix(model, &minus)?;
    let infimum = infimum_from(model, &minus, &r_plus)?;
    Ok(RuinFactorization {
        dual,
        g,
        poles,
        pf,
        minus,
        r_plus,
        infimum,
    })
}

fn infimum_from(
    model: &ValidatedModel,
    minus: &RationalMatrixPF,
    r_plus: &Mat,
) -> Result<InfimumDistribution> {
    let m = model.states();
    let exit = linalg::to_complex(&(r_plus * Mat::from_element(m, 1, 1.0)));
    let mut tails = vec![ScalarExpMixture { terms: vec![] }; m];
    for (p, res) in minus.poles.iter().zip(&minus.residues) {
        let a = res * &exit;
        let rho = -p;
        for (i, tail) in tails.iter_mut().enumerate() {
            tail.terms.push((a[i] / rho, rho));
        }
    }
    let mut atoms = Vec::with_capacity(m);
    for (i, tail) in tails.iter().enumerate() {
        let atom = 1.0 - tail.value(0.0);
        if !(-1e-6..=1.0 + 1e-6).contains(&atom) {
            return Err(Error::Inconsistent(format!(
                "P_{i}(inf = 0) = {atom} lies outside [0, 1]"
            )));
        }
        atoms.push(atom);
    }
    Ok(InfimumDistribution { atoms, tails })
}

/// Law of the infimum of the negated process (`psi` in disguise).
pub fn infimum_distribution(model: &ValidatedModel) -> Result<InfimumDistribution> {
    Ok(factorize(model)?.infimum)
}

/// `psi_i(u) = P_i{sup xi > u}`.
pub fn ruin_probability(model: &ValidatedModel, i: usize, u: f64) -> Result<f64> {
    if i >= model.states() || !(u >= 0.0) {
        return Err(Error::Argument(format!("need state < {} and u >= 0", model.states())));
    }
    Ok(factorize(model)?.psi(i, u))
}

/// Integer coefficients of the denominator, lowest degree first, when the
/// normalization produced integers (always, for rational inputs).
pub fn integer_denominator(g: &PolynomialMatrix) -> Option<Vec<i64>> {
    g.denominator()
        .integer_coeffs()?
        .into_iter()
        .map(|c| c.to_i64())
        .collect()
}
