use mmrisk::factorization::{factorize, project_minus};
use mmrisk::linalg::Mat;
use mmrisk::model::ValidatedModel;
use mmrisk::overshoot::{overshoot_tails_from, xi_bar_limit};
use mmrisk::spectral::{lundberg_bounds, lundberg_certificate, lundberg_constants, perron_root};
use mmrisk::transforms::{first_jump_transform, resolvent, CumulantDomain};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

type Check = Result<(), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `k(0) = 0`, `k'(0) = m1`, convexity below the root.
pub fn perron(model: &ValidatedModel) -> Check {
    let k0 = perron_root(model, 0.0).map_err(err)?;
    ensure!(k0.abs() < 1e-12, "k(0) = {k0}");
    let dom = CumulantDomain::of(model);
    let h = 1e-6 * dom.r_hi.min(-dom.r_lo).min(1.0);
    let slope = (perron_root(model, h).map_err(err)? - perron_root(model, -h).map_err(err)?) / (2.0 * h);
    let m1 = model.drift();
    ensure!((slope - m1).abs() < 1e-5 * (1.0 + m1.abs()), "k'(0) = {slope}, m1 = {m1}");
    Ok(())
}

/// Root, bound ordering and invariance of `C h` under rescaling `h`.
pub fn lundberg(model: &ValidatedModel) -> Check {
    let cert = lundberg_certificate(model).map_err(err)?;
    ensure!(cert.gamma > 0.0, "gamma = {}", cert.gamma);
    ensure!(perron_root(model, cert.gamma).map_err(err)?.abs() < 1e-10, "k(gamma) != 0");
    ensure!(perron_root(model, cert.gamma / 2.0).map_err(err)? < 0.0, "k not negative below gamma");
    ensure!(0.0 < cert.c_minus && cert.c_minus <= cert.c_plus, "C- = {}, C+ = {}", cert.c_minus, cert.c_plus);
    for scale in [0.25, 3.0] {
        let h = &cert.h * scale;
        let (lo, hi) = lundberg_constants(model, cert.gamma, &h).map_err(err)?;
        for i in 0..model.states() {
            let a = (lo * h[i], hi * h[i]);
            let b = (cert.c_minus * cert.h[i], cert.c_plus * cert.h[i]);
            ensure!(
                (a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10,
                "bounds change under h -> {scale} h"
            );
        }
    }
    Ok(())
}

/// Exact denominator, reassembly, projection idempotence, ruin monotonicity
/// and the Lundberg sandwich.
pub fn ruin(model: &ValidatedModel) -> Check {
    let f = factorize(model).map_err(err)?;
    ensure!(f.g.denominator().integer_coeffs().is_some(), "denominator is not integral");
    ensure!(f.g.denominator().to_f64().leading() > 0.0, "leading coefficient not positive");
    for r in [-0.07, 0.013, 0.21, 0.55] {
        if f.poles.iter().any(|p| (p - r).norm() < 1e-3) {
            continue;
        }
        let direct = f.g.eval(r);
        let pf = f.pf.eval(r);
        let scale = 1.0 + direct.amax();
        ensure!((&direct - &pf).amax() < 1e-7 * scale, "reassembly off at r = {r}");
    }
    let again = project_minus(&f.minus).map_err(err)?;
    ensure!(again == f.minus, "projection is not idempotent");
    ensure!(
        f.minus.poles.len() + f.positive_poles().len() == f.poles.len(),
        "pole on the imaginary axis"
    );

    let cert = lundberg_certificate(model).map_err(err)?;
    for i in 0..model.states() {
        let atom = f.infimum.atoms[i];
        ensure!((0.0..=1.0).contains(&atom), "atom {atom} outside [0, 1]");
        let mut prev = 1.0;
        for k in 0..=40 {
            let u = 0.5 * k as f64;
            let psi = f.psi(i, u);
            ensure!((-1e-12..=1.0).contains(&psi), "psi_{i}({u}) = {psi}");
            ensure!(psi <= prev + 1e-12, "psi_{i} increases at {u}");
            prev = psi;
            let (lb, ub) = lundberg_bounds(&cert, i, u);
            ensure!(lb <= psi + 1e-9 && psi <= ub + 1e-9, "sandwich fails: {lb} <= {psi} <= {ub} at u = {u}");
        }
    }
    Ok(())
}

/// Ladder kernel, depth spectrum and overshoot tail structure.
pub fn overshoot(model: &ValidatedModel) -> Check {
    let m = model.states();
    let xi = xi_bar_limit(model).map_err(err)?;
    for i in 0..m {
        ensure!((xi.h.row(i).sum() - 1.0).abs() < 1e-12, "H row {i} not stochastic");
        ensure!(xi.h.row(i).iter().all(|&x| x >= -1e-14), "H has negative entries");
    }
    let zeros = xi.spectrum.iter().filter(|z| z.norm() == 0.0).count();
    ensure!(zeros == 1, "depth exponent has {zeros} zero eigenvalues");
    let f = factorize(model).map_err(err)?;
    let mut positive = f.positive_poles();
    ensure!(positive.len() == m - 1, "{} positive poles for {m} states", positive.len());
    for z in xi.spectrum.iter().filter(|z| z.norm() > 0.0) {
        ensure!(z.re > 0.0, "eigenvalue {z} not in the right half-plane");
        let hit = positive.iter().position(|p| (p - z).norm() < 1e-6 * (1.0 + z.norm()));
        match hit {
            Some(k) => {
                positive.swap_remove(k);
            }
            None => return Err(format!("eigenvalue {z} is not a positive pole")),
        }
    }

    let t = overshoot_tails_from(model, &xi).map_err(err)?;
    let p0 = t.plus.value(0.0);
    ensure!((&p0 - t.total.value(0.0)).amax() < 1e-10, "total and overshoot differ at 0");
    for i in 0..m {
        let s = p0.row(i).sum();
        ensure!((s - f.psi(i, 0.0)).abs() < 1e-8, "ladder mass {s} != psi_{i}(0) = {}", f.psi(i, 0.0));
    }
    let mut prev: Option<[Mat; 3]> = None;
    for k in 0..=30 {
        let z = 0.2 * k as f64;
        let cur = [t.plus.value(z), t.under.value(z), t.total.value(z)];
        for c in &cur {
            ensure!(c.iter().all(|&x| x >= -1e-10), "negative tail at z = {z}");
        }
        ensure!(
            cur[2].iter().zip(cur[0].iter()).all(|(a, b)| a >= &(b - 1e-10)),
            "total below overshoot at z = {z}"
        );
        ensure!(
            cur[2].iter().zip(cur[1].iter()).all(|(a, b)| a >= &(b - 1e-10)),
            "total below undershoot at z = {z}"
        );
        if let Some(p) = &prev {
            for (a, b) in cur.iter().zip(p.iter()) {
                ensure!(a.iter().zip(b.iter()).all(|(x, y)| x <= &(y + 1e-10)), "tail increases at z = {z}");
            }
        }
        prev = Some(cur);
    }
    Ok(())
}

/// Stochastic and substochastic transform matrices.
pub fn transforms(model: &ValidatedModel) -> Check {
    let m = model.states();
    for s in [0.05, 1.0, 20.0] {
        let p = resolvent(model, s, 0.0).map_err(err)?;
        let f = first_jump_transform(model, s).map_err(err)?;
        for i in 0..m {
            ensure!((p.row(i).sum() - 1.0).abs() < 1e-10, "resolvent row {i} at s = {s}");
            ensure!(f.row(i).sum() < 1.0 && f.iter().all(|&x| x >= 0.0), "first-jump transform at s = {s}");
        }
    }
    let f0 = first_jump_transform(model, 0.0).map_err(err)?;
    for i in 0..m {
        ensure!((f0.row(i).sum() - 1.0).abs() < 1e-12, "first-jump law is defective");
    }
    Ok(())
}

pub fn check_all(model: &ValidatedModel) -> Check {
    perron(model)?;
    lundberg(model)?;
    ruin(model)?;
    overshoot(model)?;
    transforms(model)
}
