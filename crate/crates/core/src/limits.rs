//! Continuum-sheet limits: the regularized profile `h_eps(z)`, the `a -> 0`-first
//! `phi~` functions, continuum reflection coefficients, scaling probes and the
//! order-of-limits comparison.
//!
//! Densities: wherever a continuum formula has `a^2`, it means `1/rho`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice_sums::{phi_lattice_regularized, EwaldParams};
use crate::quadrature::{integrate, GkOptions};
use crate::types::{make_incident_wave, Frequency, ModeKind, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitPath {
    EpsFirstThenA,
    AFirstThenEps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    FiniteCommuting,
    FiniteNoncommuting,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathResult {
    pub path: LimitPath,
    pub r: Option<Complex64>,
    /// Fitted exponent of the divergent part; in `a` on the eps-first path, in `eps` on the other.
    pub divergence_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub mode: ModeKind,
    pub path: LimitPath,
    pub outcome: Outcome,
    pub limiting_r: Option<Complex64>,
    pub divergence_exponent: Option<f64>,
    pub paths: Vec<PathResult>,
    /// P mode only: `r` after removing the `eps^{-1/2}` term by hand.
    pub subtracted_r: Option<Complex64>,
}

/// Kinematics and coupling shared by both limit paths. `inverse_coupling` is the
/// per-site value at density `rho`; lattices at other spacings keep `inverse_coupling / rho` fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub omega: Frequency,
    pub k_par: [f64; 2],
    pub rho: f64,
    pub inverse_coupling: Complex64,
}

fn quad_opts() -> GkOptions {
    GkOptions::with_tolerances(1e-15, 1e-13)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must be >= 0, got {eps}")))
    }
}

/// `(-i k3/sqrt(pi)) int_0^inf ds (s+eps)^{-1/2} exp(-z^2/(4(s+eps)) - s(xi^2 + k^2) - 2 eps k^2)`,
/// continued to real `w` as
/// `exp(eps(kappa^2 - 2k^2)) [exp(i k3 |z|) - (kappa/sqrt(pi)) int_0^eps t^{-1/2} exp(-z^2/4t - t kappa^2) dt]`
/// with `kappa = -i k3`.
pub fn h_eps(z: f64, eps: f64, omega: Frequency, k_par: [f64; 2]) -> Result<Complex64> {
    check_eps(eps)?;
    if !z.is_finite() {
        return Err(Error::invalid("z must be finite"));
    }
    let k = make_incident_wave(omega, k_par)?;
    let plane = (Complex64::i() * k.k3 * z.abs()).exp();
    if eps == 0.0 {
        return Ok(plane);
    }
    let kap = -Complex64::i() * k.k3;
    let kap2 = kap * kap;
    let kp2 = k.k_par_sq();
    let z2 = z * z;
    // t = u^2
    let q = integrate(
        |u| {
            if u == 0.0 {
                return if z == 0.0 { Complex64::new(2.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            }
            let u2 = u * u;
            2.0 * (-z2 / (4.0 * u2) - u2 * kap2).exp()
        },
        0.0,
        eps.sqrt(),
        &quad_opts(),
    )?;
    Ok((eps * (kap2 - 2.0 * kp2)).exp() * (plane - kap / PI.sqrt() * q.value))
}

fn expm1(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        let mut term = x;
        let mut sum = x;
        for n in 2..40 {
            term *= x / n as f64;
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        x.exp() - 1.0
    }
}

// int_0^inf ds (s+d)^{-1/2} e^{-s kappa^2} and the (s+d)^{-3/2} analogue, both times e^{-d k^2}
fn proper_time_integrals(d: f64, kap: Complex64, kp2: f64) -> Result<(Complex64, Complex64)> {
    let kap2 = kap * kap;
    let sd = d.sqrt();
    let i1 = integrate(|u| 2.0 * (-u * u * kap2).exp(), 0.0, sd, &quad_opts())?.value;
    let i3 = integrate(
        |u| {
            if u == 0.0 {
                -2.0 * kap2
            } else {
                2.0 * expm1(-u * u * kap2) / (u * u)
            }
        },
        0.0,
        sd,
        &quad_opts(),
    )?
    .value;
    let pref = (d * (kap2 - kp2)).exp();
    let a = pref * (PI.sqrt() / kap - i1);
    let b = pref * (2.0 / sd - 2.0 * PI.sqrt() * kap - i3);
    Ok((a, b))
}

/// The `a -> 0`-first `phi~` at regularization `eps`, with `a^2 = 1/rho`.
///
/// `eps = 0` returns the closed forms; for P it needs `subtract_singular`, which
/// removes `sqrt(2 pi)/(a^2 sqrt(eps))` by hand.
pub fn phi_tilde_a0(
    kind: ModeKind,
    inverse_coupling: Complex64,
    eps: f64,
    a: f64,
    omega: Frequency,
    k: WaveVector,
    subtract_singular: bool,
) -> Result<Complex64> {
    check_eps(eps)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("a must be > 0"));
    }
    if k.k3.norm() == 0.0 {
        return Err(Error::invalid("k3 = 0 (grazing incidence)"));
    }
    let i = Complex64::i();
    let a2 = a * a;
    let w = omega.omega();
    let w2 = w * w;
    let k3 = k.k3;
    let kp2 = k.k_par_sq();
    if eps == 0.0 {
        return match kind {
            ModeKind::Scalar => Ok(inverse_coupling + i / (2.0 * a2 * k3)),
            ModeKind::TE => Ok(inverse_coupling - 2.0 * PI * i * w2 / (a2 * k3)),
            ModeKind::TM => Ok(inverse_coupling - 2.0 * PI * i * k3 / a2),
            ModeKind::P if subtract_singular => Ok(inverse_coupling - 2.0 * PI * i * kp2 / (a2 * k3)),
            ModeKind::P => Err(Error::Divergent(
                "P-mode phi~ diverges as eps^{-1/2} on the a-first path".into(),
            )),
        };
    }
    let kap = -i * k3;
    let (ia, ib) = proper_time_integrals(2.0 * eps, kap, kp2)?;
    let s4p = (4.0 * PI).sqrt();
    Ok(match kind {
        ModeKind::Scalar => inverse_coupling + ia / (a2 * s4p),
        ModeKind::TE => inverse_coupling - s4p * w2 * ia / a2,
        ModeKind::TM => inverse_coupling - s4p * k3 * k3 * ia / a2,
        ModeKind::P => {
            let v = inverse_coupling - s4p / a2 * (w2 * ia - 0.5 * ib);
            if subtract_singular {
                v - (2.0 * PI).sqrt() / (a2 * eps.sqrt())
            } else {
                v
            }
        }
    })
}

/// Specular `r` of a continuum sheet from its `phi~`.
pub fn r_from_phi(kind: ModeKind, phi: Complex64, omega: Frequency, k: WaveVector, rho: f64) -> Result<Complex64> {
    if k.k3.norm() == 0.0 {
        return Err(Error::invalid("k3 = 0 (grazing incidence)"));
    }
    if phi.norm() == 0.0 {
        return Err(Error::Divergent("phi~ vanishes: sheet resonance".into()));
    }
    let p = kind.order_prefactor(omega.omega(), k.k_par_sq(), k.k3);
    Ok(-Complex64::i() * p * rho / (2.0 * k.k3 * phi))
}

/// Closed-form continuum reflection coefficients at density `rho`:
/// scalar `-1/(1 - 2 i k3 (1/g)/rho)`, TE `-2 pi i w^2/(2 pi i w^2 - k3 (1/alpha)/rho)`,
/// TM `-1/(1 - (1/alpha)/(2 pi i k3 rho))`, P `-2 pi i k^2/(2 pi i k^2 - k3 (1/alpha_3)/rho)`.
/// A zero inverse coupling is the strong-coupling limit.
pub fn r_continuum(kind: ModeKind, inverse_coupling: Complex64, omega: Frequency, k: WaveVector, rho: f64) -> Result<Complex64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("density must be > 0"));
    }
    let k3 = k.k3;
    if k3.norm() == 0.0 {
        return Err(Error::invalid("k3 = 0 (grazing incidence)"));
    }
    let i = Complex64::i();
    let w = omega.omega();
    let kp2 = k.k_par_sq();
    let (num, den) = match kind {
        ModeKind::Scalar => (Complex64::new(-1.0, 0.0), 1.0 - 2.0 * i * k3 * inverse_coupling / rho),
        ModeKind::TE => (-2.0 * PI * i * w * w, 2.0 * PI * i * w * w - k3 * inverse_coupling / rho),
        ModeKind::TM => (Complex64::new(-1.0, 0.0), 1.0 - inverse_coupling / (2.0 * PI * i * k3 * rho)),
        ModeKind::P => (-2.0 * PI * i * kp2, 2.0 * PI * i * kp2 - k3 * inverse_coupling / rho),
    };
    if den.norm() == 0.0 {
        if num.norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::Divergent("continuum reflection coefficient has a pole here".into()));
    }
    Ok(num / den)
}

/// Hydrodynamic sheet: the scalar formula with the bare coupling `g`.
pub fn r_hydrodynamic(g: f64, omega: Frequency, k: WaveVector, rho: f64) -> Result<Complex64> {
    if g == 0.0 {
        return Err(Error::invalid("g must be nonzero"));
    }
    r_continuum(ModeKind::Scalar, Complex64::new(1.0 / g, 0.0), omega, k, rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    /// False when `|quantity|` both rises and falls along the data.
    pub monotone: bool,
}

/// Least-squares slope of `log|q|` against `log x`, for decreasing positive `x`.
pub fn scaling_probe(mut quantity: impl FnMut(f64) -> Result<f64>, x_values: &[f64]) -> Result<ScalingFit> {
    if x_values.len() < 3 {
        return Err(Error::invalid("scaling probe needs at least 3 points"));
    }
    if x_values.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid("scaling probe points must be positive"));
    }
    if x_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("scaling probe points must be strictly decreasing"));
    }
    if x_values[0] / x_values[x_values.len() - 1] < 2.0 {
        return Err(Error::invalid("scaling probe points must span at least a factor of 2"));
    }
    let mut lx = Vec::with_capacity(x_values.len());
    let mut ly = Vec::with_capacity(x_values.len());
    let mut raw = Vec::with_capacity(x_values.len());
    for &x in x_values {
        let q = quantity(x)?.abs();
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::invalid(format!("scaling probe quantity is {q} at {x}")));
        }
        raw.push(q);
        lx.push(x.ln());
        ly.push(q.ln());
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let tol = 1e-12;
    let up = raw.windows(2).any(|w| w[1] > w[0] * (1.0 + tol));
    let down = raw.windows(2).any(|w| w[1] < w[0] * (1.0 - tol));
    Ok(ScalingFit {
        exponent: slope,
        intercept: my - slope * mx,
        monotone: !(up && down),
    })
}

/// Value at `x = 0` of the least-squares fit of `values` in the basis `x^{p_j}` (with `p_0 = 0`).
pub fn extrapolate_to_zero(xs: &[f64], values: &[Complex64], powers: &[f64]) -> Result<Complex64> {
    if xs.len() != values.len() || xs.len() < powers.len() || powers.is_empty() {
        return Err(Error::invalid("extrapolation needs at least as many points as basis terms"));
    }
    let m = DMatrix::from_fn(xs.len(), powers.len(), |i, j| Complex64::new(xs[i].powf(powers[j]), 0.0));
    let v = DVector::from_column_slice(values);
    let coef = m
        .svd(true, true)
        .solve(&v, 1e-14)
        .map_err(|e| Error::invalid(format!("extrapolation fit failed: {e}")))?;
    let zero_idx = powers.iter().position(|&p| p == 0.0).ok_or_else(|| Error::invalid("basis needs a constant term"))?;
    Ok(coef[zero_idx])
}

const EPS_SEQUENCE: [f64; 3] = [1e-2, 1e-3, 1e-4];
const A_SEQUENCE: [f64; 3] = [0.1, 0.05, 0.025];
const A_PROBE: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const PATH_AGREEMENT: f64 = 1e-3;

fn a_first_r(kind: ModeKind, p: &LimitParams, k: WaveVector) -> Result<Complex64> {
    let a = 1.0 / p.rho.sqrt();
    let vals: Result<Vec<_>> = EPS_SEQUENCE
        .iter()
        .map(|&e| phi_tilde_a0(kind, p.inverse_coupling, e, a, p.omega, k, false))
        .collect();
    let phi = extrapolate_to_zero(&EPS_SEQUENCE, &vals?, &[0.0, 0.5, 1.0])?;
    r_from_phi(kind, phi, p.omega, k, p.rho)
}

fn lattice_phi(kind: ModeKind, p: &LimitParams, k: WaveVector, a: f64) -> Result<Complex64> {
    let inv = p.inverse_coupling / (p.rho * a * a);
    let params = EwaldParams::auto(a, p.omega, k.k_par, 1e-12)?;
    phi_lattice_regularized(kind, 0.0, p.omega, k.k_par, a, inv, &params)
}

fn eps_first_r(kind: ModeKind, p: &LimitParams, k: WaveVector) -> Result<Complex64> {
    // r_0 = -i P/(2 a^2 k3 phi~); extrapolate a^2 phi~ in powers of a
    let vals: Result<Vec<_>> = A_SEQUENCE
        .iter()
        .map(|&a| lattice_phi(kind, p, k, a).map(|v| v * a * a))
        .collect();
    let sheet = extrapolate_to_zero(&A_SEQUENCE, &vals?, &[0.0, 1.0, 2.0])?;
    r_from_phi(kind, sheet, p.omega, k, 1.0)
}

fn eps_first_exponent(kind: ModeKind, p: &LimitParams, k: WaveVector) -> Result<f64> {
    let fit = scaling_probe(
        |a| {
            let inv = p.inverse_coupling / (p.rho * a * a);
            Ok((lattice_phi(kind, p, k, a)? - inv).norm())
        },
        &A_PROBE,
    )?;
    Ok(fit.exponent)
}

/// Compare the eps-first (lattice, then `a -> 0`) and a-first (continuum, then `eps -> 0`) paths.
pub fn order_of_limits_report(kind: ModeKind, p: LimitParams) -> Result<LimitReport> {
    if !(p.rho > 0.0 && p.rho.is_finite()) {
        return Err(Error::invalid("density must be > 0"));
    }
    let k = make_incident_wave(p.omega, p.k_par)?;
    if k.k3.norm() == 0.0 {
        return Err(Error::invalid("k3 = 0 (grazing incidence)"));
    }
    match kind {
        ModeKind::Scalar | ModeKind::TE => {
            let r_eps = eps_first_r(kind, &p, k)?;
            let r_a = a_first_r(kind, &p, k)?;
            let outcome = if (r_eps - r_a).norm() <= PATH_AGREEMENT {
                Outcome::FiniteCommuting
            } else {
                Outcome::FiniteNoncommuting
            };
            Ok(LimitReport {
                mode: kind,
                path: LimitPath::EpsFirstThenA,
                outcome,
                limiting_r: Some(r_eps),
                divergence_exponent: None,
                paths: vec![
                    PathResult { path: LimitPath::EpsFirstThenA, r: Some(r_eps), divergence_exponent: None },
                    PathResult { path: LimitPath::AFirstThenEps, r: Some(r_a), divergence_exponent: None },
                ],
                subtracted_r: None,
            })
        }
        ModeKind::TM => {
            let exp_a = eps_first_exponent(kind, &p, k)?;
            let r_a = a_first_r(kind, &p, k)?;
            Ok(LimitReport {
                mode: kind,
                path: LimitPath::AFirstThenEps,
                outcome: Outcome::FiniteNoncommuting,
                limiting_r: Some(r_a),
                divergence_exponent: Some(exp_a),
                paths: vec![
                    PathResult { path: LimitPath::EpsFirstThenA, r: None, divergence_exponent: Some(exp_a) },
                    PathResult { path: LimitPath::AFirstThenEps, r: Some(r_a), divergence_exponent: None },
                ],
                subtracted_r: None,
            })
        }
        ModeKind::P => {
            let exp_a = eps_first_exponent(kind, &p, k)?;
            let exp_eps = p_mode_eps_exponent(&p, k)?;
            let a = 1.0 / p.rho.sqrt();
            let finite = phi_tilde_a0(kind, p.inverse_coupling, 0.0, a, p.omega, k, true)?;
            let subtracted = r_from_phi(kind, finite, p.omega, k, p.rho)?;
            Ok(LimitReport {
                mode: kind,
                path: LimitPath::AFirstThenEps,
                outcome: Outcome::Divergent,
                limiting_r: None,
                divergence_exponent: Some(exp_eps),
                paths: vec![
                    PathResult { path: LimitPath::EpsFirstThenA, r: None, divergence_exponent: Some(exp_a) },
                    PathResult { path: LimitPath::AFirstThenEps, r: None, divergence_exponent: Some(exp_eps) },
                ],
                subtracted_r: Some(subtracted),
            })
        }
    }
}

/// Exponent in `eps` of the divergent part of the a-first P-mode `phi~`.
pub fn p_mode_eps_exponent(p: &LimitParams, k: WaveVector) -> Result<f64> {
    let a = 1.0 / p.rho.sqrt();
    let finite = phi_tilde_a0(ModeKind::P, p.inverse_coupling, 0.0, a, p.omega, k, true)?;
    let fit = scaling_probe(
        |e| Ok((phi_tilde_a0(ModeKind::P, p.inverse_coupling, e, a, p.omega, k, false)? - finite).norm()),
        &[1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
    )?;
    Ok(fit.exponent)
}
