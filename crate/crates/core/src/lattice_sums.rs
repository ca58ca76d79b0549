//! Lattice sums `J_s(w, k) = sum_{n != 0} exp(i w |a n| + i k.a n) / |a n|^s` on the
//! square lattice, and the regularized lattice `phi~` functions built from them.
//!
//! Two evaluators are provided. [`j_sum_direct`] sums square shells
//! `max(|n0|, |n1|) = m` and needs `Im w > 0`. [`j_sum`] uses an Ewald split of
//! `exp(i w r)/r` for `s = 1` and obtains `s = 2, 3` from
//! `J_2(w) = int_0^inf J_1(w + i y) dy`, `J_3(w) = int_0^inf y J_1(w + i y) dy`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks, GkOptions};
use crate::special::exp_erfc;
use crate::types::{branch_sqrt, Frequency, ModeKind};

/// Relative distance to a Wood anomaly below which evaluation is refused.
pub const WOOD_TOLERANCE: f64 = 1e-8;

// Ewald split is capped so that exp(Re(w^2) t*) stays below e^4.
const SPLIT_EXPONENT_CAP: f64 = 4.0;

// above this damping Im(w) a the direct shell sum is cheaper than Ewald
const DIRECT_DAMPING: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    DirectDamped,
    EwaldSplit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSumResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub method: SumMethod,
    pub terms_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldParams {
    /// Proper-time split point `t*` (length^2).
    pub split_parameter: f64,
    pub real_space_radius: usize,
    pub reciprocal_radius: usize,
    /// Maximum number of subintervals in the `y` quadrature for `s = 2, 3`.
    pub quadrature_nodes: usize,
    /// Allowed truncation error, relative to `max(|J_s|, a^-s)`.
    pub tolerance: f64,
}

impl EwaldParams {
    /// Split at `a^2/(4 pi)` (capped for large `|w| a`) with radii from the tail bounds.
    pub fn auto(a: f64, omega: Frequency, k_par: [f64; 2], tolerance: f64) -> Result<Self> {
        check_a(a)?;
        let w2 = omega.omega() * omega.omega();
        let mut t = a * a / (4.0 * PI);
        if w2.re > 0.0 {
            t = t.min(SPLIT_EXPONENT_CAP / w2.re);
        }
        let kabs = k_par[0].hypot(k_par[1]);
        let scale = 1.0 / a;
        let mut real_space_radius = 1;
        while real_space_tail(a, t, w2.re, real_space_radius) > 0.1 * tolerance * scale {
            real_space_radius += 1;
        }
        let mut reciprocal_radius = 1;
        while reciprocal_tail(a, t, w2.re, kabs, reciprocal_radius) > 0.1 * tolerance * scale {
            reciprocal_radius += 1;
        }
        Ok(EwaldParams {
            split_parameter: t,
            real_space_radius,
            reciprocal_radius,
            quadrature_nodes: 2000,
            tolerance,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.split_parameter > 0.0 && self.split_parameter.is_finite()) {
            return Err(Error::invalid("split_parameter must be > 0"));
        }
        if self.real_space_radius == 0 || self.reciprocal_radius == 0 || self.quadrature_nodes == 0 {
            return Err(Error::invalid("Ewald radii and quadrature_nodes must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        Ok(())
    }
}

fn check_a(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("lattice spacing must be > 0, got {a}")))
    }
}

fn check_s(s_exp: u32) -> Result<()> {
    if (1..=3).contains(&s_exp) {
        Ok(())
    } else {
        Err(Error::invalid(format!("s_exp must be 1, 2 or 3, got {s_exp}")))
    }
}

/// Visit the `8 m` points with `max(|n0|, |n1|) = m`.
pub(crate) fn for_each_in_shell(m: i64, mut f: impl FnMut(i64, i64)) {
    if m == 0 {
        f(0, 0);
        return;
    }
    for j in -m..=m {
        f(j, m);
        f(j, -m);
    }
    for j in -m + 1..m {
        f(m, j);
        f(-m, j);
    }
}

/// Heat kernel `exp(-x^2/4s)/(4 pi s)^{3/2}`.
pub fn heat_kernel(s: f64, x: [f64; 3]) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("heat kernel needs s > 0, got {s}")));
    }
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    Ok((-r2 / (4.0 * s)).exp() / (4.0 * PI * s).powf(1.5))
}

/// `q_n = k_par + 2 pi n / a`.
pub fn reciprocal_vector(k_par: [f64; 2], a: f64, n: [i64; 2]) -> [f64; 2] {
    let g = 2.0 * PI / a;
    [k_par[0] + g * n[0] as f64, k_par[1] + g * n[1] as f64]
}

/// Refuse evaluation within `WOOD_TOLERANCE |w^2|` of any `w^2 = q_n^2`, `max|n| <= radius`.
pub fn check_wood(omega: Frequency, k_par: [f64; 2], a: f64, radius: usize) -> Result<()> {
    let w2 = omega.omega() * omega.omega();
    let limit = WOOD_TOLERANCE * w2.norm();
    for m in 0..=radius as i64 {
        let mut err = None;
        for_each_in_shell(m, |n0, n1| {
            if err.is_some() {
                return;
            }
            let q = reciprocal_vector(k_par, a, [n0, n1]);
            let d = (w2 - (q[0] * q[0] + q[1] * q[1])).norm();
            if d <= limit {
                err = Some(Error::WoodAnomaly { n0, n1, distance: d });
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(())
}

/// Upper bound of the shells beyond `radius` for the direct sum.
fn direct_tail(s_exp: u32, damping: f64, a: f64, radius: usize) -> f64 {
    let m = (radius + 1) as f64;
    let q = (-damping * a).exp();
    8.0 / a.powi(s_exp as i32) * m.powi(1 - s_exp as i32) * (-damping * a * m).exp() / (1.0 - q)
}

/// Brute-force shell sum over `0 < max(|n0|, |n1|) <= radius`; requires `Im w > 0`.
pub fn j_sum_direct(
    s_exp: u32,
    omega: Frequency,
    k_par: [f64; 2],
    a: f64,
    radius: usize,
) -> Result<LatticeSumResult> {
    check_s(s_exp)?;
    check_a(a)?;
    let w = omega.omega();
    if !(w.im > 0.0) {
        return Err(Error::invalid("direct lattice sum needs Im(omega) > 0"));
    }
    if radius == 0 {
        return Err(Error::invalid("radius must be >= 1"));
    }
    let i = Complex64::i();
    let mut total = Complex64::new(0.0, 0.0);
    let mut terms = 0;
    for m in 1..=radius as i64 {
        let mut shell = Complex64::new(0.0, 0.0);
        for_each_in_shell(m, |n0, n1| {
            let x = a * n0 as f64;
            let y = a * n1 as f64;
            let r = x.hypot(y);
            let phase = i * (w * r + k_par[0] * x + k_par[1] * y);
            shell += phase.exp() / r.powi(s_exp as i32);
        });
        terms += 8 * m as usize;
        total += shell;
    }
    Ok(LatticeSumResult {
        value: total,
        abs_error_estimate: direct_tail(s_exp, w.im, a, radius),
        method: SumMethod::DirectDamped,
        terms_used: terms,
    })
}

/// Direct sum with the radius chosen so that the tail bound is below `abs_tol`.
pub fn j_sum_direct_to_tolerance(
    s_exp: u32,
    omega: Frequency,
    k_par: [f64; 2],
    a: f64,
    abs_tol: f64,
) -> Result<LatticeSumResult> {
    check_s(s_exp)?;
    check_a(a)?;
    let damping = omega.omega().im;
    if !(damping > 0.0) {
        return Err(Error::invalid("direct lattice sum needs Im(omega) > 0"));
    }
    let mut radius = 1;
    while direct_tail(s_exp, damping, a, radius) > abs_tol {
        radius += 1;
        if radius > 20_000 {
            return Err(Error::NonConvergence {
                estimate: direct_tail(s_exp, damping, a, radius),
                tolerance: abs_tol,
                context: "direct lattice sum radius".into(),
            });
        }
    }
    j_sum_direct(s_exp, omega, k_par, a, radius)
}

fn real_space_tail(a: f64, t: f64, re_w2: f64, radius: usize) -> f64 {
    let e2 = 1.0 / (4.0 * t);
    let pre = 8.0 / a * (re_w2.max(0.0) * t).exp();
    let mut sum = 0.0;
    for m in radius + 1..radius + 200 {
        let term = pre * (-(a * m as f64).powi(2) * e2).exp();
        sum += term;
        if term < 1e-300 || term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn reciprocal_tail(a: f64, t: f64, re_w2: f64, kabs: f64, radius: usize) -> f64 {
    let g = 2.0 * PI / a;
    let mut sum = 0.0;
    for m in radius + 1..radius + 400 {
        let rho = (g * m as f64 - kabs).max(0.0);
        let gap = rho * rho - re_w2;
        if gap <= 1.0 / (a * a) {
            return f64::INFINITY;
        }
        let term = 2.0 * PI / (a * a) * 8.0 * m as f64 * (-gap * t).exp() / gap.sqrt();
        sum += term;
        if term < 1e-300 || term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Ewald evaluation of `J_1(w)` for any `Im w >= 0`.
fn j1_ewald(w: Complex64, k_par: [f64; 2], a: f64, p: &EwaldParams) -> (Complex64, f64, usize) {
    let i = Complex64::i();
    let t = p.split_parameter;
    let e = 0.5 / t.sqrt();
    let c = i * w / (2.0 * e);
    let w2 = w * w;

    let mut real = Complex64::new(0.0, 0.0);
    for m in 1..=p.real_space_radius as i64 {
        let mut shell = Complex64::new(0.0, 0.0);
        for_each_in_shell(m, |n0, n1| {
            let x = a * n0 as f64;
            let y = a * n1 as f64;
            let r = x.hypot(y);
            let bloch = Complex64::new(0.0, k_par[0] * x + k_par[1] * y).exp();
            let re = e * r;
            let v = exp_erfc(i * w * r, re + c) + exp_erfc(-i * w * r, re - c);
            shell += bloch * v / (2.0 * r);
        });
        real += shell;
    }

    let mut spectral = Complex64::new(0.0, 0.0);
    let sqrt_t = t.sqrt();
    for m in 0..=p.reciprocal_radius as i64 {
        let mut shell = Complex64::new(0.0, 0.0);
        for_each_in_shell(m, |n0, n1| {
            let q = reciprocal_vector(k_par, a, [n0, n1]);
            let gamma = -i * branch_sqrt(w2 - (q[0] * q[0] + q[1] * q[1]));
            shell += exp_erfc(Complex64::new(0.0, 0.0), gamma * sqrt_t) / gamma;
        });
        spectral += shell;
    }
    spectral *= 2.0 * PI / (a * a);

    let self_term = i * w * exp_erfc(Complex64::new(0.0, 0.0), -c) + 2.0 * e / PI.sqrt() * (w2 * t).exp();

    let kabs = k_par[0].hypot(k_par[1]);
    let err = real_space_tail(a, t, w2.re, p.real_space_radius)
        + reciprocal_tail(a, t, w2.re, kabs, p.reciprocal_radius);
    let n_real = (2 * p.real_space_radius + 1).pow(2) - 1;
    let n_rec = (2 * p.reciprocal_radius + 1).pow(2);
    (real + spectral - self_term, err, n_real + n_rec)
}

/// `J_1` at a complex frequency, choosing direct summation for strong damping.
fn j1_any(w: Complex64, k_par: [f64; 2], a: f64, p: &EwaldParams, direct_tol: f64) -> (Complex64, f64, usize) {
    if w.im * a >= DIRECT_DAMPING {
        let omega = Frequency::new(w).expect("Im w > 0");
        let r = j_sum_direct_to_tolerance(1, omega, k_par, a, direct_tol).expect("damped sum converges");
        (r.value, r.abs_error_estimate, r.terms_used)
    } else {
        j1_ewald(w, k_par, a, p)
    }
}

/// Accelerated `J_s` valid for real and complex `w`.
pub fn j_sum(
    s_exp: u32,
    omega: Frequency,
    k_par: [f64; 2],
    a: f64,
    params: &EwaldParams,
) -> Result<LatticeSumResult> {
    check_s(s_exp)?;
    check_a(a)?;
    params.validate()?;
    let w = omega.omega();
    if w.im * a >= DIRECT_DAMPING {
        return j_sum_direct_to_tolerance(s_exp, omega, k_par, a, params.tolerance / a.powi(s_exp as i32));
    }
    check_wood(omega, k_par, a, params.reciprocal_radius)?;
    let scale = a.powi(-(s_exp as i32));

    let (value, estimate, terms) = if s_exp == 1 {
        j1_ewald(w, k_par, a, params)
    } else {
        // J_s(w) = int_0^Y y^{s-2} J_1(w + i y) dy + tail
        let y_max = 45.0 / a;
        let power = (s_exp - 2) as i32;
        let mut max_err: f64 = 0.0;
        let mut terms = 0;
        let opts = GkOptions {
            abs_tol: 1e-3 * params.tolerance * scale,
            rel_tol: 0.1 * params.tolerance,
            max_intervals: params.quadrature_nodes,
        };
        let breaks = [0.0, 0.25 / a, 1.0 / a, DIRECT_DAMPING / a, 12.0 / a, y_max];
        // pointwise errors are integrated against y^{s-2} over [0, y_max]
        let direct_tol = 1e-2 * params.tolerance * scale / y_max.powi(power + 1);
        let q = integrate_with_breaks(
            |y| {
                let (v, e, n) = j1_any(w + Complex64::new(0.0, y), k_par, a, params, direct_tol);
                max_err = max_err.max(e);
                terms += n;
                v * y.powi(power)
            },
            &breaks,
            &opts,
        )?;
        // |J_1(w + i y)| <= (8/a) e^{-y a}/(1 - e^{-y a})
        let ya = y_max * a;
        let tail = 8.0 / a * (-ya).exp() / (1.0 - (-ya).exp()) * if power == 0 { 1.0 / a } else { (ya + 1.0) / (a * a) };
        let estimate = q.abs_error + max_err * y_max.powi(power + 1) + tail;
        (q.value, estimate, terms)
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonConvergence {
            estimate: f64::INFINITY,
            tolerance: params.tolerance * scale,
            context: format!("J_{s_exp} produced a non-finite value"),
        });
    }
    let allowed = params.tolerance * scale.max(value.norm());
    if estimate > allowed {
        return Err(Error::NonConvergence {
            estimate,
            tolerance: allowed,
            context: format!("Ewald J_{s_exp} at the configured radii"),
        });
    }
    Ok(LatticeSumResult {
        value,
        abs_error_estimate: estimate,
        method: SumMethod::EwaldSplit,
        terms_used: terms,
    })
}

/// `j_sum` with [`EwaldParams::auto`] at tolerance `1e-12`.
pub fn j_sum_auto(s_exp: u32, omega: Frequency, k_par: [f64; 2], a: f64) -> Result<LatticeSumResult> {
    let p = EwaldParams::auto(a, omega, k_par, 1e-12)?;
    j_sum(s_exp, omega, k_par, a, &p)
}

/// Lattice part of `phi~` at `eps = 0` for each mode:
/// scalar `J_1/(4 pi)`, TE `-w^2 J_1`, TM `i w J_2 - J_3`, P `-w^2 J_1 - i w J_2 + J_3`.
pub fn lattice_part(
    kind: ModeKind,
    omega: Frequency,
    k_par: [f64; 2],
    a: f64,
    params: &EwaldParams,
) -> Result<Complex64> {
    let w = omega.omega();
    let i = Complex64::i();
    let j = |s| j_sum(s, omega, k_par, a, params).map(|r| r.value);
    Ok(match kind {
        ModeKind::Scalar => j(1)? / (4.0 * PI),
        ModeKind::TE => -w * w * j(1)?,
        ModeKind::TM => i * w * j(2)? - j(3)?,
        ModeKind::P => -w * w * j(1)? - i * w * j(2)? + j(3)?,
    })
}

/// Proper-time weight multiplying `exp(-t xi^2) K_t(r)` in the off-diagonal kernel.
fn mode_weight(kind: ModeKind, xi2: Complex64, t: f64, r: f64) -> Complex64 {
    let four_pi = 4.0 * PI;
    match kind {
        ModeKind::Scalar => Complex64::new(1.0, 0.0),
        ModeKind::TE => four_pi * xi2,
        ModeKind::TM => four_pi * (xi2 + 1.0 / t - r * r / (4.0 * t * t)),
        ModeKind::P => four_pi * (xi2 + 0.5 / t),
    }
}

/// `sum_{n != 0} exp(i k.a_n) int_0^{2 eps} dt exp(-t xi^2) W(t, r_n) K_t(r_n)`.
fn short_time_correction(
    kind: ModeKind,
    eps: f64,
    omega: Frequency,
    k_par: [f64; 2],
    a: f64,
) -> Result<Complex64> {
    let xi2 = omega.xi() * omega.xi();
    let upper = 2.0 * eps;
    // exp(-r^2/(4t)) <= exp(-r^2/(8 eps)) on the interval; drop r^2 > 8 eps * 60
    let r2_max = 8.0 * eps * 60.0;
    let m_max = (r2_max.sqrt() / a).floor() as i64;
    let mut phases: BTreeMap<i64, Complex64> = BTreeMap::new();
    for m in 1..=m_max {
        for_each_in_shell(m, |n0, n1| {
            let n2 = n0 * n0 + n1 * n1;
            if (n2 as f64) * a * a <= r2_max {
                let phase = Complex64::new(0.0, a * (k_par[0] * n0 as f64 + k_par[1] * n1 as f64)).exp();
                *phases.entry(n2).or_insert(Complex64::new(0.0, 0.0)) += phase;
            }
        });
    }
    let opts = GkOptions::with_tolerances(1e-300, 1e-12);
    let mut total = Complex64::new(0.0, 0.0);
    for (n2, phase) in phases {
        if phase.norm() < 1e-15 {
            continue;
        }
        let r = a * (n2 as f64).sqrt();
        let q = integrate(
            |t| {
                if t <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let kern = (-r * r / (4.0 * t)).exp() / (4.0 * PI * t).powf(1.5);
                if kern == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                (-t * xi2).exp() * mode_weight(kind, xi2, t, r) * kern
            },
            0.0,
            upper,
            &opts,
        )?;
        total += phase * q.value;
    }
    Ok(total)
}

/// Heat-kernel regularized lattice `phi~(k)`.
///
/// At `eps = 0` these are the closed forms: scalar `1/g_r + i w/(4 pi) + J_1/(4 pi)`,
/// EM `1/alpha + lattice_part`. For `eps > 0` the off-diagonal proper-time
/// integral is `exp(2 eps xi^2) [lattice_part - short-time correction]`, and the
/// self term contributes its remainder after removing the `eps -> 0` singular
/// part (and, for EM modes, the finite part absorbed into `1/alpha`).
pub fn phi_lattice_regularized(
    kind: ModeKind,
    eps: f64,
    omega: Frequency,
    k_par: [f64; 2],
    a: f64,
    renormalized_inverse_coupling: Complex64,
    params: &EwaldParams,
) -> Result<Complex64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be >= 0, got {eps}")));
    }
    let w = omega.omega();
    let lattice = lattice_part(kind, omega, k_par, a, params)?;
    let scalar_finite = Complex64::i() * w / (4.0 * PI);
    if eps == 0.0 {
        let base = renormalized_inverse_coupling + lattice;
        return Ok(match kind {
            ModeKind::Scalar => base + scalar_finite,
            _ => base,
        });
    }
    let xi = omega.xi();
    let correction = short_time_correction(kind, eps, omega, k_par, a)?;
    let off_diagonal = (2.0 * eps * xi * xi).exp() * (lattice - correction);
    let self_remainder = crate::single_center::self_energy(kind, eps, omega)
        - crate::single_center::self_energy_singular(kind, eps, omega);
    let self_part = match kind {
        ModeKind::Scalar => self_remainder + scalar_finite,
        _ => self_remainder,
    };
    Ok(renormalized_inverse_coupling + self_part + off_diagonal)
}
