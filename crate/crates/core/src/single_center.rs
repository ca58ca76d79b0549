//! A single zero-range scatterer: amplitude, bound state, renormalization and fields.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_to_infinity, integrate_with_breaks, GkOptions};
use crate::special::exp_erfc;
use crate::types::{Frequency, Mode, ModeKind, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionParameter {
    pub alpha_se: f64,
}

impl ExtensionParameter {
    pub fn new(alpha_se: f64) -> Result<Self> {
        if !alpha_se.is_finite() {
            return Err(Error::invalid("alpha_SE must be finite"));
        }
        Ok(ExtensionParameter { alpha_se })
    }

    /// Extension parameter of a scalar coupling: `alpha_SE = -4 pi / g_r`.
    pub fn from_inverse_coupling(inverse_gr: f64) -> Result<Self> {
        Self::new(-4.0 * PI * inverse_gr)
    }

    /// Inverse scalar coupling `1/g_r = -alpha_SE / (4 pi)`.
    pub fn inverse_coupling(&self) -> f64 {
        -self.alpha_se / (4.0 * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenormScheme {
    FieldTheoretic,
    /// Also absorbs the radiation-reaction `i w^3` terms into `1/alpha`.
    Electrostatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub kappa: f64,
    pub normalization: f64,
}

/// `f = 1/(alpha_SE - i w)`.
pub fn scattering_amplitude_sae(alpha: ExtensionParameter, omega: Frequency) -> Result<Complex64> {
    let w = omega.omega();
    let den = alpha.alpha_se - Complex64::i() * w;
    if den.norm() <= 1e-14 * alpha.alpha_se.abs().max(1.0) {
        return Err(Error::Pole {
            omega_re: w.re,
            omega_im: w.im,
        });
    }
    Ok(1.0 / den)
}

/// Bound state `exp(-kappa r)/r` for `alpha_SE < 0`.
pub fn bound_state(alpha: ExtensionParameter) -> Option<BoundState> {
    if alpha.alpha_se < 0.0 {
        let kappa = -alpha.alpha_se;
        Some(BoundState {
            kappa,
            normalization: (kappa / (2.0 * PI)).sqrt(),
        })
    } else {
        None
    }
}

/// s-wave scattering length `a_0 = -1/alpha_SE`.
pub fn scattering_length(alpha: ExtensionParameter) -> Result<f64> {
    if alpha.alpha_se == 0.0 {
        return Err(Error::invalid("alpha_SE = 0: infinite scattering length"));
    }
    Ok(-1.0 / alpha.alpha_se)
}

/// Boundary-condition parameters `(mu, theta) = (1/eps, 2 atan(eps alpha_SE - 1))`.
pub fn sae_boundary_params(alpha: ExtensionParameter, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
    }
    Ok((1.0 / eps, 2.0 * (eps * alpha.alpha_se - 1.0).atan()))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must be > 0, got {eps}")))
    }
}

/// Counterterm added to the bare inverse coupling at regularization `eps`.
pub fn counterterm(kind: ModeKind, eps: f64, omega: Frequency) -> Complex64 {
    let w2 = omega.omega() * omega.omega();
    let s2p = (2.0 * PI).sqrt();
    let inv_sqrt = 1.0 / (2.0 * PI * eps).sqrt();
    let ep32 = eps.powf(-1.5);
    match kind {
        ModeKind::Scalar => Complex64::new((2.0 * PI).powf(-1.5) / eps.sqrt(), 0.0),
        ModeKind::TE => -w2 * inv_sqrt,
        ModeKind::TM => ep32 / (6.0 * s2p) - w2 / 3.0 * inv_sqrt,
        ModeKind::P => ep32 / (12.0 * s2p) - w2 / 6.0 * inv_sqrt,
    }
}

/// Finite self term that the electrostatic scheme moves into the coupling.
pub fn radiation_term(kind: ModeKind, omega: Frequency) -> Complex64 {
    let w = omega.omega();
    let i = Complex64::i();
    match kind {
        ModeKind::Scalar => i * w / (4.0 * PI),
        ModeKind::TE => i * w * w * w,
        ModeKind::TM => i * w * w * w / 3.0,
        ModeKind::P => 2.0 * i * w * w * w / 3.0,
    }
}

/// Renormalized inverse coupling `1/g_ren` or `1/alpha_ren`.
pub fn renormalize_coupling(
    mode: Mode,
    eps: f64,
    scheme: RenormScheme,
    omega: Frequency,
) -> Result<Complex64> {
    check_eps(eps)?;
    let mut inv = mode.inverse_coupling() + counterterm(mode.kind, eps, omega);
    if scheme == RenormScheme::Electrostatic {
        inv += radiation_term(mode.kind, omega);
    }
    Ok(inv)
}

/// Single-center `phi_0` in terms of the renormalized inverse coupling.
pub fn phi0(
    kind: ModeKind,
    inverse_renormalized_coupling: Complex64,
    omega: Frequency,
    scheme: RenormScheme,
) -> Complex64 {
    match scheme {
        RenormScheme::FieldTheoretic => inverse_renormalized_coupling + radiation_term(kind, omega),
        RenormScheme::Electrostatic => inverse_renormalized_coupling,
    }
}

/// Self term `int_0^inf ds exp(-s xi^2) W(s + 2 eps) K_{s+2eps}(0)` in closed form
/// (analytically continued to real `w`).
pub fn self_energy(kind: ModeKind, eps: f64, omega: Frequency) -> Complex64 {
    let xi = omega.xi();
    let xi2 = xi * xi;
    let d = 2.0 * eps;
    let sd = d.sqrt();
    // exp(d xi^2) int_d^inf t^{-3/2} exp(-t xi^2) dt and the t^{-5/2} analogue
    let x = 2.0 / sd - 2.0 * PI.sqrt() * xi * exp_erfc(d * xi2, xi * sd);
    let y = 2.0 / (3.0 * d * sd) - 2.0 * xi2 / 3.0 * x;
    let inv_sqrt_4pi = 1.0 / (4.0 * PI).sqrt();
    match kind {
        ModeKind::Scalar => x * (4.0 * PI).powf(-1.5),
        ModeKind::TE => inv_sqrt_4pi * xi2 * x,
        ModeKind::TM => inv_sqrt_4pi * (xi2 * x + y),
        ModeKind::P => inv_sqrt_4pi * (xi2 * x + 0.5 * y),
    }
}

/// Small-`eps` singular part of [`self_energy`]; for EM modes the finite
/// `-xi^3 {1, 1/3, 2/3}` is included.
pub fn self_energy_singular(kind: ModeKind, eps: f64, omega: Frequency) -> Complex64 {
    let xi = omega.xi();
    let xi2 = xi * xi;
    let xi3 = xi2 * xi;
    let d = 2.0 * eps;
    let sd = d.sqrt();
    let inv_sqrt_4pi = 1.0 / (4.0 * PI).sqrt();
    match kind {
        ModeKind::Scalar => Complex64::new((4.0 * PI).powf(-1.5) * 2.0 / sd, 0.0),
        ModeKind::TE => inv_sqrt_4pi * xi2 * 2.0 / sd - xi3,
        ModeKind::TM => inv_sqrt_4pi * (2.0 / (3.0 * d * sd) + xi2 / 3.0 * 2.0 / sd) - xi3 / 3.0,
        ModeKind::P => inv_sqrt_4pi * (1.0 / (3.0 * d * sd) + 2.0 * xi2 / 3.0 * 2.0 / sd) - 2.0 * xi3 / 3.0,
    }
}

/// The same self term by direct quadrature at real imaginary-frequency `xi > 0`.
pub fn self_energy_quadrature(kind: ModeKind, eps: f64, xi: f64) -> Result<Complex64> {
    check_eps(eps)?;
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::invalid("xi must be > 0"));
    }
    let xi2 = xi * xi;
    let integrand = move |s: f64| {
        let t = s + 2.0 * eps;
        let k = (4.0 * PI * t).powf(-1.5);
        let w = match kind {
            ModeKind::Scalar => 1.0,
            ModeKind::TE => 4.0 * PI * xi2,
            ModeKind::TM => 4.0 * PI * (xi2 + 1.0 / t),
            ModeKind::P => 4.0 * PI * (xi2 + 0.5 / t),
        };
        Complex64::new((-s * xi2).exp() * w * k, 0.0)
    };
    let s_max = 50.0 / xi2;
    let mut breaks = vec![0.0];
    let mut p = 2.0 * eps;
    while p < s_max {
        breaks.push(p);
        p *= 4.0;
    }
    breaks.push(s_max);
    let opts = GkOptions::with_tolerances(1e-300, 1e-13);
    let head = integrate_with_breaks(integrand, &breaks, &opts)?;
    let tail = integrate_to_infinity(integrand, s_max, 1.0 / xi2, &opts)?;
    Ok(head.value + tail.value)
}

/// `u = exp(i w r)/r` with `u'` and `u''`.
fn radial_wave(w: Complex64, r: f64) -> (Complex64, Complex64, Complex64) {
    let i = Complex64::i();
    let u = (i * w * r).exp() / r;
    let g = i * w - 1.0 / r;
    let du = u * g;
    let d2u = u * (g * g + 1.0 / (r * r));
    (u, du, d2u)
}

/// Scattered wave of one center: `P[exp(i w r)/r]` with `P` the mode prefactor
/// divided by `-4 pi` (identity for the scalar mode).
pub fn scattered_wave(kind: ModeKind, omega: Frequency, x: [f64; 3]) -> Result<Complex64> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if !(r > 0.0) {
        return Err(Error::invalid("field evaluated at the scatterer position"));
    }
    let w = omega.omega();
    let (u, du, d2u) = radial_wave(w, r);
    let radial = d2u - du / r;
    Ok(match kind {
        ModeKind::Scalar => u,
        ModeKind::TE => w * w * u,
        ModeKind::TM => {
            let rho2 = x[0] * x[0] + x[1] * x[1];
            w * w * u + rho2 / (r * r) * radial + 2.0 * du / r
        }
        ModeKind::P => w * w * u + x[2] * x[2] / (r * r) * radial + du / r,
    })
}

/// Total single-center field of the given mode.
///
/// Scalar: `e^{ikx} - u/(4 pi phi0)`; EM: `e^{ikx} + P'[u]/phi0` with
/// `P' = w^2, w^2 + Lap_par, w^2 + d_z^2`. An infinite `phi0` means no coupling.
pub fn single_center_field(
    kind: ModeKind,
    phi0: Complex64,
    x: [f64; 3],
    k: WaveVector,
    omega: Frequency,
) -> Result<Complex64> {
    let scat = scattered_wave(kind, omega, x)?;
    let inv = if phi0.re.is_infinite() || phi0.im.is_infinite() {
        Complex64::new(0.0, 0.0)
    } else {
        1.0 / phi0
    };
    let coef = match kind {
        ModeKind::Scalar => -inv / (4.0 * PI),
        _ => inv,
    };
    Ok(k.plane_wave(x) + coef * scat)
}
