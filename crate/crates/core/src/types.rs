//! Frequencies, wave vectors, modes and lattice geometry.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square root on the branch with `Im >= 0`; real results have `Re >= 0`.
///
/// A negative real radicand maps to the positive imaginary axis regardless of
/// the sign of its zero imaginary part.
pub fn branch_sqrt(z: Complex64) -> Complex64 {
    let z = Complex64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
    let s = z.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Complex frequency with `Im(omega) >= 0` (c = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    omega: Complex64,
}

impl Frequency {
    pub fn new(omega: Complex64) -> Result<Self> {
        if !omega.re.is_finite() || !omega.im.is_finite() {
            return Err(Error::invalid("omega must be finite"));
        }
        if omega.im < 0.0 {
            return Err(Error::invalid(format!(
                "Im(omega) must be >= 0, got {}",
                omega.im
            )));
        }
        // normalise -0.0 so that branch decisions are stable
        let im = if omega.im == 0.0 { 0.0 } else { omega.im };
        Ok(Frequency {
            omega: Complex64::new(omega.re, im),
        })
    }

    pub fn real(omega: f64) -> Result<Self> {
        Self::new(Complex64::new(omega, 0.0))
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    /// Imaginary-frequency variable `xi = -i omega`.
    pub fn xi(&self) -> Complex64 {
        -Complex64::i() * self.omega
    }

    pub fn is_real(&self) -> bool {
        self.omega.im == 0.0
    }

    /// `omega + i*eta`, used for analytic continuation off the real axis.
    pub fn shifted(&self, eta: f64) -> Result<Self> {
        Self::new(self.omega + Complex64::new(0.0, eta))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    pub k_par: [f64; 2],
    pub k3: Complex64,
}

impl WaveVector {
    pub fn k_par_sq(&self) -> f64 {
        self.k_par[0] * self.k_par[0] + self.k_par[1] * self.k_par[1]
    }

    /// Residual of the on-shell condition, relative to `|omega^2|`.
    pub fn on_shell_residual(&self, omega: Frequency) -> f64 {
        let w2 = omega.omega() * omega.omega();
        let r = (self.k3 * self.k3 + self.k_par_sq() - w2).norm();
        if w2.norm() > 0.0 {
            r / w2.norm()
        } else {
            r
        }
    }

    /// `exp(i k.x)` for the full 3D wave vector.
    pub fn plane_wave(&self, x: [f64; 3]) -> Complex64 {
        let phase = Complex64::new(self.k_par[0] * x[0] + self.k_par[1] * x[1], 0.0) + self.k3 * x[2];
        (Complex64::i() * phase).exp()
    }

    pub fn negated_par(&self) -> Self {
        WaveVector {
            k_par: [-self.k_par[0], -self.k_par[1]],
            k3: self.k3,
        }
    }
}

/// Incident wave with `k3 = sqrt(omega^2 - k_par^2)` on the `Im >= 0` branch.
pub fn make_incident_wave(omega: Frequency, k_par: [f64; 2]) -> Result<WaveVector> {
    if !k_par[0].is_finite() || !k_par[1].is_finite() {
        return Err(Error::invalid("k_par must be finite"));
    }
    let kp2 = k_par[0] * k_par[0] + k_par[1] * k_par[1];
    let w = omega.omega();
    if omega.is_real() && kp2.sqrt() > w.re.abs() {
        return Err(Error::invalid(format!(
            "|k_par| = {} exceeds |omega| = {}: no propagating incident wave",
            kp2.sqrt(),
            w.re.abs()
        )));
    }
    let k3 = branch_sqrt(w * w - kp2);
    Ok(WaveVector { k_par, k3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    Scalar,
    TE,
    TM,
    P,
}

impl ModeKind {
    pub const ALL: [ModeKind; 4] = [ModeKind::Scalar, ModeKind::TE, ModeKind::TM, ModeKind::P];

    pub fn name(&self) -> &'static str {
        match self {
            ModeKind::Scalar => "scalar",
            ModeKind::TE => "TE",
            ModeKind::TM => "TM",
            ModeKind::P => "P",
        }
    }

    pub fn is_em(&self) -> bool {
        !matches!(self, ModeKind::Scalar)
    }

    /// Eigenvalue of the prefactor operator on `exp(i gamma |z| + i q.x_par)`.
    ///
    /// Scalar: 1, TE: `-4 pi w^2`, TM: `-4 pi gamma^2`, P: `-4 pi q^2`.
    pub fn order_prefactor(&self, omega: Complex64, q2: f64, gamma: Complex64) -> Complex64 {
        let w2 = omega * omega;
        match self {
            ModeKind::Scalar => Complex64::new(1.0, 0.0),
            ModeKind::TE => -4.0 * PI * w2,
            ModeKind::TM => -4.0 * PI * gamma * gamma,
            ModeKind::P => Complex64::new(-4.0 * PI * q2, 0.0),
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scalar" => Ok(ModeKind::Scalar),
            "te" => Ok(ModeKind::TE),
            "tm" => Ok(ModeKind::TM),
            "p" => Ok(ModeKind::P),
            other => Err(Error::invalid(format!("unknown mode '{other}'"))),
        }
    }
}

/// A channel with its coupling: `g` for the scalar mode, a polarizability otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub kind: ModeKind,
    coupling: Complex64,
    strong: bool,
}

impl Mode {
    pub fn new(kind: ModeKind, coupling: Complex64) -> Result<Self> {
        if !coupling.re.is_finite() || !coupling.im.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        if coupling == Complex64::new(0.0, 0.0) {
            return Err(Error::invalid("coupling must be nonzero"));
        }
        Ok(Mode {
            kind,
            coupling,
            strong: false,
        })
    }

    /// Infinite coupling; the inverse coupling is exactly zero.
    pub fn strong_coupling(kind: ModeKind) -> Self {
        Mode {
            kind,
            coupling: Complex64::new(f64::INFINITY, 0.0),
            strong: true,
        }
    }

    pub fn coupling(&self) -> Complex64 {
        self.coupling
    }

    pub fn is_strong_coupling(&self) -> bool {
        self.strong
    }

    pub fn inverse_coupling(&self) -> Complex64 {
        if self.strong {
            Complex64::new(0.0, 0.0)
        } else {
            1.0 / self.coupling
        }
    }
}

/// Square lattice `a_n = a n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    a: f64,
}

impl LatticeConfig {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(format!("lattice spacing must be > 0, got {a}")));
        }
        Ok(LatticeConfig { a })
    }

    pub fn from_density(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::invalid(format!("density must be > 0, got {rho}")));
        }
        Self::new(1.0 / rho.sqrt())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn rho(&self) -> f64 {
        1.0 / (self.a * self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incident_wave_examples() {
        let k = make_incident_wave(Frequency::real(1.0).unwrap(), [0.0, 0.0]).unwrap();
        assert_eq!(k.k3, Complex64::new(1.0, 0.0));
        let k = make_incident_wave(Frequency::real(1.0).unwrap(), [0.6, 0.0]).unwrap();
        assert!((k.k3 - Complex64::new(0.8, 0.0)).norm() < 1e-15);

        let w = Frequency::new(Complex64::new(1.0, 0.1)).unwrap();
        let k = make_incident_wave(w, [0.5, 0.0]).unwrap();
        assert!(k.k3.im > 0.0);
        let sq = k.k3 * k.k3;
        let want = w.omega() * w.omega() - 0.25;
        assert!((sq - want).norm() < 1e-15);
        assert!(k.on_shell_residual(w) < 1e-12);
    }

    #[test]
    fn rejects_evanescent_incidence_and_negative_im() {
        assert!(make_incident_wave(Frequency::real(1.0).unwrap(), [1.2, 0.0]).is_err());
        assert!(Frequency::new(Complex64::new(1.0, -1e-3)).is_err());
    }

    #[test]
    fn branch_rule() {
        assert_eq!(branch_sqrt(Complex64::new(-4.0, 0.0)), Complex64::new(0.0, 2.0));
        assert_eq!(branch_sqrt(Complex64::new(-4.0, -0.0)), Complex64::new(0.0, 2.0));
        assert!(branch_sqrt(Complex64::new(-4.0, -1e-3)).im > 0.0);
        assert_eq!(branch_sqrt(Complex64::new(9.0, 0.0)), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn xi_is_minus_i_omega() {
        let w = Frequency::new(Complex64::new(2.0, 0.5)).unwrap();
        assert_eq!(w.xi(), Complex64::new(0.5, -2.0));
    }

    #[test]
    fn modes_and_lattice() {
        assert!(Mode::new(ModeKind::TE, Complex64::new(0.0, 0.0)).is_err());
        let m = Mode::strong_coupling(ModeKind::Scalar);
        assert_eq!(m.inverse_coupling(), Complex64::new(0.0, 0.0));
        let l = LatticeConfig::new(0.5).unwrap();
        assert_eq!(l.rho() * l.a() * l.a(), 1.0);
        assert!(LatticeConfig::new(0.0).is_err());
        let l = LatticeConfig::from_density(4.0).unwrap();
        assert!((l.a() - 0.5).abs() < 1e-16);
        assert_eq!("tm".parse::<ModeKind>().unwrap(), ModeKind::TM);
    }
}
