//! Arbitrary finite arrangements of identical zero-range scatterers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::single_center::ExtensionParameter;
use crate::types::{Frequency, WaveVector};

/// Condition numbers above this are treated as an intrinsic mode.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct MultiCenterSystem {
    pub centers: Vec<[f64; 3]>,
    pub alpha_se: ExtensionParameter,
    pub omega: Frequency,
    pub k: WaveVector,
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
}

#[derive(Debug, Clone)]
pub struct AmplitudeSolution {
    pub f: DVector<Complex64>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn kernel(omega: Complex64, d: f64) -> Complex64 {
    -(Complex64::i() * omega * d).exp() / d
}

fn system_matrix(centers: &[[f64; 3]], alpha: ExtensionParameter, omega: Frequency) -> Result<DMatrix<Complex64>> {
    let n = centers.len();
    if n == 0 {
        return Err(Error::invalid("at least one center required"));
    }
    let w = omega.omega();
    let diag = alpha.alpha_se - Complex64::i() * w;
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        m[(i, i)] = diag;
        for j in i + 1..n {
            let d = distance(centers[i], centers[j]);
            if d == 0.0 {
                return Err(Error::invalid(format!("centers {i} and {j} coincide")));
            }
            let v = kernel(w, d);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

pub fn assemble(
    centers: &[[f64; 3]],
    alpha_se: ExtensionParameter,
    omega: Frequency,
    k: WaveVector,
) -> Result<MultiCenterSystem> {
    if centers.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("center coordinates must be finite"));
    }
    let matrix = system_matrix(centers, alpha_se, omega)?;
    let rhs = DVector::from_iterator(centers.len(), centers.iter().map(|&c| k.plane_wave(c)));
    Ok(MultiCenterSystem {
        centers: centers.to_vec(),
        alpha_se,
        omega,
        k,
        matrix,
        rhs,
    })
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn sign(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / r
    }
}

// Hager/Higham estimate of ||A^{-1}||_1 for symmetric A, so A^{-H} y = conj(A^{-1} conj(y)).
fn inverse_one_norm(solve: impl Fn(&DVector<Complex64>) -> Option<DVector<Complex64>>, n: usize) -> Option<f64> {
    let mut x = DVector::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    for _ in 0..5 {
        let y = solve(&x)?;
        let new_est = y.iter().map(|z| z.norm()).sum::<f64>();
        let s = y.map(sign);
        let z = solve(&s.map(|v| v.conj()))?.map(|v| v.conj());
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.norm()))
            .fold((0, -1.0), |acc, p| if p.1 > acc.1 { p } else { acc });
        let zx: Complex64 = z.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
        if new_est <= est || zmax <= zx.re {
            return Some(new_est.max(est));
        }
        est = new_est;
        x = DVector::from_element(n, Complex64::new(0.0, 0.0));
        x[jmax] = Complex64::new(1.0, 0.0);
    }
    Some(est)
}

pub fn solve(system: &MultiCenterSystem) -> Result<AmplitudeSolution> {
    let n = system.rhs.len();
    let lu = system.matrix.clone().lu();
    let near_singular = |condition| Error::NearSingular { condition };
    let f = lu.solve(&system.rhs).ok_or(near_singular(f64::INFINITY))?;
    let inv_norm = inverse_one_norm(|b| lu.solve(b), n).ok_or(near_singular(f64::INFINITY))?;
    let condition = one_norm(&system.matrix) * inv_norm;
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(near_singular(condition));
    }
    let residual_norm = (&system.matrix * &f - &system.rhs).norm();
    Ok(AmplitudeSolution {
        f,
        residual_norm,
        condition_estimate: condition,
    })
}

/// `e^{ik.x} + sum_n f_n e^{i w |x - a_n|}/|x - a_n|`.
pub fn field_at(
    centers: &[[f64; 3]],
    solution: &AmplitudeSolution,
    x: [f64; 3],
    k: WaveVector,
    omega: Frequency,
) -> Result<Complex64> {
    if solution.f.len() != centers.len() {
        return Err(Error::invalid("amplitude count does not match centers"));
    }
    let w = omega.omega();
    let mut sum = k.plane_wave(x);
    for (c, f) in centers.iter().zip(solution.f.iter()) {
        let d = distance(x, *c);
        if d == 0.0 {
            return Err(Error::invalid("field evaluated at a center"));
        }
        sum -= f * kernel(w, d);
    }
    Ok(sum)
}

/// Smallest singular value of the system matrix along a frequency scan.
pub fn detect_intrinsic_modes(
    centers: &[[f64; 3]],
    alpha_se: ExtensionParameter,
    omega_scan: &[Frequency],
) -> Result<Vec<(Frequency, f64)>> {
    omega_scan
        .iter()
        .map(|&w| {
            let m = system_matrix(centers, alpha_se, w)?;
            let s = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
            Ok((w, s))
        })
        .collect()
}

/// Interior local minima of a scan with value below `threshold`.
pub fn scan_minima(scan: &[(Frequency, f64)], threshold: f64) -> Vec<(Frequency, f64)> {
    scan.windows(3)
        .filter(|w| w[1].1 < w[0].1 && w[1].1 <= w[2].1 && w[1].1 < threshold)
        .map(|w| w[1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane_lattice::f0_bloch;
    use crate::lattice_sums::EwaldParams;
    use crate::single_center::{scattering_amplitude_sae, single_center_field};
    use crate::types::{make_incident_wave, ModeKind};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn freq(re: f64, im: f64) -> Frequency {
        Frequency::new(c(re, im)).unwrap()
    }

    fn alpha(v: f64) -> ExtensionParameter {
        ExtensionParameter::new(v).unwrap()
    }

    #[test]
    fn assembly_entries() {
        let w = freq(0.8, 0.1);
        let k = make_incident_wave(w, [0.3, 0.0]).unwrap();
        let centers = [[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [3.0, 0.0, 0.0]];
        let s = assemble(&centers, alpha(0.5), w, k).unwrap();
        let diag = c(0.5, 0.0) - Complex64::i() * w.omega();
        for i in 0..3 {
            assert_eq!(s.matrix[(i, i)], diag);
        }
        let wv = w.omega();
        let e15 = -(Complex64::i() * wv * 1.5).exp() / 1.5;
        let e30 = -(Complex64::i() * wv * 3.0).exp() / 3.0;
        assert!((s.matrix[(0, 1)] - e15).norm() < 1e-15);
        assert!((s.matrix[(1, 2)] - e15).norm() < 1e-15);
        assert!((s.matrix[(0, 2)] - e30).norm() < 1e-15);
        assert_eq!(s.matrix, s.matrix.transpose());
        assert!((s.rhs[1] - Complex64::new(0.0, 0.45).exp()).norm() < 1e-15);
        assert!(assemble(&[[0.0; 3], [0.0; 3]], alpha(0.5), w, k).is_err());
        assert!(assemble(&[], alpha(0.5), w, k).is_err());
    }

    #[test]
    fn single_center_reduces() {
        let w = freq(0.4, 0.2);
        let k = make_incident_wave(w, [0.0, 0.0]).unwrap();
        let s = assemble(&[[0.0; 3]], alpha(-0.3), w, k).unwrap();
        let sol = solve(&s).unwrap();
        let f = scattering_amplitude_sae(alpha(-0.3), w).unwrap();
        assert!((sol.f[0] - f).norm() < 1e-15);
        let x = [0.3, -0.2, 0.9];
        let v = field_at(&s.centers, &sol, x, k, w).unwrap();
        let phi0 = -(-0.3 - Complex64::i() * w.omega()) / (4.0 * std::f64::consts::PI);
        let want = single_center_field(ModeKind::Scalar, phi0, x, k, w).unwrap();
        assert!((v - want).norm() < 1e-13);
        assert!(field_at(&s.centers, &sol, [0.0; 3], k, w).is_err());
    }

    #[test]
    fn mirror_symmetric_pair() {
        let w = Frequency::real(1.3).unwrap();
        let k = make_incident_wave(w, [0.0, 0.0]).unwrap();
        let s = assemble(&[[-0.7, 0.0, 0.0], [0.7, 0.0, 0.0]], alpha(0.9), w, k).unwrap();
        let sol = solve(&s).unwrap();
        assert!((sol.f[0] - sol.f[1]).norm() < 1e-12);
        assert!(sol.residual_norm < 1e-13);
    }

    #[test]
    fn translation_covariance() {
        let w = freq(0.9, 0.05);
        let k = make_incident_wave(w, [0.3, -0.2]).unwrap();
        let centers = vec![[0.0, 0.0, 0.0], [1.0, 0.2, 0.0], [0.4, 1.1, 0.3], [-0.8, 0.5, -0.2]];
        let d = [0.37, -1.2, 0.55];
        let shifted: Vec<_> = centers.iter().map(|c| [c[0] + d[0], c[1] + d[1], c[2] + d[2]]).collect();
        let s0 = solve(&assemble(&centers, alpha(0.2), w, k).unwrap()).unwrap();
        let s1 = solve(&assemble(&shifted, alpha(0.2), w, k).unwrap()).unwrap();
        let phase = k.plane_wave(d);
        for i in 0..centers.len() {
            assert!((s1.f[i] - phase * s0.f[i]).norm() < 1e-12);
        }
        let x = [0.2, 0.3, 2.0];
        let xs = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
        let v0 = field_at(&centers, &s0, x, k, w).unwrap();
        let v1 = field_at(&shifted, &s1, xs, k, w).unwrap();
        assert!((v1 - phase * v0).norm() < 1e-12);
    }

    #[test]
    fn far_field_amplitude() {
        let w = Frequency::real(1.0).unwrap();
        let k = make_incident_wave(w, [0.4, 0.0]).unwrap();
        let centers = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let sol = solve(&assemble(&centers, alpha(0.6), w, k).unwrap()).unwrap();
        let dir = [0.48, 0.6, 0.64];
        let r = 1e4;
        let x = [r * dir[0], r * dir[1], r * dir[2]];
        let scat = field_at(&centers, &sol, x, k, w).unwrap() - k.plane_wave(x);
        let got = scat * r / Complex64::new(0.0, r).exp();
        let want: Complex64 = centers
            .iter()
            .zip(sol.f.iter())
            .map(|(c, f)| f * Complex64::new(0.0, -(dir[0] * c[0] + dir[1] * c[1] + dir[2] * c[2])).exp())
            .sum();
        assert!((got - want).norm() < 1e-3);
    }

    #[test]
    fn refuses_at_intrinsic_mode() {
        // alpha = -1 has its pole at w = i
        let w = freq(0.0, 1.0);
        let k = make_incident_wave(w, [0.0, 0.0]).unwrap();
        let s = assemble(&[[0.0; 3]], alpha(-1.0), w, k).unwrap();
        assert!(matches!(solve(&s), Err(Error::NearSingular { .. })));
    }

    fn imag_scan(lo: f64, hi: f64, n: usize) -> Vec<Frequency> {
        (0..n).map(|i| freq(0.0, lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn single_center_bound_state_scan() {
        let scan = detect_intrinsic_modes(&[[0.0; 3]], alpha(-1.0), &imag_scan(0.5, 1.5, 101)).unwrap();
        let mins = scan_minima(&scan, 1e-6);
        assert_eq!(mins.len(), 1);
        assert!((mins[0].0.omega().im - 1.0).abs() < 1e-9);
        let scan = detect_intrinsic_modes(&[[0.0; 3]], alpha(1.0), &imag_scan(0.01, 5.0, 200)).unwrap();
        assert!(scan_minima(&scan, 1e-3).is_empty());
        assert!(scan.iter().all(|p| p.1 > 1.0));
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pair_bound_states() {
        // kappa - 1 = +-e^{-2 kappa}/2
        let d: f64 = 2.0;
        let kp = bisect(|x| x - 1.0 - (-x * d).exp() / d, 0.5, 3.0);
        let km = bisect(|x| x - 1.0 + (-x * d).exp() / d, 0.5, 3.0);
        assert!(kp > km);
        let centers = [[0.0; 3], [d, 0.0, 0.0]];
        for kappa in [kp, km] {
            let fine = imag_scan(kappa - 0.01, kappa + 0.01, 201);
            let scan = detect_intrinsic_modes(&centers, alpha(-1.0), &fine).unwrap();
            let mins = scan_minima(&scan, 1e-3);
            assert_eq!(mins.len(), 1, "kappa {kappa}");
            assert!((mins[0].0.omega().im - kappa).abs() <= 1e-4);
        }
        let coarse = detect_intrinsic_modes(&centers, alpha(-1.0), &imag_scan(0.3, 2.0, 1701)).unwrap();
        assert_eq!(scan_minima(&coarse, 1e-2).len(), 2);
    }

    #[test]
    fn small_patch_approaches_bloch() {
                let w = freq(0.6, 1.0);
        let k = make_incident_wave(w, [0.0, 0.0]).unwrap();
        let half = 12;
        let mut centers = Vec::new();
        for i in -half..=half {
            for j in -half..=half {
                centers.push([i as f64, j as f64, 0.0]);
            }
        }
        let sol = solve(&assemble(&centers, alpha(0.5), w, k).unwrap()).unwrap();
        let mid = centers.len() / 2;
        let p = EwaldParams::auto(1.0, w, k.k_par, 1e-12).unwrap();
        let f0 = f0_bloch(alpha(0.5), w, k, 1.0, &p).unwrap();
        assert!((sol.f[mid] - f0).norm() / f0.norm() < 2e-2);
    }
}
