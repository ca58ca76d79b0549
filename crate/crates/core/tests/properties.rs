use std::f64::consts::PI;

use dirac_lattice::lattice_sums::{j_sum, j_sum_direct_to_tolerance, EwaldParams};
use dirac_lattice::limits::{r_continuum, r_hydrodynamic};
use dirac_lattice::multi_center::{assemble, field_at, solve};
use dirac_lattice::plane_lattice::{
    f0_bloch, field_planewave, field_spherical, phi_from_f0, phi_tilde, planewave_radius_for, reflection,
    spherical_radius_for,
};
use dirac_lattice::single_center::{
    bound_state, phi0, radiation_term, scattering_amplitude_sae, ExtensionParameter, RenormScheme,
};
use dirac_lattice::{make_incident_wave, Frequency, ModeKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn freq(re: f64, im: f64) -> Frequency {
    Frequency::new(Complex64::new(re, im)).unwrap()
}

fn mode() -> impl Strategy<Value = ModeKind> {
    prop_oneof![Just(ModeKind::Scalar), Just(ModeKind::TE), Just(ModeKind::TM), Just(ModeKind::P)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wave_vector_on_shell(wr in 0.01f64..5.0, wi in 0.0f64..3.0, kx in -3.0f64..3.0, ky in -3.0f64..3.0) {
        let w = freq(wr, wi);
        let k = make_incident_wave(w, [kx, ky]).unwrap();
        let w2 = w.omega() * w.omega();
        prop_assert!(k.on_shell_residual(w) < 1e-12 * w2.norm().max(1e-300) + 1e-15);
        prop_assert!(k.k3.im >= 0.0);
    }

    #[test]
    fn optical_theorem(alpha in -5.0f64..5.0, w in 0.01f64..10.0) {
        let f = scattering_amplitude_sae(ExtensionParameter::new(alpha).unwrap(), Frequency::real(w).unwrap()).unwrap();
        prop_assert!((f.im - w * f.norm_sqr()).abs() <= 1e-14 * f.norm().max(1.0));
    }

    #[test]
    fn pole_is_bound_state(alpha in -5.0f64..-0.01) {
        let a = ExtensionParameter::new(alpha).unwrap();
        let kappa = bound_state(a).unwrap().kappa;
        // 1/f vanishes at w = i kappa
        let inv = alpha - Complex64::i() * Complex64::new(0.0, kappa);
        prop_assert!(inv.norm() <= 1e-14 * alpha.abs().max(1.0));
    }

    #[test]
    fn scheme_relation(kind in mode(), re in -3.0f64..3.0, im in -1.0f64..1.0, wr in 0.0f64..3.0, wi in 0.0f64..2.0) {
        let w = freq(wr, wi);
        let inv = Complex64::new(re, im);
        let d = phi0(kind, inv, w, RenormScheme::FieldTheoretic) - phi0(kind, inv, w, RenormScheme::Electrostatic);
        let wv = w.omega();
        let i = Complex64::i();
        let want = match kind {
            ModeKind::Scalar => i * wv / (4.0 * PI),
            ModeKind::TE => i * wv * wv * wv,
            ModeKind::TM => i * wv * wv * wv / 3.0,
            ModeKind::P => 2.0 * i * wv * wv * wv / 3.0,
        };
        prop_assert!((d - want).norm() <= 1e-15 * (inv.norm() + want.norm()));
        prop_assert_eq!(radiation_term(kind, w), want);
    }

    #[test]
    fn te_matches_hydrodynamic(wv in 0.1f64..4.0, frac in 0.0f64..0.95, alpha in 0.05f64..3.0, sign in prop::bool::ANY, rho in 0.1f64..10.0) {
        let alpha = if sign { alpha } else { -alpha };
        let w = Frequency::real(wv).unwrap();
        let k = make_incident_wave(w, [frac * wv, 0.0]).unwrap();
        let te = r_continuum(ModeKind::TE, Complex64::new(1.0 / alpha, 0.0), w, k, rho).unwrap();
        let sc = r_hydrodynamic(-4.0 * PI * alpha * wv * wv, w, k, rho).unwrap();
        prop_assert!((te - sc).norm() <= 4.0 * f64::EPSILON * te.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn system_matrix_symmetric_and_covariant(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0), 2..7),
        d in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
        alpha in 0.5f64..3.0,
        wr in 0.1f64..2.0,
        wi in 0.05f64..1.0,
    ) {
        let centers: Vec<[f64; 3]> = pts.iter().map(|p| [p.0, p.1, p.2]).collect();
        let min_sep = (0..centers.len())
            .flat_map(|i| (i + 1..centers.len()).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (a, b) = (centers[i], centers[j]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        prop_assume!(min_sep > 0.3);
        let w = freq(wr, wi);
        let k = make_incident_wave(w, [0.3 * wr, -0.2 * wr]).unwrap();
        let alpha = ExtensionParameter::new(alpha).unwrap();
        let sys = assemble(&centers, alpha, w, k).unwrap();
        prop_assert_eq!(&sys.matrix, &sys.matrix.transpose());
        let Ok(s0) = solve(&sys) else { return Ok(()) };
        let shifted: Vec<[f64; 3]> = centers.iter().map(|c| [c[0] + d.0, c[1] + d.1, c[2] + d.2]).collect();
        let s1 = solve(&assemble(&shifted, alpha, w, k).unwrap()).unwrap();
        let phase = k.plane_wave([d.0, d.1, d.2]);
        let scale = s0.f.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..centers.len() {
            prop_assert!((s1.f[i] - phase * s0.f[i]).norm() <= 1e-12 * scale);
        }
        let x = [0.17, -0.23, 2.5];
        let xs = [x[0] + d.0, x[1] + d.1, x[2] + d.2];
        let v0 = field_at(&centers, &s0, x, k, w).unwrap();
        let v1 = field_at(&shifted, &s1, xs, k, w).unwrap();
        prop_assert!((v1 - phase * v0).norm() <= 1e-12 * scale.max(v0.norm()));
    }

    #[test]
    fn j_sums_inversion_symmetric(s in 1u32..4, wr in 0.2f64..2.0, wi in 0.0f64..0.5, kx in -0.5f64..0.5, ky in -0.5f64..0.5, a in 0.5f64..2.0) {
        let w = freq(wr, wi);
        let p = EwaldParams::auto(a, w, [kx, ky], 1e-12).unwrap();
        let Ok(plus) = j_sum(s, w, [kx, ky], a, &p) else { return Ok(()) };
        let minus = j_sum(s, w, [-kx, -ky], a, &p).unwrap();
        prop_assert!((plus.value - minus.value).norm() <= 1e-12 * plus.value.norm().max(a.powi(-(s as i32))));
    }

    #[test]
    fn ewald_agrees_with_direct_when_damped(s in 1u32..4, wr in 0.0f64..2.0, wi in 0.8f64..2.5, kx in -1.0f64..1.0, a in 0.6f64..2.0) {
        let w = freq(wr, wi);
        let p = EwaldParams::auto(a, w, [kx, 0.0], 1e-12).unwrap();
        let e = j_sum(s, w, [kx, 0.0], a, &p).unwrap();
        let d = j_sum_direct_to_tolerance(s, w, [kx, 0.0], a, 1e-13).unwrap();
        let bound = e.abs_error_estimate + d.abs_error_estimate + 1e-12 * d.value.norm();
        prop_assert!((e.value - d.value).norm() <= bound, "{} vs {}", e.value, d.value);
    }

    #[test]
    fn scalar_reciprocity(wv in 0.3f64..2.0, frac in 0.0f64..0.9, ang in 0.0f64..6.28, alpha in -3.0f64..3.0, a in 0.5f64..2.0) {
        let w = Frequency::real(wv).unwrap();
        let kp = [frac * wv * ang.cos(), frac * wv * ang.sin()];
        let Ok(k) = make_incident_wave(w, kp) else { return Ok(()) };
        let inv = Complex64::new(ExtensionParameter::new(alpha).unwrap().inverse_coupling(), 0.0);
        let r = |k: dirac_lattice::WaveVector| -> Option<Complex64> {
            let p = EwaldParams::auto(a, w, k.k_par, 1e-12).ok()?;
            let phi = phi_tilde(ModeKind::Scalar, inv, w, k, a, &p).ok()?;
            reflection(ModeKind::Scalar, phi, w, k, a, [0, 0]).ok()
        };
        if let (Some(r1), Some(r2)) = (r(k), r(k.negated_par())) {
            prop_assert!((r1 - r2).norm() <= 1e-12 * r1.norm().max(1.0));
        }
    }

    #[test]
    fn spherical_plane_wave_duality(wr in 0.2f64..1.5, wi in 0.2f64..0.8, kx in -0.3f64..0.3, x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.3f64..2.0, alpha in -2.0f64..2.0) {
        let w = freq(wr, wi);
        let k = make_incident_wave(w, [kx, 0.1]).unwrap();
        let alpha = ExtensionParameter::new(alpha).unwrap();
        let p = EwaldParams::auto(1.0, w, k.k_par, 1e-12).unwrap();
        let Ok(f0) = f0_bloch(alpha, w, k, 1.0, &p) else { return Ok(()) };
        let pos = [x, y, z];
        let rs = spherical_radius_for(f0, pos, w, 1.0, 1e-10).unwrap();
        let sph = field_spherical(f0, pos, w, k, 1.0, rs, 1e-10).unwrap();
        let phi = phi_from_f0(f0);
        let rp = planewave_radius_for(ModeKind::Scalar, phi, w, k.k_par, 1.0, z, 1e-12).unwrap();
        let pw = field_planewave(ModeKind::Scalar, phi, pos, w, k, 1.0, rp).unwrap();
        let bound = sph.abs_error_estimate + pw.abs_error_estimate + 1e-10 * pw.value.norm();
        prop_assert!((sph.value - pw.value).norm() <= bound, "{} vs {}", sph.value, pw.value);
    }
}
