use std::f64::consts::PI;

use ddfem::forms::BoundaryCondition;
use ddfem::manufactured::{sample_points, verify_strong_system, CaseId, ManufacturedCase};
use ddfem::mesh::{opening_angle, BoundaryTag};

fn all_cases() -> Vec<ManufacturedCase> {
    let mut v = vec![ManufacturedCase::case1(), ManufacturedCase::case3()];
    for phi in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
        v.push(ManufacturedCase::case2(phi).unwrap());
    }
    v
}

fn fd_grad(f: impl Fn([f64; 2]) -> f64, p: [f64; 2], h: f64) -> [f64; 2] {
    [
        (f([p[0] + h, p[1]]) - f([p[0] - h, p[1]])) / (2.0 * h),
        (f([p[0], p[1] + h]) - f([p[0], p[1] - h])) / (2.0 * h),
    ]
}

#[test]
fn strong_system_residuals_are_small() {
    for case in all_cases() {
        let r = verify_strong_system(&case, 200, 1e-5).unwrap();
        assert!(r.max() <= 1e-6, "{:?}: {:?}", case.id, r.0);
    }
}

#[test]
fn coarse_step_exposes_truncation_error() {
    let r = verify_strong_system(&ManufacturedCase::case1(), 200, 1e-2).unwrap();
    assert!(r.max() > 1e-6);
}

#[test]
fn invariants_hold_at_many_points() {
    for case in all_cases() {
        for p in sample_points(&case, 1000, 1e-4) {
            let v = case.evaluate(p).unwrap();
            let g = fd_grad(|x| case.u(x), p, 1e-5);
            let gl = fd_grad(|x| case.lambda(x), p, 1e-5);
            for i in 0..2 {
                assert!((g[i] - v.e[i]).abs() < 1e-6, "{:?} e at {p:?}", case.id);
                assert!((gl[i] - v.grad_lambda[i]).abs() < 1e-6);
                assert!((v.mu[i] - (v.e_tilde[i] - v.e[i])).abs() < 1e-13);
                assert!((v.s_tilde[i] - (v.s[i] - v.grad_lambda[i] / case.kappa)).abs() < 1e-13);
            }
            let h = 1e-5;
            let div_s = (case.s([p[0] + h, p[1]]).unwrap()[0]
                - case.s([p[0] - h, p[1]]).unwrap()[0]
                + case.s([p[0], p[1] + h]).unwrap()[1]
                - case.s([p[0], p[1] - h]).unwrap()[1])
                / (2.0 * h);
            assert!(
                (v.q - (case.zeta * v.u + div_s)).abs() < 1e-5,
                "{:?} q at {p:?}",
                case.id
            );
            // Second-law sign.
            assert!(v.s[0] * v.e[0] + v.s[1] * v.e[1] <= 0.0);
        }
    }
}

#[test]
fn case1_flux_matches_the_unsimplified_law() {
    let c = ManufacturedCase::case1();
    for p in sample_points(&c, 200, 0.01) {
        let e = c.e(p).unwrap();
        let n = e[0].hypot(e[1]);
        if n < 1e-8 {
            continue;
        }
        let s = c.s(p).unwrap();
        let stated = (n - n.powi(3) / 40.0) / n;
        assert!((s[0] + e[0] * stated).abs() < 1e-13 && (s[1] + e[1] * stated).abs() < 1e-13);
    }
}

#[test]
fn case1_reference_values() {
    let c = ManufacturedCase::case1();
    assert!((c.q([0.0, 0.0]) - (1.0 + 2.0 * PI * PI)).abs() < 1e-12);
    assert!((c.q([0.0, 0.0]) - 20.7392).abs() < 1e-4);
    let s = c.s([0.25, 0.25]).unwrap();
    assert!((s[0] - 1.37700).abs() < 1e-5 && (s[1] - 1.37700).abs() < 1e-5);
    assert!((c.f([0.0, 0.0]) - (-1.0 / (20.0 * PI) + 2.0 * PI / 5.0)).abs() < 1e-12);
    assert!((c.f([0.0, 0.0]) - 1.24072).abs() < 1e-5);
}

#[test]
fn case2_gradient_magnitude_is_radial_power() {
    for phi in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
        let c = ManufacturedCase::case2(phi).unwrap();
        let nu = c.nu().unwrap();
        assert!((nu - PI / opening_angle(phi)).abs() < 1e-15);
        for p in sample_points(&c, 20, 1e-3) {
            let r = p[0].hypot(p[1]);
            let g = fd_grad(|x| c.u(x), p, 1e-6);
            let expected = nu * r.powf(nu - 1.0);
            assert!((g[0].hypot(g[1]) - expected).abs() < 1e-6 * expected.max(1.0));
            let e = c.e(p).unwrap();
            assert!((e[0].hypot(e[1]) - expected).abs() < 1e-12 * expected.max(1.0));
        }
    }
}

#[test]
fn case2_dirichlet_data_is_the_field_on_the_boundary() {
    let c = ManufacturedCase::case2(PI / 2.0).unwrap();
    let bcs = c.boundary_conditions();
    let psi = opening_angle(PI / 2.0);
    for (tag, points) in [
        (BoundaryTag::WedgeEdge0, vec![[0.3, 0.0], [0.9, 0.0]]),
        (
            BoundaryTag::WedgeEdge1,
            vec![[0.4 * psi.cos(), 0.4 * psi.sin()]],
        ),
        (
            BoundaryTag::Arc,
            vec![
                [0.5f64.cos(), 0.5f64.sin()],
                [(2.0f64).cos(), (2.0f64).sin()],
            ],
        ),
    ] {
        match &bcs[&tag] {
            BoundaryCondition::Dirichlet { u, lambda } => {
                for p in points {
                    assert!((u(p) - c.u(p)).abs() < 1e-14, "{tag:?} at {p:?}");
                    assert!((lambda(p) - c.lambda(p)).abs() < 1e-14);
                }
            }
            other => panic!("{tag:?}: expected Dirichlet data, got {other:?}"),
        }
    }
    assert!(matches!(c.id, CaseId::Case2 { .. }));
}
