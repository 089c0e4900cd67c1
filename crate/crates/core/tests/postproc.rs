use ddfem::elements::interpolate_scalar;
use ddfem::forms::{Formulation, FormulationKind, Solution};
use ddfem::manufactured::ManufacturedCase;
use ddfem::mesh::{unit_square_mesh, Point};
use ddfem::postproc::{
    convergence_rate, error_norms, last_pair_rate, nodal_error_field, second_law_audit,
    ErrorRecord, ExactSolution, ReportRow, StudyReport, ERROR_COLUMNS,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Every field identically zero.
struct Zero;

impl ExactSolution for Zero {
    fn u(&self, _: Point) -> f64 {
        0.0
    }
    fn grad_u(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn lambda(&self, _: Point) -> f64 {
        0.0
    }
    fn grad_lambda(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn e(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn s(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn mu(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn div_e(&self, _: Point) -> f64 {
        0.0
    }
    fn div_s(&self, _: Point) -> f64 {
        0.0
    }
    fn div_mu(&self, _: Point) -> f64 {
        0.0
    }
}

fn zero_solution(n_dofs: [usize; 2]) -> Solution {
    let [ns, nv] = n_dofs;
    Solution {
        u: vec![0.0; ns],
        e: vec![0.0; nv],
        s: vec![0.0; nv],
        lambda: vec![0.0; ns],
        mu: vec![0.0; nv],
    }
}

#[test]
fn zero_field_against_case3() {
    let mesh = unit_square_mesh(16).unwrap();
    let f = Formulation::new(FormulationKind::Natural, 0).unwrap();
    let spaces = f.spaces(&mesh).unwrap();
    let sol = zero_solution([spaces.scalar.n_dofs(), spaces.vector.n_dofs()]);
    let err = error_norms(&mesh, &spaces, &sol, &ManufacturedCase::case3(), Some(12)).unwrap();
    assert!((err.u_l2 - 0.5).abs() < 1e-10, "{}", err.u_l2);
    // ‖∇u‖² = π²/2 for u = sin πx sin πy.
    assert!((err.u_h1 - (std::f64::consts::PI.powi(2) / 2.0).sqrt()).abs() < 1e-9);
}

#[test]
fn unit_constant_against_zero() {
    let mesh = unit_square_mesh(3).unwrap();
    let f = Formulation::new(FormulationKind::EqualOrderFull, 1).unwrap();
    let spaces = f.spaces(&mesh).unwrap();
    let mut sol = zero_solution([spaces.scalar.n_dofs(), spaces.vector.n_dofs()]);
    sol.u.iter_mut().for_each(|v| *v = 1.0);
    let err = error_norms(&mesh, &spaces, &sol, &Zero, None).unwrap();
    assert!((err.u_l2 - 1.0).abs() < 1e-14);
    assert!(err.u_h1.abs() < 1e-13);
    assert_eq!(err.e_l2, 0.0);
}

#[test]
fn exactly_representable_fields_have_zero_error() {
    let mesh = unit_square_mesh(4).unwrap();
    let f = Formulation::new(FormulationKind::EqualOrderMinimal, 1).unwrap();
    let spaces = f.spaces(&mesh).unwrap();
    // Quadratic u and λ, linear vectors: all inside CG2.
    struct Poly;
    impl ExactSolution for Poly {
        fn u(&self, p: Point) -> f64 {
            p[0] * p[0] - p[0] * p[1]
        }
        fn grad_u(&self, p: Point) -> [f64; 2] {
            [2.0 * p[0] - p[1], -p[0]]
        }
        fn lambda(&self, p: Point) -> f64 {
            0.5 * p[1] * p[1]
        }
        fn grad_lambda(&self, p: Point) -> [f64; 2] {
            [0.0, p[1]]
        }
        fn e(&self, p: Point) -> [f64; 2] {
            self.grad_u(p)
        }
        fn s(&self, p: Point) -> [f64; 2] {
            [-self.grad_u(p)[0], -self.grad_u(p)[1]]
        }
        fn mu(&self, p: Point) -> [f64; 2] {
            [p[1], 1.0]
        }
        fn div_e(&self, _: Point) -> f64 {
            2.0
        }
        fn div_s(&self, _: Point) -> f64 {
            -2.0
        }
        fn div_mu(&self, _: Point) -> f64 {
            0.0
        }
    }
    let sp = &spaces.scalar;
    let vp = &spaces.vector;
    let vec_interp =
        |g: &dyn Fn(Point) -> [f64; 2]| ddfem::elements::interpolate_vector(&mesh, vp, g).unwrap();
    let sol = Solution {
        u: interpolate_scalar(&mesh, sp, |p| Poly.u(p)).unwrap(),
        e: vec_interp(&|p| Poly.e(p)),
        s: vec_interp(&|p| Poly.s(p)),
        lambda: interpolate_scalar(&mesh, sp, |p| Poly.lambda(p)).unwrap(),
        mu: vec_interp(&|p| Poly.mu(p)),
    };
    let err = error_norms(&mesh, &spaces, &sol, &Poly, None).unwrap();
    for v in err.to_array() {
        assert!(v < 1e-12, "{err:?}");
    }
    let audit = second_law_audit(&spaces, &sol, 1e-10);
    assert_eq!(audit.violations, 0);
    let flipped = Solution {
        s: sol.e.clone(),
        ..sol.clone()
    };
    let audit = second_law_audit(&spaces, &flipped, 1e-10);
    let nonzero = (0..vp.n_scalar_dofs())
        .filter(|&d| sol.e[d].hypot(sol.e[vp.n_scalar_dofs() + d]) > 1e-5)
        .count();
    assert_eq!(audit.violations, nonzero);
    let nodal = nodal_error_field(sp, &sol.u, |p| Poly.u(p)).unwrap();
    assert!(nodal.iter().all(|&(_, _, v)| v.abs() < 1e-14));
    assert!(nodal_error_field(vp, &sol.e[..vp.n_scalar_dofs()], |_| 0.0).is_ok());
}

#[test]
fn nodal_error_rejects_discontinuous_space() {
    let mesh = unit_square_mesh(2).unwrap();
    let spaces = Formulation::new(FormulationKind::Natural, 0)
        .unwrap()
        .spaces(&mesh)
        .unwrap();
    let n = spaces.vector.n_scalar_dofs();
    assert!(nodal_error_field(&spaces.vector, &vec![0.0; n], |_| 0.0).is_err());
}

#[test]
fn triangle_inequality_on_random_fields() {
    let mesh = unit_square_mesh(6).unwrap();
    let case = ManufacturedCase::case1();
    let mut rng = StdRng::seed_from_u64(5);
    for kind in FormulationKind::ALL {
        let spaces = Formulation::new(kind, 1).unwrap().spaces(&mesh).unwrap();
        for _ in 0..5 {
            let mut random = || {
                let x: Vec<f64> = (0..spaces.n_dofs())
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect();
                Solution::split(&spaces, &x).unwrap()
            };
            let (a, b) = (random(), random());
            let diff: Vec<f64> = a
                .to_vector()
                .iter()
                .zip(b.to_vector())
                .map(|(p, q)| p - q)
                .collect();
            let diff = Solution::split(&spaces, &diff).unwrap();
            let ac = error_norms(&mesh, &spaces, &a, &case, None)
                .unwrap()
                .to_array();
            let ab = error_norms(&mesh, &spaces, &diff, &Zero, None)
                .unwrap()
                .to_array();
            let bc = error_norms(&mesh, &spaces, &b, &case, None)
                .unwrap()
                .to_array();
            for i in 0..10 {
                assert!(
                    ac[i] <= ab[i] + bc[i] + 1e-12,
                    "{} column {}",
                    kind.name(),
                    ERROR_COLUMNS[i]
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn power_law_rates_are_recovered(c in 0.01f64..100.0, p in 0.2f64..4.0, h0 in 0.05f64..1.0) {
        let hs: Vec<f64> = (0..4).map(|i| h0 / 2f64.powi(i)).collect();
        let errs: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
        prop_assert!((convergence_rate(&hs, &errs).unwrap() - p).abs() < 1e-10);
        prop_assert!((last_pair_rate(&hs, &errs).unwrap() - p).abs() < 1e-10);
    }

    #[test]
    fn report_csv_round_trip(values in proptest::collection::vec(1e-12f64..1e3, 30), dofs in 1usize..1_000_000) {
        let mut r = StudyReport::new("case1", "eo_full");
        for (i, chunk) in values.chunks(10).enumerate() {
            let errors = ErrorRecord::from_array(chunk.try_into().unwrap());
            r.push(ReportRow { h: 0.5 / (i + 1) as f64, dofs: dofs + i, errors });
        }
        let csv = r.to_csv();
        prop_assert_eq!(csv.lines().count(), 1 + 3 + 1);
        let back = StudyReport::from_csv(&csv).unwrap();
        prop_assert_eq!(back.rows().len(), 3);
        for (x, y) in back.rows().iter().zip(r.rows()) {
            prop_assert_eq!(x.dofs, y.dofs);
            prop_assert!((x.h - y.h).abs() <= 1e-15 * y.h);
            for (p, q) in x.errors.to_array().iter().zip(y.errors.to_array()) {
                prop_assert!((p - q).abs() <= 1e-15 * q.abs());
            }
        }
    }
}
