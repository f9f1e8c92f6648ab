use afp_core::seminorms::{build_admissible, standard_family, weight_cap, AdmissibleSeminorm};
use afp_core::sets::ConvexBody;
use proptest::prelude::*;

fn family(dim: usize, count: usize, seed: u64) -> (ConvexBody, AdmissibleSeminorm) {
    let body = ConvexBody::cube(dim, 1.5);
    let rho = build_admissible(&standard_family(dim, count, seed), &body).unwrap();
    (body, rho)
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 3)
}

proptest! {
    #[test]
    fn subadditive(seed in 0u64..50, x in vec3(), y in vec3()) {
        let (_, rho) = family(3, 6, seed);
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(rho.eval(&s).unwrap() <= rho.eval(&x).unwrap() + rho.eval(&y).unwrap() + 1e-12);
    }

    #[test]
    fn absolutely_homogeneous(seed in 0u64..50, x in vec3(), lambda in -5.0..5.0f64) {
        let (_, rho) = family(3, 6, seed);
        let lx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        let lhs = rho.eval(&lx).unwrap();
        let rhs = lambda.abs() * rho.eval(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn weights_respect_caps(seed in 0u64..200, count in 3usize..9) {
        let (body, rho) = family(3, count, seed);
        for (n, (a, c)) in rho.functionals().iter().zip(rho.weights()).enumerate() {
            let peak = body.generators().iter().map(|g| a.apply(g).abs()).fold(0.0, f64::max);
            prop_assert!(c * peak <= weight_cap(n) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn body_has_rho_diameter_at_most_one(seed in 0u64..200) {
        let (body, rho) = family(3, 6, seed);
        let pts = body.sample(20, seed);
        for x in &pts {
            for y in &pts {
                prop_assert!(rho.dist(x, y).unwrap() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn separates_points_when_family_spans(x in vec3(), y in vec3()) {
        let (_, rho) = family(3, 3, 0);
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        prop_assume!(d > 1e-6);
        prop_assert!(rho.dist(&x, &y).unwrap() > 0.0);
    }
}

#[test]
fn square_reference_weights() {
    let body = ConvexBody::cube(2, 1.0);
    let fs = standard_family(2, 2, 0);
    let rho = build_admissible(&fs, &body).unwrap();
    assert_eq!(rho.weights(), &[0.25, 0.125]);
    assert_eq!(rho.eval(&[1.0, 1.0]).unwrap(), 0.375);
}

#[test]
fn too_few_functionals_cannot_separate_cube_vertices() {
    let body = ConvexBody::cube(3, 1.0);
    assert!(build_admissible(&standard_family(3, 2, 0), &body).is_err());
}
