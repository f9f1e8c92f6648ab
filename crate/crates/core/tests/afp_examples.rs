use afp_core::afp::{extract_fixed_point, orbit_hull_chain, run_afp, AfpConfig, SelfMap};
use afp_core::brouwer::grid_oracle;
use afp_core::linalg::dist;
use afp_core::seminorms::{build_admissible, standard_family, LinearFunctional};
use afp_core::sets::ConvexBody;

#[test]
fn identity_has_zero_residuals() {
    let body = ConvexBody::new(vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![0.3, 0.9]]).unwrap();
    let rho = build_admissible(&standard_family(2, 4, 2), &body).unwrap();
    let id = SelfMap::new("identity", |x| x.to_vec());
    let trace = run_afp(&body, &rho, &id, &[1, 2, 4], &AfpConfig::default()).unwrap();
    assert_eq!(trace.levels.len(), 3);
    assert!(trace.levels.iter().all(|l| l.rho_residual == 0.0));
    let p = extract_fixed_point(&trace, &id, 1e-12).unwrap();
    assert_eq!(p, trace.last().unwrap().u_n);
}

#[test]
fn rotation_matches_oracle() {
    let body = ConvexBody::cube(2, 1.0);
    let rho = build_admissible(&standard_family(2, 4, 0), &body).unwrap();
    let rot = SelfMap::new("rotation", |x| vec![-x[1], x[0]]);
    let trace = run_afp(&body, &rho, &rot, &[1, 2, 4, 8, 16], &AfpConfig::default()).unwrap();
    let oracle = grid_oracle(|x: &[f64]| Ok(rot.eval(x)), &body, 50).unwrap();
    for l in &trace.levels {
        assert!(l.rho_residual < 1.0 / l.n as f64);
    }
    assert!(dist(&trace.last().unwrap().u_n, &oracle.point) <= oracle.spacing);
    let p = extract_fixed_point(&trace, &rot, 1e-4).unwrap();
    assert!(dist(&p, &[0.0, 0.0]) < 1e-4);
}

#[test]
fn halving_on_interval() {
    let body = ConvexBody::segment(-1.0, 1.0);
    let rho = build_admissible(&[LinearFunctional::coordinate(1, 0)], &body).unwrap();
    let half = SelfMap::new("half", |x| vec![0.5 * x[0]]);
    let trace = run_afp(&body, &rho, &half, &[1, 2, 4, 8, 16, 32, 64], &AfpConfig::default()).unwrap();
    assert!(trace.contract_violations().is_empty());
    for l in &trace.levels {
        // |u - u/2| = |u| / 2 and rho = |.| / 4 here, so |u| < 8 / n.
        assert!(l.u_n[0].abs() < 8.0 / l.n as f64);
    }
    let m3 = half.clone().with_iterate_power(3);
    let p = extract_fixed_point(&trace, &m3, 1e-3).unwrap();
    assert_eq!(p[0], trace.last().unwrap().u_n[0] / 8.0);
}

#[test]
fn off_center_map_converges() {
    let body = ConvexBody::cube(2, 1.0);
    let rho = build_admissible(&standard_family(2, 4, 0), &body).unwrap();
    let f = SelfMap::new("pull", |x| vec![0.6 * x[0] + 0.2, 0.3 * x[1] - 0.35]);
    let trace = run_afp(&body, &rho, &f, &[1, 2, 4, 8, 16, 32], &AfpConfig::default()).unwrap();
    assert!(trace.failure.is_none());
    assert!(trace.contract_violations().is_empty());
    let exact = [0.5, -0.5];
    assert!(dist(&trace.last().unwrap().u_n, &exact) < 0.1);
}

#[test]
fn orbit_chain_of_contraction_shrinks() {
    let half = SelfMap::new("half", |x| vec![0.5 * x[0]]);
    let chain = orbit_hull_chain(&half, &[1.0], 4, 10, 0).unwrap();
    assert!(chain.inclusion_verified);
    let d = chain.diameters();
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
    let id = SelfMap::new("identity", |x| x.to_vec());
    let chain = orbit_hull_chain(&id, &[0.3, 0.1], 2, 5, 0).unwrap();
    assert_eq!(chain.sizes(), vec![1, 1, 1]);
}
