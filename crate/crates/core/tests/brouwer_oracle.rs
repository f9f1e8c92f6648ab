use afp_core::brouwer::{grid_oracle, solve_fixed_point, BrouwerConfig};
use afp_core::linalg::dist;
use afp_core::registry::{build_map, ParamValue, Params};
use afp_core::sets::ConvexBody;

fn params(pairs: &[(&str, ParamValue)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn agree(name: &str, p: Params, body: &ConvexBody, exact: &[f64]) {
    let f = build_map(name, &p, body).unwrap();
    let cfg = BrouwerConfig::default();
    let solved = solve_fixed_point(|x: &[f64]| Ok(f.eval(x)), body, &cfg).unwrap();
    let oracle = grid_oracle(|x: &[f64]| Ok(f.eval(x)), body, 50).unwrap();
    let gap = dist(&solved.point, &oracle.point);
    assert!(gap <= oracle.spacing + cfg.tol, "{name}: solver {:?} oracle {:?}", solved.point, oracle.point);
    assert!(dist(&solved.point, exact) < 1e-6, "{name}: {:?} vs {exact:?}", solved.point);
}

#[test]
fn square_maps() {
    let sq = ConvexBody::cube(2, 1.0);
    agree("rotation", Params::new(), &sq, &[0.0, 0.0]);
    agree(
        "scaling",
        params(&[("factor", ParamValue::Number(0.5)), ("center", ParamValue::Vector(vec![0.2, -0.3]))]),
        &sq,
        &[0.2, -0.3],
    );
    agree("shift-and-clip", Params::new(), &sq, &[1.0, 1.0]);
    let root = (1.0 - 3.0_f64.sqrt()) / 2.0;
    agree("polynomial", Params::new(), &sq, &[root, root]);
}

#[test]
fn segment_and_tetrahedron() {
    agree(
        "scaling",
        params(&[("factor", ParamValue::Number(-0.5)), ("center", ParamValue::Vector(vec![0.4]))]),
        &ConvexBody::segment(-1.0, 1.0),
        &[0.4],
    );
    let tet = ConvexBody::new(vec![
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    agree(
        "scaling",
        params(&[("factor", ParamValue::Number(0.5)), ("center", ParamValue::Vector(vec![0.1, 0.2, 0.3]))]),
        &tet,
        &[0.1, 0.2, 0.3],
    );
}
