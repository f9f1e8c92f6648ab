//! The fixed point engine applied directly to a discretized integral
//! operator: the unknowns are the values `u(t_1), u(t_2), u(t_3)` of a scalar
//! solution, the body is the a priori tube, and the map is the trapezoid
//! operator. Its fixed point has a closed form.

use afp_core::afp::{run_afp, AfpConfig, SelfMap};
use afp_core::ode::{apply_f, apriori_bound, GridFunction, OdeConfig, TimeGrid};
use afp_core::registry::{build_problem, ParamValue, Params};
use afp_core::seminorms::{build_admissible, standard_family};
use afp_core::sets::ConvexBody;

const LAMBDA: f64 = 0.5;
const STEPS: usize = 3;

fn trapezoid_solution() -> Vec<f64> {
    let h = 1.0 / STEPS as f64;
    let growth = (1.0 + 0.5 * h * LAMBDA) / (1.0 - 0.5 * h * LAMBDA);
    (1..=STEPS).map(|i| growth.powi(i as i32)).collect()
}

#[test]
fn afp_on_discretized_operator_approaches_trapezoid_solution() {
    let grid = TimeGrid::new(1.0, STEPS).unwrap();
    let mut params = Params::new();
    params.insert("lambda".into(), ParamValue::Number(LAMBDA));
    let problem = build_problem("linear", &params, vec![1.0], grid).unwrap();
    let bound = apriori_bound(&problem, 1e12).unwrap();
    let hi: Vec<f64> = bound.tube[1..].to_vec();
    let lo: Vec<f64> = hi.iter().map(|b| -b).collect();
    let body = ConvexBody::axis_box(&lo, &hi).unwrap();

    let f = {
        let (lo, hi) = (lo.clone(), hi.clone());
        let config = OdeConfig::default();
        SelfMap::new("trapezoid operator", move |v: &[f64]| {
            let mut values = vec![vec![1.0]];
            values.extend(v.iter().zip(lo.iter().zip(&hi)).map(|(x, (l, h))| vec![x.clamp(*l, *h)]));
            let u = GridFunction::new(values, grid).unwrap();
            let fu = apply_f(&problem, &u, &bound, &config).unwrap();
            fu.values[1..].iter().map(|x| x[0]).collect()
        })
    };
    f.audit(&body, 200, 1, 1e-9).unwrap();

    let rho = build_admissible(&standard_family(STEPS, 2 * STEPS, 0), &body).unwrap();
    let trace = run_afp(&body, &rho, &f, &[1, 2, 4, 8], &AfpConfig::default()).unwrap();
    assert!(trace.failure.is_none(), "{:?}", trace.failure);
    assert!(trace.contract_violations().is_empty());

    let exact = trapezoid_solution();
    let errors: Vec<f64> = trace
        .levels
        .iter()
        .map(|l| l.u_n.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    assert!(errors[3] < 0.5 * errors[0], "{errors:?}");
}
