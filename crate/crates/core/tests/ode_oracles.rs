use afp_core::ode::{
    apply_f, apriori_bound, solve_limiting_weak, verify_lp_estimates, GridFunction, OdeConfig, OdeProblem, TimeGrid,
    DEFAULT_BOUND_CAP,
};
use afp_core::seminorms::LinearFunctional;

/// Adaptive Simpson on `[a, b]`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
            l + r + (l + r - whole) / 15.0
        } else {
            rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
        }
    }
    rec(f, a, b, simpson(f, a, b), tol, 40)
}

/// Solves `int_{z0}^{z} ds / phi(s) = target` for `z` by bisection.
fn invert_j(phi: &dyn Fn(f64) -> f64, z0: f64, target: f64) -> f64 {
    let j = |z: f64| integrate(&|s| 1.0 / phi(s), z0, z, 1e-15);
    let (mut lo, mut hi) = (z0, z0 + 1.0);
    while j(hi) < target {
        hi = z0 + 2.0 * (hi - z0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn linear_problem(steps: usize) -> OdeProblem {
    OdeProblem::new("linear", |_, u| u.to_vec(), |_| 1.0, |s| 1.0 + s, vec![1.0], TimeGrid::new(1.0, steps).unwrap())
        .unwrap()
}

#[test]
fn bound_matches_j_integral_form() {
    let p = linear_problem(1000);
    let b = apriori_bound(&p, DEFAULT_BOUND_CAP).unwrap();
    for i in (0..=1000).step_by(50) {
        let t = p.grid.t(i);
        let oracle = invert_j(&|s| 1.0 + s, 1.0, t);
        assert!((b.values[i] - oracle).abs() <= 1e-8 * oracle, "t = {t}");
    }
}

#[test]
fn arctangent_bound() {
    let p = OdeProblem::new(
        "riccati",
        |_, u| vec![1.0 + u[0] * u[0]],
        |_| 1.0,
        |s| 1.0 + s * s,
        vec![0.0],
        TimeGrid::new(1.2, 1200).unwrap(),
    )
    .unwrap();
    let b = apriori_bound(&p, DEFAULT_BOUND_CAP).unwrap();
    for (i, v) in b.values.iter().enumerate() {
        let exact = p.grid.t(i).tan();
        assert!((v - exact).abs() <= 1e-8 * exact.max(1.0));
    }
    assert!(b.values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn trapezoid_is_second_order() {
    let error = |steps: usize| {
        let p = linear_problem(steps);
        let b = apriori_bound(&p, DEFAULT_BOUND_CAP).unwrap();
        let u = GridFunction::new(p.grid.nodes().iter().map(|t| vec![t.exp()]).collect(), p.grid).unwrap();
        let v = apply_f(&p, &u, &b, &OdeConfig::default()).unwrap();
        v.values.iter().zip(p.grid.nodes()).map(|(v, t)| (v[0] - t.exp()).abs()).fold(0.0, f64::max)
    };
    let ratio = error(50) / error(100);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn picard_iterates_are_truncated_exponentials() {
    let p = linear_problem(1000);
    let fs = vec![LinearFunctional::coordinate(1, 0)];
    let sol = solve_limiting_weak(&p, 3, &fs, &OdeConfig::default()).unwrap();
    // u_2(t) = 1 + t + t^2 / 2 exactly up to trapezoid error of the t^2 term.
    let u2 = &sol.iterates[2];
    for (i, v) in u2.values.iter().enumerate() {
        let t = p.grid.t(i);
        assert!((v[0] - (1.0 + t + 0.5 * t * t)).abs() < 1e-6);
    }
    assert!(sol.residuals.windows(2).all(|w| w[1].uniform < w[0].uniform));
}

#[test]
fn lp_estimates_hold_on_saturating_iterates() {
    let p = OdeProblem::new(
        "saturating",
        |_, u| {
            let s = 2.0 / (1.0 + u.iter().map(|v| v * v).sum::<f64>().sqrt());
            u.iter().map(|v| s * v).collect()
        },
        |_| 2.0,
        |_| 1.0,
        vec![0.5, 0.5],
        TimeGrid::new(2.0, 400).unwrap(),
    )
    .unwrap();
    let fs = vec![LinearFunctional::coordinate(2, 0), LinearFunctional::coordinate(2, 1)];
    let cfg = OdeConfig::default();
    let sol = solve_limiting_weak(&p, 15, &fs, &cfg).unwrap();
    for q in [1.5, 2.0, 3.0, 4.0] {
        let pq = p.clone().with_p(q).unwrap();
        for u in &sol.iterates {
            verify_lp_estimates(&pq, u, &sol.bound, &cfg).unwrap();
        }
    }
}

#[test]
fn diverging_field_is_reported() {
    // Growth data that lies: |f| = 5|u| is not bounded by 1 + |u|.
    let p = OdeProblem::new("liar", |_, u| vec![5.0 * u[0]], |_| 1.0, |s| 1.0 + s, vec![1.0], TimeGrid::new(1.0, 100).unwrap())
        .unwrap();
    let fs = vec![LinearFunctional::coordinate(1, 0)];
    assert!(solve_limiting_weak(&p, 30, &fs, &OdeConfig::default()).is_err());
}
