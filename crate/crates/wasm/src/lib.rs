//! wasm-bindgen entry points for the demo page in `www/`. Every function
//! returns a JSON string.

use afp_core::afp::{run_afp, AfpConfig};
use afp_core::ode::{solve_limiting_weak, OdeConfig, TimeGrid};
use afp_core::registry::{build_map, build_problem, Params};
use afp_core::schauder::SchauderProjection;
use afp_core::seminorms::{build_admissible, standard_family, AdmissibleSeminorm, LinearFunctional};
use afp_core::sets::{build_eps_net, ConvexBody, NetConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn square() -> (ConvexBody, AdmissibleSeminorm) {
    let body = ConvexBody::cube(2, 1.0);
    let rho = build_admissible(&standard_family(2, 4, 0), &body).expect("square is admissible");
    (body, rho)
}

pub fn square_net_json(epsilon: f64, x: f64, y: f64) -> Result<String, String> {
    if !(0.02..=1.0).contains(&epsilon) {
        return Err("epsilon must lie in [0.02, 1]".into());
    }
    let (body, rho) = square();
    let config = NetConfig::default();
    let grid = body
        .rho_lattice(&rho, 0.5 * config.margin * epsilon, 400_000)
        .map_err(|e| e.to_string())?;
    let net = build_eps_net(&body, &rho, epsilon, &grid, &config).map_err(|e| e.to_string())?;
    let projection = SchauderProjection::new(net);
    let point = [x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0)];
    let projected = projection.project(&point).map_err(|e| e.to_string())?;
    Ok(json!({
        "net": projection.net().points(),
        "point": point,
        "projected": projected,
        "gap": rho.dist_unchecked(&point, &projected),
        "epsilon": epsilon,
    })
    .to_string())
}

pub fn afp_trace_json(map: &str, max_level: u32) -> Result<String, String> {
    let (body, rho) = square();
    let f = build_map(map, &Params::new(), &body).map_err(|e| e.to_string())?;
    let levels: Vec<usize> = (0..6).map(|k| 1 << k).filter(|n| *n <= max_level.clamp(1, 32) as usize).collect();
    let config = AfpConfig {
        audit_samples: 200,
        ..AfpConfig::default()
    };
    let trace = run_afp(&body, &rho, &f, &levels, &config).map_err(|e| e.to_string())?;
    Ok(trace.to_json())
}

pub fn picard_json(field: &str, iterations: u32, samples: u32) -> Result<String, String> {
    let grid = TimeGrid::new(1.0, 500).map_err(|e| e.to_string())?;
    let problem = build_problem(field, &Params::new(), vec![1.0, 0.0], grid).map_err(|e| e.to_string())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let functionals = vec![
        LinearFunctional::new(vec![s, s], "a1").map_err(|e| e.to_string())?,
        LinearFunctional::new(vec![s, -s], "a2").map_err(|e| e.to_string())?,
    ];
    let sol = solve_limiting_weak(&problem, iterations.clamp(1, 60) as usize, &functionals, &OdeConfig::default())
        .map_err(|e| e.to_string())?;
    let stride = (grid.len() / samples.max(2) as usize).max(1);
    let picks: Vec<usize> = (0..grid.len()).step_by(stride).chain([grid.steps]).collect();
    let iterates: Vec<Vec<&Vec<f64>>> = sol
        .iterates
        .iter()
        .map(|u| picks.iter().map(|&i| &u.values[i]).collect())
        .collect();
    Ok(json!({
        "t": picks.iter().map(|&i| grid.t(i)).collect::<Vec<_>>(),
        "iterates": iterates,
        "bound": picks.iter().map(|&i| sol.bound.values[i]).collect::<Vec<_>>(),
        "uniform": sol.residuals.iter().map(|r| r.uniform).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Net of the square `[-1, 1]^2` at radius `epsilon` and the projection of `(x, y)`.
#[wasm_bindgen]
pub fn square_net(epsilon: f64, x: f64, y: f64) -> Result<String, JsError> {
    square_net_json(epsilon, x, y).map_err(|e| JsError::new(&e))
}

/// Approximate fixed point trace of a registry map on the square, levels `1, 2, 4, ...` up to `max_level`.
#[wasm_bindgen]
pub fn afp_trace(map: &str, max_level: u32) -> Result<String, JsError> {
    afp_trace_json(map, max_level).map_err(|e| JsError::new(&e))
}

/// Picard iterates of a registry field from `u0 = (1, 0)` on `[0, 1]`.
#[wasm_bindgen]
pub fn picard(field: &str, iterations: u32, samples: u32) -> Result<String, JsError> {
    picard_json(field, iterations, samples).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn net_payload() {
        let v: serde_json::Value = serde_json::from_str(&square_net_json(0.25, 0.3, -0.4).unwrap()).unwrap();
        assert!(v["net"].as_array().unwrap().len() > 1);
        assert!(v["gap"].as_f64().unwrap() < 0.25);
        assert!(square_net_json(5.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn trace_payload() {
        let v: serde_json::Value = serde_json::from_str(&afp_trace_json("scaling", 4).unwrap()).unwrap();
        assert_eq!(v["levels"].as_array().unwrap().len(), 3);
        assert!(afp_trace_json("nope", 4).is_err());
    }

    #[test]
    fn picard_payload() {
        let v: serde_json::Value = serde_json::from_str(&picard_json("rotation", 10, 50).unwrap()).unwrap();
        assert_eq!(v["iterates"].as_array().unwrap().len(), 11);
        let t = v["t"].as_array().unwrap();
        assert_eq!(t.last().unwrap().as_f64().unwrap(), 1.0);
    }
}
