use serde_json::Value;
use wsn_tpc_browser::{feasibility_slice_json, PairDemo};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn slice_shrinks_as_kappa3_grows() {
    let count = |k3| {
        let v = parse(&feasibility_slice_json(1.0, k3, 40).unwrap());
        assert_eq!(v["axis"].as_array().unwrap().len(), 40);
        let f = v["feasible"].as_array().unwrap();
        assert_eq!(f.len(), 1600);
        f.iter().filter(|b| b.as_bool().unwrap()).count()
    };
    let (lo, hi) = (count(0.1), count(0.9));
    assert!(hi > 0 && hi < lo);
}

#[test]
fn homogeneous_policy_is_mirror_symmetric() {
    let demo = PairDemo::solve(1.01, 1.01, 0.01, 0.9).unwrap();
    let v = parse(&demo.policy());
    let n = v["levels"].as_array().unwrap().len();
    let k1 = v["kappa"][0].as_array().unwrap();
    let k2 = v["kappa"][1].as_array().unwrap();
    assert_eq!(k1.len(), n * n);
    for a in 0..n {
        for b in 0..n {
            assert_eq!(k1[a * n + b], k2[b * n + a]);
        }
    }
}

#[test]
fn episode_has_one_sample_per_step_and_link() {
    let demo = PairDemo::solve(1.01, 1.2, 0.01, 0.9).unwrap();
    let a = demo.episode(30, 5).unwrap();
    assert_eq!(a, demo.episode(30, 5).unwrap());
    let v = parse(&a);
    for l in 0..2 {
        assert_eq!(v["covariance"][l].as_array().unwrap().len(), 30);
        assert_eq!(v["power_watt"][l].as_array().unwrap().len(), 30);
    }
}

#[test]
fn bad_parameters_are_errors() {
    assert!(PairDemo::solve(1.01, 1.01, -1.0, 0.9).is_err());
    assert!(feasibility_slice_json(1.0, 0.5, 0).is_err());
}
