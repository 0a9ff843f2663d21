//! JSON round-trips of solver outputs are exact.

use goldstein_core::{
    check_gcq, get_problem, solve, GcqOutcome, GoldsteinCertificate, InnerKind, ProblemParams, SolveTrace,
    SolverConfig, PROBLEM_NAMES,
};

#[test]
fn certificates_and_traces_round_trip_exactly() {
    for name in PROBLEM_NAMES {
        let rec = get_problem(name, &ProblemParams::default()).unwrap();
        for inner in [InnerKind::Rand, InnerKind::Bisect] {
            let sol = solve(&rec.spec, &SolverConfig::new(0.05, 0.05, inner).with_seed(5), None).unwrap();
            let text = serde_json::to_string(&sol.certificate).unwrap();
            let back: GoldsteinCertificate = serde_json::from_str(&text).unwrap();
            assert_eq!(back, sol.certificate, "{name}");
            for (a, b) in back.combination.iter().zip(&sol.certificate.combination) {
                assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            }
            let text = serde_json::to_string(&sol.trace).unwrap();
            let back: SolveTrace = serde_json::from_str(&text).unwrap();
            assert_eq!(back, sol.trace, "{name}");
        }
    }
}

#[test]
fn config_rejects_unknown_fields() {
    let ok: SolverConfig = serde_json::from_str(r#"{"delta": 0.1, "target_eps": 0.05}"#).unwrap();
    assert_eq!(ok.inner, InnerKind::Rand);
    assert_eq!(ok.tau, 0.1);
    assert!(serde_json::from_str::<SolverConfig>(r#"{"delta": 0.1, "target_eps": 0.05, "sigma": 1}"#).is_err());
}

#[test]
fn gcq_outcome_is_tagged() {
    let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
    let out = check_gcq(&rec.spec.initial_point, &rec.spec, 0.05, 0.5, 0.1, 100, 0).unwrap();
    let v = serde_json::to_value(&out).unwrap();
    assert!(v.get("status").is_some());
    assert_eq!(serde_json::from_value::<GcqOutcome>(v).unwrap(), out);
}
