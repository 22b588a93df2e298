use phimoment::kruglov::McConfig;
use phimoment::orlicz::OrliczFn;
use phimoment::verifier::{
    run_scenario, sharpness_sweep, Config, Family, MatrixParams, Mode, Resolved, SweepExpectation,
};

fn resolve(json: &str, seed: Option<u64>) -> Resolved {
    let c: Config = serde_json::from_str(json).unwrap();
    c.resolve_all(seed).unwrap().remove(0)
}

fn scenario(body: &str) -> Resolved {
    resolve(&format!(r#"{{"scenarios":[{{"id":"t",{body}}}]}}"#), None)
}

#[test]
fn rademacher_sum_second_moment() {
    let s = scenario(
        r#""mode":"classical","statistic":"sum",
           "parts":[{"kind":"atoms","atoms":[[1.0,1.0]],"sign":"symmetrized","repeat":64}],
           "phi":{"kind":"power","p":2.0},"mc":{"trials":50000}"#,
    );
    assert_eq!(s.family, Family::ClassicalSymmetricSum);
    let r = run_scenario(&s, None).unwrap();
    assert!((r.lhs - 64.0).abs() <= 4.0 * r.lhs_se, "{} ± {}", r.lhs, r.lhs_se);
    // X = 1 on (0, 64): head 1, norm term (1 + √63)²
    assert_eq!(r.rhs_head, 1.0);
    assert!((r.rhs_norm_term - (1.0 + 63f64.sqrt()).powi(2)).abs() < 1e-9);
    assert!(r.jensen_ok && r.pass);
}

#[test]
fn two_point_symmetric_closed_form() {
    let s = scenario(
        r#""mode":"classical","statistic":"sum",
           "parts":[{"kind":"atoms","atoms":[[2.0,0.5]],"sign":"symmetrized"}],
           "phi":{"kind":"power","p":2.0},"mc":{"trials":50000}"#,
    );
    let r = run_scenario(&s, None).unwrap();
    // E S² = 4 · 1/2; head 4 · 1/2; norm 2 · 1/2
    assert!((r.lhs - 2.0).abs() <= 4.0 * r.lhs_se);
    assert_eq!((r.rhs_head, r.rhs_norm_term), (2.0, 1.0));
    assert!((r.ratio - 2.0 / 3.0).abs() <= 4.0 * r.ratio_se);
}

#[test]
fn classical_max_matches_product_cdf() {
    let s = scenario(
        r#""mode":"classical","statistic":"max",
           "parts":[{"kind":"scaled_indicator","a":3.0,"u":0.1,"repeat":10}],
           "phi":{"kind":"power","p":2.0},"mc":{"trials":100000}"#,
    );
    let r = run_scenario(&s, None).unwrap();
    let exact = 9.0 * (1.0 - 0.9f64.powi(10));
    assert!((r.lhs - exact).abs() <= 4.0 * r.lhs_se, "{} vs {exact}", r.lhs);
    assert!((r.rhs_head - 9.0).abs() < 1e-12);
    assert!(r.ratio >= 0.5 && r.pass);
}

#[test]
fn free_indicator_family_rhs() {
    let s = scenario(
        r#""mode":"free","statistic":"sum",
           "parts":[{"kind":"scaled_indicator","a":1.0,"u":0.015625,"repeat":64}],
           "phi":{"kind":"power","p":2.0},"matrix":{"n_dim":1024,"trials":8}"#,
    );
    let r = run_scenario(&s, None).unwrap();
    assert_eq!(r.rhs_total, 2.0);
    // second moment of the free sum of 64 projections of trace 1/64
    let predicted = 2.0 - 1.0 / 64.0;
    assert!((r.lhs - predicted).abs() <= 4.0 * r.lhs_se + 1e-3, "{} vs {predicted}", r.lhs);
}

#[test]
fn witness_trace_is_the_closed_form_for_linear_phi() {
    let s = scenario(
        r#""mode":"free","statistic":"maximal_witness",
           "parts":[{"kind":"atoms","atoms":[[4.0,0.0625],[1.0,0.1875]],"repeat":8}],
           "phi":{"kind":"power","p":1.0},"matrix":{"n_dim":1024,"trials":4}"#,
    );
    let r = run_scenario(&s, None).unwrap();
    // X = 4 on (0, 1/2), 1 on (1/2, 2): θ = 1, witness trace 4·1/2 + 1, head 4·1/2 + 1/2
    assert!((r.lhs - 3.0).abs() < 1e-9, "{}", r.lhs);
    assert_eq!(r.rhs_head, 2.5);
    assert!((r.ratio - 1.2).abs() < 1e-9);
    assert!((1.0..=2.0).contains(&r.ratio));
}

#[test]
fn exp_sweep_matches_binomial_mgf() {
    let phi = OrliczFn::exp_minus_one(1.0);
    let mc = McConfig { trials: 200_000, seed: 5, ..McConfig::default() };
    let rows = sharpness_sweep(&phi, &[1.0, 2.0], &[16, 64], Mode::Classical, &mc, &MatrixParams::default())
        .unwrap();
    for r in rows {
        let n = r.n as f64;
        let mgf = (1.0 + (r.a.exp() - 1.0) / n).powf(n);
        let exact = (mgf - 1.0) / r.a.exp_m1();
        assert!((r.ratio - exact).abs() <= 4.0 * r.ratio_se, "{r:?} vs {exact}");
    }
}

#[test]
fn power_sweep_matches_binomial_second_moment() {
    let phi = OrliczFn::power(2.0);
    let mc = McConfig { trials: 200_000, seed: 6, ..McConfig::default() };
    let rows =
        sharpness_sweep(&phi, &[1.0, 4.0], &[8, 32], Mode::Classical, &mc, &MatrixParams::default()).unwrap();
    for r in rows {
        let exact = 2.0 - 1.0 / r.n as f64;
        assert!((r.ratio - exact).abs() <= 4.0 * r.ratio_se, "{r:?} vs {exact}");
    }
}

#[test]
fn sharpness_verdict_follows_delta2() {
    for (phi, expect) in [
        (r#"{"kind":"power","p":2.0}"#, SweepExpectation::Bounded),
        (r#"{"kind":"exp_minus_one","scale":1.0}"#, SweepExpectation::BlowUp),
    ] {
        let s = scenario(&format!(
            r#""mode":"classical","statistic":"sharpness","phi":{phi},
               "sweep":{{"a_values":[1.0,4.0,16.0],"n_values":[32,128]}},"mc":{{"trials":50000}}"#
        ));
        let r = run_scenario(&s, None).unwrap();
        let sweep = r.sweep.as_ref().unwrap();
        assert_eq!(sweep.expectation, expect);
        assert!(sweep.ok && r.pass, "{sweep:?}");
        assert_eq!(sweep.rows.len(), 6);
    }
}

#[test]
fn rhs_does_not_depend_on_the_seed() {
    let json = r#"{"scenarios":[{"id":"s","mode":"free","statistic":"sum",
        "parts":[{"kind":"atoms","atoms":[[2.0,0.1],[0.5,0.3]],"sign":"symmetrized","repeat":4}],
        "phi":{"kind":"power_log","p":2.0},"matrix":{"n_dim":128,"trials":2}}]}"#;
    let a = run_scenario(&resolve(json, Some(1)), None).unwrap();
    let b = run_scenario(&resolve(json, Some(2)), None).unwrap();
    assert_ne!(a.seed, b.seed);
    assert_ne!(a.lhs, b.lhs);
    assert_eq!((a.rhs_head, a.rhs_norm_term), (b.rhs_head, b.rhs_norm_term));
}

#[test]
fn bands_bind_only_for_delta2_phi() {
    let mut r = run_scenario(
        &scenario(
            r#""mode":"classical","statistic":"sum","parts":[{"kind":"scaled_indicator","a":1.0,"u":0.5}],
               "phi":{"kind":"power","p":2.0},"mc":{"trials":1000}"#,
        ),
        None,
    )
    .unwrap();
    assert!(r.pass);
    r.apply_band(Some([100.0, 200.0]));
    assert_eq!(r.band_ok, Some(false));
    assert!(!r.pass);

    let mut r = run_scenario(
        &scenario(
            r#""mode":"classical","statistic":"sum","parts":[{"kind":"scaled_indicator","a":1.0,"u":0.5}],
               "phi":{"kind":"exp_minus_one","scale":1.0},"mc":{"trials":1000}"#,
        ),
        None,
    )
    .unwrap();
    assert!(!r.delta2_ok);
    r.apply_band(Some([100.0, 200.0]));
    assert_eq!((r.band, r.band_ok), (None, None));
    assert!(r.pass);
}

#[test]
fn jensen_holds_on_bundled_classical_scenarios() {
    for name in ["classical_positive_sum", "classical_max"] {
        let cfg = phimoment::verifier::bundled_suite(name).unwrap();
        for s in cfg.resolve_all(None).unwrap().into_iter().take(4) {
            let r = run_scenario(&s, None).unwrap();
            assert!(r.lhs >= r.phi.eval_abs(r.statistic_mean) * (1.0 - 1e-9), "{}", r.id);
            assert!(r.jensen_ok, "{}", r.id);
        }
    }
}
