use drivetherm::audit::{audit_model_with, fuzz, AuditOptions, Fault, FuzzRanges, Status};
use drivetherm::models::Preset;

#[test]
fn fuzzing_is_deterministic_and_ordered() {
    let ranges = FuzzRanges { families: vec![Preset::Empty, Preset::Kerr, Preset::Tls], ..FuzzRanges::default() };
    let a = fuzz(11, 12, &ranges);
    let b = fuzz(11, 12, &ranges);
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        assert_eq!(x.seed, Some((11, i)));
        assert_eq!(x.digest(), y.digest());
        assert!(x.passed(), "{x}");
    }
    let c = fuzz(12, 12, &ranges);
    assert!(a.iter().zip(&c).any(|(x, y)| x.model_fingerprint != y.model_fingerprint));
}

#[test]
fn zero_temperature_draws_take_the_sentinel_path() {
    let ranges = FuzzRanges {
        families: vec![Preset::Empty, Preset::Kerr],
        zero_temperature: 1.0,
        inaccessible: 0.0,
        second_port: 0.0,
        ..FuzzRanges::default()
    };
    for r in fuzz(3, 6, &ranges) {
        assert!(r.passed(), "{r}");
        assert_eq!(r.check("gap-identity").unwrap().status, Status::Skipped);
        let t = r.thermo.as_ref().unwrap();
        if t.a_mean.norm() > 1e-6 {
            assert_eq!(t.sigma_conv, f64::INFINITY);
        }
    }
}

#[test]
fn mismatched_dynamics_fail_the_fixed_point_check() {
    for preset in [Preset::Kerr, Preset::Tls] {
        let mut m = preset.model();
        m.n_max = 20;
        let opts = AuditOptions {
            fault: Some(Fault::CavityOccupationMismatch { dynamics_occupation: m.channels[0].occupation + 0.2 }),
            ..AuditOptions::default()
        };
        let r = audit_model_with(&m, &opts);
        assert_eq!(r.check("fixed-point-conventional").unwrap().status, Status::Fail, "{r}");
        assert!(!r.passed());
    }
}
