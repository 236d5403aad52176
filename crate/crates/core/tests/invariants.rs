use drivetherm::models::{ModelSpec, Preset};
use drivetherm::solver::{assemble, steady_state, SteadyStateMethod, DEFAULT_TOL};
use drivetherm::thermo::thermo_report;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn model(kerr: bool, k: f64, f: f64, phase: f64, delta: f64, kappa: f64, n_c: f64) -> ModelSpec {
    let mut m = if kerr { Preset::Kerr.model() } else { Preset::Empty.model() };
    if kerr {
        m.set_parameter("intra.K", k).unwrap();
    }
    m.n_max = 22;
    m.drive.amplitude = C64::from_polar(f, phase);
    m.channels[0].rate = kappa;
    m.channels[0].occupation = n_c;
    m.set_parameter("drive.delta", delta).unwrap();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bookkeepings_agree_and_order(
        kerr in any::<bool>(),
        k in 0.01f64..0.3,
        f in 0.0f64..0.5,
        phase in 0.0f64..std::f64::consts::TAU,
        delta in -3.0f64..3.0,
        kappa in 0.5f64..2.0,
        n_c in 0.02f64..0.4,
    ) {
        let m = model(kerr, k, f, phase, delta, kappa, n_c);
        let l = assemble(&m).unwrap();
        let rho = steady_state(&l, SteadyStateMethod::Auto, DEFAULT_TOL).unwrap();
        let r = thermo_report(&m, &rho, 0.0).unwrap();
        let scale = r.p_conv.abs().max(r.j_c_conv.abs()).max(r.p_io.abs()).max(r.j_c_io.abs()).max(1e-300);
        prop_assert!(((r.p_conv + r.j_c_conv) - (r.p_io + r.j_c_io)).abs() <= 1e-9 * scale);
        prop_assert!(r.sigma_io >= -1e-9);
        prop_assert!(r.sigma_conv >= r.sigma_io - 1e-9);
        let t = drivetherm::models::occupation_to_temperature(n_c, m.omega_d()).unwrap();
        let gap = m.omega_d() * kappa * r.a_mean.norm_sqr() / t;
        prop_assert!(((r.sigma_conv - r.sigma_io) - gap).abs() <= 1e-9 * gap.max(r.sigma_conv.abs()).max(1e-12));
        prop_assert!(r.energy_balance().abs() <= 1e-8 * scale.max(m.omega_d() * kappa));
    }

    #[test]
    fn generator_preserves_trace(kerr in any::<bool>(), delta in -3.0f64..3.0, n_c in 0.0f64..2.0) {
        let m = model(kerr, 0.1, 0.2, 0.3, delta, 1.0, n_c);
        let l = assemble(&m).unwrap();
        prop_assert!(l.total.trace_defect() <= 1e-10 * l.total.inf_norm());
    }
}
