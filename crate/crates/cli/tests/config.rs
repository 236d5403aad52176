use drivetherm::models::Preset;
use drivetherm_cli::config::Config;

const FULL: &str = r#"
[units]
kappa = 2.0

[cavity]
omega = 2e4
n_max = 16

[drive]
f_re = 0.2
f_im = -0.1
delta = 0.5

[intra]
kind = "tls"
g = 0.2
omega_q = 2.0001e4

[[channel]]
label = "port"
kind = "cavity-accessible"
rate = 2.0
n = 0.1

[[channel]]
label = "loss"
kind = "cavity-inaccessible"
rate = 0.5
T = 5e3

[[channel]]
label = "qubit"
kind = "intra"
rate = 0.1
n = 0.05
transitions = [[0, 1]]

[set]
"channels.qubit.rate" = 0.2

[solver]
method = "sparse-direct"
tol = 1e-11

[sweep]
parameter = "drive.delta"
grid = { start = -1.0, stop = 1.0, count = 5 }
outputs = ["Sigma_io"]

[evolve]
initial = "coherent:0.1,0"
t_end = 3.0
"#;

#[test]
fn parse_serialize_parse_is_identity() {
    let c = Config::parse(FULL).unwrap();
    let again = Config::parse(&c.to_toml()).unwrap();
    assert_eq!(c, again);
    for p in Preset::ALL {
        let c = Config::from_model(&p.model());
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }
}

#[test]
fn full_description_builds_the_model() {
    let m = Config::parse(FULL).unwrap().model(None).unwrap();
    assert_eq!(m.omega_cavity, 1e4);
    assert_eq!(m.detuning(), 0.25);
    assert_eq!(m.channels.len(), 3);
    assert_eq!(m.channels[0].rate, 1.0);
    assert_eq!(m.channel("qubit").unwrap().rate, 0.1);
    let loss = m.channel("loss").unwrap();
    let t = m.temperature(loss).unwrap();
    assert!((t - 2.5e3).abs() < 1e-8 * 2.5e3);
    m.validate().unwrap();
}

#[test]
fn presets_survive_conversion() {
    for p in Preset::ALL {
        let m = p.model();
        let back = Config::parse(&Config::from_model(&m).to_toml()).unwrap().model(None).unwrap();
        assert_eq!(back, m, "{p}");
    }
}

#[test]
fn missing_pieces_are_named() {
    let e = Config::parse("[cavity]\nomega = 1e4\n").unwrap().model(None).unwrap_err();
    assert!(e.message.contains("cavity.n_max"), "{}", e.message);
    let e = Config::parse("preset = \"tls\"\n[intra]\nkind = \"kerr\"\n").unwrap().model(None).unwrap_err();
    assert!(e.message.contains("intra.K"), "{}", e.message);
    let e = Config::parse("preset = \"empty\"\n[[channel]]\nlabel = \"c\"\nkind = \"cavity-accessible\"\nrate = 1\n")
        .unwrap()
        .model(None)
        .unwrap_err();
    assert!(e.message.contains("exactly one"), "{}", e.message);
}
