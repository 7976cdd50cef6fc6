use mps::config::{ExperimentConfig, ExperimentKind, RawConfig};
use mps::{load_config, presets, Overrides};

#[test]
fn every_preset_parses_and_echo_round_trips() {
    for name in presets::names() {
        let cfg = ExperimentConfig::parse(presets::get(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg.name, name);
        let again = ExperimentConfig::parse(&cfg.echo()).unwrap_or_else(|e| panic!("{name} echo: {e}"));
        assert_eq!(again, cfg, "{name}");
    }
}

fn parse_err(text: &str) -> String {
    ExperimentConfig::parse(text).unwrap_err().to_string()
}

#[test]
fn malformed_configs_are_rejected_with_a_line() {
    let base = "[experiment]\nname = x\nkind = coefficients\n[coefficients]\nn = 5\n";
    assert!(ExperimentConfig::parse(base).is_ok());

    let e = parse_err("[experiment]\nname = x\nkind = nonsense\n");
    assert!(e.contains("line 3"), "{e}");
    let e = parse_err(&format!("{base}colour = red\n"));
    assert!(e.contains("colour"), "{e}");
    assert!(parse_err(&format!("{base}[experiment]\nname = y\n")).contains("experiment"));
    assert!(!parse_err("[experiment]\nname = x\nname = y\nkind = coefficients\n").is_empty());
    assert!(!parse_err(&format!("{base}[nowhere]\n")).is_empty());
    assert!(!parse_err("[experiment\nname = x\n").is_empty());

    let layout = "[experiment]\nname = x\nkind = interpolation\n[layout]\n";
    // Break points out of order, a non-integer cell count, a bad expression.
    assert!(!parse_err(&format!("{layout}[band]\nr = 1 : 0 : 8\ntheta = 0 : 2pi : 16\n")).is_empty());
    assert!(!parse_err(&format!("{layout}[band]\nr = 0 : 1 : 8.5\ntheta = 0 : 2pi : 16\n")).is_empty());
    assert!(!parse_err(&format!("{layout}[band]\nr = 0 : 1 : 8\ntheta = 0 : 2pie : 16\n")).is_empty());
    assert!(!parse_err(&format!("{layout}[band]\nr = 0 : 1 : 8\ntheta = 0 : 2pi : 16\n[plan]\nmodes = truncated:0\n")).is_empty());
}

#[test]
fn overlay_and_overrides_layer_on_the_preset() {
    let over = "[experiment]\nname = small\n[band]\nr = 0 : 1 : 16\ntheta = 0 : 2pi : 32\n";
    let ov = Overrides { mode: Some("truncated:7".into()), seed: Some(99) };
    let cfg = load_config(Some("table3_uniform"), Some(over), &ov).unwrap();
    assert_eq!(cfg.name, "small");
    assert_eq!(cfg.kind, ExperimentKind::Interpolation);
    // The overlay's bands replace all of the preset's bands.
    assert_eq!(cfg.layout.as_ref().unwrap().bands.len(), 1);
    assert_eq!(cfg.modes, vec![mpspline::line::PlanMode::Truncated(7)]);
    assert_eq!(cfg.seed, 99);

    assert!(load_config(Some("no_such_preset"), None, &Overrides::default()).is_err());
    assert!(load_config(None, None, &Overrides::default()).is_err());
    let bad_mode = Overrides { mode: Some("fast".into()), seed: None };
    assert!(load_config(Some("table1"), None, &bad_mode).is_err());
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let raw = RawConfig::parse("# top\n\n[experiment]   # trailing\nname = a # note\nkind = coefficients\n[coefficients]\nn = 5\n").unwrap();
    let cfg = ExperimentConfig::from_raw(&raw).unwrap();
    assert_eq!(cfg.name, "a");
}
