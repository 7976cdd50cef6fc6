//! Experiment presets shipped with the harness.

const PRESETS: [(&str, &str); 9] = [
    ("table1", include_str!("../presets/table1.cfg")),
    ("table3_uniform", include_str!("../presets/table3_uniform.cfg")),
    ("table3_nonuniform", include_str!("../presets/table3_nonuniform.cfg")),
    ("test2_1", include_str!("../presets/test2_1.cfg")),
    ("test2_2", include_str!("../presets/test2_2.cfg")),
    ("stability", include_str!("../presets/stability.cfg")),
    ("convergence", include_str!("../presets/convergence.cfg")),
    ("diocotron_uniform", include_str!("../presets/diocotron_uniform.cfg")),
    ("diocotron_tjoint", include_str!("../presets/diocotron_tjoint.cfg")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}
