//! Named configurations shipped with the tool. The files live in `presets/`.

use crate::config::RunConfig;
use crate::{CliError, CliResult};

const PRESETS: &[(&str, &str)] = &[
    ("app1-desk", include_str!("../presets/app1-desk.toml")),
    ("oracle-app1-desk", include_str!("../presets/oracle-app1-desk.toml")),
    ("app1-conservation", include_str!("../presets/app1-conservation.toml")),
    ("app1-paper", include_str!("../presets/app1-paper.toml")),
    ("app2-noninteracting", include_str!("../presets/app2-noninteracting.toml")),
    ("app2-small-n", include_str!("../presets/app2-small-n.toml")),
    ("oracle-app2-small-n", include_str!("../presets/oracle-app2-small-n.toml")),
    ("app2-paper-weak", include_str!("../presets/app2-paper-weak.toml")),
    ("app2-paper-strong", include_str!("../presets/app2-paper-strong.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> CliResult<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        CliError::Config(format!("unknown preset {name:?}; known: {}", names().collect::<Vec<_>>().join(", ")))
    })
}

/// Parses a preset; its output directory defaults to the preset name.
pub fn load(name: &str) -> CliResult<RunConfig> {
    let mut c = RunConfig::parse(text(name)?)?;
    if c.run.output.is_none() {
        c.run.output = Some(name.into());
    }
    Ok(c)
}
