//! Built-in configurations, shipped as ordinary TOML files.

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "bipolar_paper")]
    BipolarPaper,
    #[value(name = "nmos_paper")]
    NmosPaper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::BipolarPaper => "bipolar_paper",
            Preset::NmosPaper => "nmos_paper",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Preset::BipolarPaper => include_str!("../presets/bipolar_paper.toml"),
            Preset::NmosPaper => include_str!("../presets/nmos_paper.toml"),
        }
    }
}
