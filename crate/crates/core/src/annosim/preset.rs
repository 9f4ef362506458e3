use super::PatternSpec;
use crate::error::{contract, Result};

pub const PRESET_NAMES: [&str; 8] = [
    "IND-I", "IND-II", "IND-III", "IND-IV", "COR-I", "COR-II", "COR-III", "COR-IV",
];

/// A named pool of five pattern groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub groups: [PatternSpec; 5],
}

impl Preset {
    /// Annotators per group in the full-size presets.
    pub const GROUP_SIZE: usize = 50;

    pub fn by_name(name: &str) -> Result<Self> {
        use PatternSpec::{Copy, Dummy, Opposite, Supportive};
        let sym = PatternSpec::symmetric;
        let pair = PatternSpec::pair;
        let class = PatternSpec::classwise;
        let (name, groups) = match name {
            "IND-I" => (
                "IND-I",
                [sym(0.3), sym(0.5), pair(0.6), class(&[1, 3, 4, 6, 8]), Dummy],
            ),
            "IND-II" => (
                "IND-II",
                [sym(0.4), class(&[2, 5, 9]), pair(0.6), class(&[0, 6, 8]), Dummy],
            ),
            "IND-III" => (
                "IND-III",
                [pair(0.3), pair(0.6), class(&[0, 4, 5]), class(&[1, 3, 4, 6, 8]), Dummy],
            ),
            "IND-IV" => (
                "IND-IV",
                [sym(0.3), sym(0.5), sym(0.7), pair(0.5), pair(0.3)],
            ),
            "COR-I" => (
                "COR-I",
                [sym(0.4), class(&[2, 5, 9]), Dummy, Supportive, Opposite],
            ),
            "COR-II" => (
                "COR-II",
                [pair(0.5), class(&[0, 6, 8]), Supportive, Opposite, Copy],
            ),
            "COR-III" => (
                "COR-III",
                [pair(0.4), sym(0.5), Opposite, Supportive, Copy],
            ),
            "COR-IV" => (
                "COR-IV",
                [sym(0.5), pair(0.7), pair(0.3), Opposite, Supportive],
            ),
            other => {
                return contract(format!(
                    "unknown preset `{other}` (expected one of {})",
                    PRESET_NAMES.join(", ")
                ))
            }
        };
        Ok(Preset { name, groups })
    }

    /// `per_group` copies of each group's pattern, group by group, with the
    /// generator group index of every annotator.
    pub fn expand(&self, per_group: usize) -> (Vec<PatternSpec>, Vec<usize>) {
        let mut specs = Vec::with_capacity(5 * per_group);
        let mut groups = Vec::with_capacity(5 * per_group);
        for (g, spec) in self.groups.iter().enumerate() {
            for _ in 0..per_group {
                specs.push(spec.clone());
                groups.push(g);
            }
        }
        (specs, groups)
    }
}
