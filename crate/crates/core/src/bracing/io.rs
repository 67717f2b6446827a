//! Text persistence for [`BracingSet`].
//!
//! ```text
//! # bfcr bracing set
//! [params]
//! d = 12
//! c_fc = 27
//! z = 12
//! e = 0
//! n_over = 20
//!
//! [left_unit]
//! 1.0000000000000000e0
//! ...
//! ```
//!
//! followed by `[right_unit]`, `[cont_from_left]` and `[cont_from_right]`
//! blocks, one value per line with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BracingSet, FcParams};
use crate::error::{BfcrError, Result};

const BLOCKS: [&str; 4] = [
    "left_unit",
    "right_unit",
    "cont_from_left",
    "cont_from_right",
];

impl BracingSet {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let _ = writeln!(out, "# bfcr bracing set");
        let _ = writeln!(out, "[params]");
        let _ = writeln!(out, "d = {}", p.d);
        let _ = writeln!(out, "c_fc = {}", p.c_fc);
        let _ = writeln!(out, "z = {}", p.z);
        let _ = writeln!(out, "e = {}", p.e);
        let _ = writeln!(out, "n_over = {}", p.n_over);
        for (name, block) in BLOCKS.iter().zip([
            &self.left_unit,
            &self.right_unit,
            &self.cont_from_left,
            &self.cont_from_right,
        ]) {
            let _ = writeln!(out, "\n[{name}]");
            for v in block {
                let _ = writeln!(out, "{v:.16e}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut params: [Option<usize>; 5] = [None; 5];
        let mut blocks: [Option<Vec<f64>>; 4] = Default::default();
        let mut section: Option<String> = None;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if let Some(b) = BLOCKS.iter().position(|&n| n == name) {
                    if blocks[b].is_some() {
                        return Err(parse_err(line_no, format!("duplicate block [{name}]")));
                    }
                    blocks[b] = Some(Vec::new());
                } else if name != "params" {
                    return Err(parse_err(line_no, format!("unknown block [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            match section.as_deref() {
                Some("params") => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| parse_err(line_no, "expected key = value".into()))?;
                    let slot = match key.trim() {
                        "d" => 0,
                        "c_fc" => 1,
                        "z" => 2,
                        "e" => 3,
                        "n_over" => 4,
                        other => {
                            return Err(parse_err(line_no, format!("unknown parameter {other:?}")))
                        }
                    };
                    let v = value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| parse_err(line_no, e.to_string()))?;
                    params[slot] = Some(v);
                }
                Some(name) => {
                    let b = BLOCKS
                        .iter()
                        .position(|&n| n == name)
                        .expect("block section");
                    let v = line
                        .parse::<f64>()
                        .map_err(|e| parse_err(line_no, format!("{line:?}: {e}")))?;
                    if !v.is_finite() {
                        return Err(BfcrError::NonFiniteValue {
                            location: format!("line {line_no}"),
                        });
                    }
                    blocks[b].as_mut().expect("opened").push(v);
                }
                None => return Err(parse_err(line_no, "value outside of a block".into())),
            }
        }

        let missing =
            |what: &str| BfcrError::InvalidParams(format!("bracing file is missing {what}"));
        let params = FcParams {
            d: params[0].ok_or_else(|| missing("d"))?,
            c_fc: params[1].ok_or_else(|| missing("c_fc"))?,
            z: params[2].ok_or_else(|| missing("z"))?,
            e: params[3].ok_or_else(|| missing("e"))?,
            n_over: params[4].ok_or_else(|| missing("n_over"))?,
        };
        params.validate()?;

        let [left_unit, right_unit, cont_from_left, cont_from_right] = blocks;
        let left_unit = left_unit.ok_or_else(|| missing("[left_unit]"))?;
        let right_unit = right_unit.ok_or_else(|| missing("[right_unit]"))?;
        let cont_from_left = cont_from_left.ok_or_else(|| missing("[cont_from_left]"))?;
        let cont_from_right = cont_from_right.ok_or_else(|| missing("[cont_from_right]"))?;

        for (block, expected) in [
            (&left_unit, params.d),
            (&right_unit, params.d),
            (&cont_from_left, params.c_fc),
            (&cont_from_right, params.c_fc),
        ] {
            if block.len() != expected {
                return Err(BfcrError::ShapeError {
                    expected,
                    got: block.len(),
                });
            }
        }
        if left_unit[params.d - 1] != 1.0 || right_unit[0] != 1.0 {
            return Err(BfcrError::InvalidParams(
                "brace anchors must be exactly 1".into(),
            ));
        }

        let set = BracingSet {
            params,
            left_unit,
            right_unit,
            cont_from_left,
            cont_from_right,
        };
        set.check_bounded()?;
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn parse_err(line: u64, message: String) -> BfcrError {
    BfcrError::Parse { line, message }
}
