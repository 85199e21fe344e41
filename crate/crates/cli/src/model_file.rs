//! Text model format.
//!
//! ```text
//! igmdsr-model 1
//! variant nmf
//! widths 12 8 5 3
//! seed 0
//! raw_cols 6
//! means <raw_cols values>
//! stds <raw_cols values>
//! matrix V1 12 8
//! <one line per row, space separated>
//! ...
//! matrix W 3 12
//! ...
//! ```
//!
//! Matrices appear in the order `V1…Vs`, `Vtilde2…Vtildes`, `W`. Values use
//! the shortest decimal form that parses back to the identical `f64`.

use std::path::Path;

use igmdsr_core::model::weight_layout;
use igmdsr_core::preprocess::ZScoreStats;
use igmdsr_core::{ArchitectureSpec, Matrix, ModelParams, Variant};

use crate::data::{fmt_f64, write_atomic};
use crate::error::{CliError, CliResult};

const MAGIC: &str = "igmdsr-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub seed: u64,
    pub stats: ZScoreStats,
    pub params: ModelParams,
}

impl ModelFile {
    /// Width n′ of the raw (unfolded) data the model was trained on.
    pub fn raw_cols(&self) -> usize {
        self.stats.means.len()
    }

    pub fn to_text(&self) -> String {
        let join = |vals: &[f64]| {
            vals.iter()
                .map(|&v| fmt_f64(v))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let spec = &self.params.spec;
        let mut out = format!("{MAGIC} {VERSION}\n");
        out.push_str(&format!("variant {}\n", spec.variant().name()));
        let widths: Vec<String> = spec.widths().iter().map(|w| w.to_string()).collect();
        out.push_str(&format!("widths {}\n", widths.join(" ")));
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("raw_cols {}\n", self.raw_cols()));
        out.push_str(&format!("means {}\n", join(&self.stats.means)));
        out.push_str(&format!("stds {}\n", join(&self.stats.stds)));
        for ((kind, rows, cols), m) in weight_layout(spec).into_iter().zip(self.params.matrices()) {
            out.push_str(&format!("matrix {kind} {rows} {cols}\n"));
            for row in m.iter_rows() {
                out.push_str(&join(row));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut r = Lines::new(text);
        let (n, header) = r.next("header")?;
        if header != format!("{MAGIC} {VERSION}") {
            return Err(bad(n, format!("unsupported header '{header}'")));
        }
        let (n, v) = r.field("variant")?;
        let variant: Variant = v
            .first()
            .ok_or_else(|| bad(n, "missing variant".into()))?
            .parse()
            .map_err(|e| bad(n, format!("{e}")))?;
        let (n, v) = r.field("widths")?;
        let widths: Vec<usize> = nums(n, &v)?;
        let spec = ArchitectureSpec::new(widths, variant).map_err(|e| bad(n, e.to_string()))?;
        let (n, v) = r.field("seed")?;
        let seed = *nums::<u64>(n, &v)?
            .first()
            .ok_or_else(|| bad(n, "missing seed".into()))?;
        let (n, v) = r.field("raw_cols")?;
        let raw_cols = *nums::<usize>(n, &v)?
            .first()
            .ok_or_else(|| bad(n, "missing raw_cols".into()))?;
        let (n, v) = r.field("means")?;
        let means: Vec<f64> = nums(n, &v)?;
        let (_, v) = r.field("stds")?;
        let stds: Vec<f64> = nums(n + 1, &v)?;
        if means.len() != raw_cols || stds.len() != raw_cols {
            return Err(bad(n, format!("expected {raw_cols} means and stds")));
        }
        if 2 * raw_cols != spec.input_width() {
            return Err(bad(
                n,
                format!(
                    "raw width {raw_cols} does not fold to input width {}",
                    spec.input_width()
                ),
            ));
        }

        let mut matrices = Vec::new();
        for (kind, rows, cols) in weight_layout(&spec) {
            let (n, v) = r.field("matrix")?;
            if v.len() != 3
                || v[0] != kind.to_string()
                || nums::<usize>(n, &v[1..])? != [rows, cols]
            {
                return Err(bad(n, format!("expected 'matrix {kind} {rows} {cols}'")));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (n, line) = r.next("matrix row")?;
                let row: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if row.len() != cols {
                    return Err(bad(n, format!("expected {cols} values, got {}", row.len())));
                }
                data.extend(nums::<f64>(n, &row)?);
            }
            matrices.push(Matrix::new(rows, cols, data)?);
        }
        let s = spec.hidden_layers();
        let w = matrices.pop().expect("layout has W");
        let v_tilde = matrices.split_off(s);
        let params = ModelParams::from_parts(spec, matrices, v_tilde, w)?;
        Ok(Self {
            seed,
            stats: ZScoreStats { means, stds },
            params,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn bad(line: usize, msg: String) -> CliError {
    CliError::Input(format!("model file line {line}: {msg}"))
}

fn nums<T: std::str::FromStr>(line: usize, vals: &[String]) -> CliResult<Vec<T>> {
    vals.iter()
        .map(|v| {
            v.parse()
                .map_err(|_| bad(line, format!("bad number '{v}'")))
        })
        .collect()
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    fn next(&mut self, what: &str) -> CliResult<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| CliError::Input(format!("model file truncated: expected {what}")))
    }

    /// A `key value…` line.
    fn field(&mut self, key: &str) -> CliResult<(usize, Vec<String>)> {
        let (n, line) = self.next(key)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(n, format!("expected '{key}'")));
        }
        Ok((n, parts.map(str::to_string).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use igmdsr_core::model::xavier_init;

    fn sample(variant: Variant, seed: u64) -> ModelFile {
        let spec = ArchitectureSpec::new(vec![8, 6, 4, 2], variant).unwrap();
        ModelFile {
            seed,
            stats: ZScoreStats {
                means: vec![0.1, -3.5, 1e-17, 2.0 / 3.0],
                stds: vec![1.0, 0.0, 7.25, 1e300],
            },
            params: xavier_init(&spec, seed),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for (variant, seed) in [(Variant::Nmf, 3), (Variant::Rnmf, 99)] {
            let mf = sample(variant, seed);
            let back = ModelFile::parse(&mf.to_text()).unwrap();
            assert_eq!(back, mf);
            for (a, b) in back.params.matrices().zip(mf.params.matrices()) {
                assert!(a
                    .data()
                    .iter()
                    .zip(b.data())
                    .all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn rejects_corrupt_files() {
        let text = sample(Variant::Rnmf, 1).to_text();
        assert!(ModelFile::parse("").is_err());
        assert!(ModelFile::parse(&text.replacen("igmdsr-model 1", "igmdsr-model 2", 1)).is_err());
        assert!(ModelFile::parse(&text.replacen("variant rnmf", "variant pca", 1)).is_err());
        assert!(ModelFile::parse(&text.replacen("matrix W 2 8", "matrix W 2 7", 1)).is_err());
        let truncated: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
        assert!(ModelFile::parse(&truncated).is_err());
        // NMF files must carry a non-negative W
        let nmf = sample(Variant::Nmf, 1).to_text();
        let idx = nmf.find("matrix W").unwrap();
        let (head, tail) = nmf.split_at(idx);
        let mut tail_lines: Vec<String> = tail.lines().map(str::to_string).collect();
        tail_lines[1] = tail_lines[1].replacen(' ', " -", 1);
        let tampered = format!("{head}{}\n", tail_lines.join("\n"));
        assert!(ModelFile::parse(&tampered).is_err());
    }
}
