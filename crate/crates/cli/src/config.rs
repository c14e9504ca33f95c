//! `key = value` study configuration files.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use wg_stokes::study::StudyConfig;

/// Applies a config file on top of `cfg`. Blank lines and `#` comments are
/// ignored; keys accept `-` or `_`.
pub fn apply(cfg: &mut StudyConfig, text: &str) -> Result<()> {
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').with_context(|| format!("line {}: expected key = value", no + 1))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim().trim_matches('"');
        let ctx = || format!("line {}: bad value for {key}: '{value}'", no + 1);
        match key.as_str() {
            "k" => cfg.k = value.parse().with_context(ctx)?,
            "n0" => cfg.n0 = value.parse().with_context(ctx)?,
            "levels" => cfg.levels = value.parse().with_context(ctx)?,
            "case" => cfg.case = value.to_string(),
            "format" => cfg.format = value.parse().with_context(ctx)?,
            "tol" => cfg.tol = value.parse().with_context(ctx)?,
            "deterministic" => cfg.deterministic = value.parse().with_context(ctx)?,
            "dump_mesh" => cfg.dump_mesh = Some(PathBuf::from(value)),
            "dump_system" => cfg.dump_system = Some(PathBuf::from(value)),
            "max_unknowns" => cfg.max_unknowns = value.parse().with_context(ctx)?,
            _ => bail!("line {}: unknown key '{key}'", no + 1),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use wg_stokes::study::OutputFormat;

    #[test]
    fn parses_all_keys() {
        let mut c = StudyConfig::default();
        apply(
            &mut c,
            "# study\nk = 1\nn0=5\nlevels = 2\ncase = shear\nformat = json\ntol = 1e-9\n\
             deterministic = true\ndump-mesh = m.txt\nmax_unknowns = 1000\n",
        )
        .unwrap();
        assert_eq!((c.k, c.n0, c.levels), (1, 5, 2));
        assert_eq!(c.case, "shear");
        assert_eq!(c.format, OutputFormat::Json);
        assert_eq!(c.tol, 1e-9);
        assert!(c.deterministic);
        assert_eq!(c.dump_mesh, Some(PathBuf::from("m.txt")));
        assert_eq!(c.max_unknowns, 1000);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut c = StudyConfig::default();
        assert!(apply(&mut c, "colour = red").is_err());
        assert!(apply(&mut c, "k = two").is_err());
        assert!(apply(&mut c, "just text").is_err());
    }
}
