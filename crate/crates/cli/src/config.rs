//! Run configuration files: one `key=value` per line, `#` starts a comment.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use eat_core::train::TrainConfig;
use eat_core::EatConfig;

use crate::error::{CliError, Result};

/// Keys that belong to training rather than to the model.
pub const TRAIN_KEYS: &[&str] = &["lr", "momentum", "epochs", "batch_size"];
pub const PATH_KEYS: &[&str] = &["data", "out_ckpt"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub model: EatConfig,
    pub train: TrainConfig,
    pub data: Option<PathBuf>,
    pub out_ckpt: Option<PathBuf>,
    /// Keys that appeared in the file.
    pub explicit: BTreeSet<String>,
}

fn parse_num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}`"))
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| CliError::Config {
                path: path.to_path_buf(),
                line,
                msg,
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !cfg.explicit.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            match key {
                "lr" => cfg.train.lr = parse_num(value).map_err(err)?,
                "momentum" => cfg.train.momentum = parse_num(value).map_err(err)?,
                "epochs" => cfg.train.epochs = parse_num(value).map_err(err)?,
                "batch_size" => cfg.train.batch_size = parse_num(value).map_err(err)?,
                "data" => cfg.data = Some(PathBuf::from(value)),
                "out_ckpt" => cfg.out_ckpt = Some(PathBuf::from(value)),
                _ => match cfg.model.set(key, value) {
                    Ok(true) => {}
                    Ok(false) => return Err(err(format!("unknown key `{key}`"))),
                    Err(e) => return Err(err(e.to_string())),
                },
            }
        }
        cfg.train.seed = cfg.model.seed;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| eat_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, path)
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("run.cfg"))
    }

    #[test]
    fn reads_keys_and_comments() {
        let cfg = parse("# header\nlambda = 0.5\neta=1.5 # trailing\n\nlr=0.05\nepochs=3\nmode=baseline\ndata=/tmp/d\n").unwrap();
        assert_eq!(cfg.model.lambda, 0.5);
        assert_eq!(cfg.model.eta, 1.5);
        assert_eq!(cfg.train.lr, 0.05);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.model.mode, eat_core::Mode::Baseline);
        assert_eq!(cfg.data.as_deref(), Some(Path::new("/tmp/d")));
        assert!(cfg.is_explicit("lr") && !cfg.is_explicit("seed"));
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse("lr=0.1\n\nlearning_rate=3\n").unwrap_err().to_string();
        assert_eq!(err, "run.cfg:3: unknown key `learning_rate`");
    }

    #[test]
    fn bad_values_and_duplicates() {
        assert!(parse("epochs=many").unwrap_err().to_string().starts_with("run.cfg:1:"));
        assert!(parse("mode=fancy").is_err());
        assert!(parse("eta=1\neta=2").unwrap_err().to_string().contains(":2:"));
        assert!(parse("just words").is_err());
    }
}
