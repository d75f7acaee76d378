use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain: {0}")]
    Domain(String),
    #[error("basis: {0}")]
    Basis(String),
    #[error("aliasing guard: {0}")]
    Aliasing(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("certificate rejected ({name}): {msg}")]
    Certificate { name: String, msg: String },
    #[error("path aborted at t = {t}: {msg}")]
    Abort { t: f64, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
