use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible parameters: {0}")]
    Params(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cone condition violated (|xidot| = {0})")]
    Cone(f64),
    #[error("curvature model: {0}")]
    Curvature(String),
    #[error("step size collapsed at t = {t} (h = {h:e})")]
    StepCollapse { t: f64, h: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("no sign change: {0}")]
    NoSignChange(String),
    #[error("newton iteration diverged: {0}")]
    Divergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
