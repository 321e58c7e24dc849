use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("order {order} exceeds the configured maximum {max}")]
    OrderOverflow { order: usize, max: usize },
    #[error("argument {value} outside the domain: {what}")]
    Domain { value: f64, what: &'static str },
    #[error("Pochhammer symbol ({a})_{n} hits a pole")]
    Pole { a: f64, n: i64 },
    #[error("value overflows binary64: {0}")]
    Overflow(String),
    #[error("amplitude denominator vanishes for l={l}")]
    DegenerateDenominator { l: usize },
    #[error("closed-form radial integral undefined for a lossless sphere (Im eps = {im_eps:e})")]
    Lossless { im_eps: f64 },
    #[error("unsupported exponent n={n} for {family}")]
    UnsupportedN { n: i32, family: &'static str },
    #[error("recursion terminates: 2l+n+3 = 0 at l={l}, n={n}")]
    RecursionTermination { l: i64, n: i32 },
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },
    #[error("series not converged at zeta={zeta}, lmax={lmax}: {detail}")]
    Convergence { zeta: f64, lmax: usize, detail: String },
    #[error("l_max {lmax} exceeds cap {cap}")]
    LmaxCap { lmax: usize, cap: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
