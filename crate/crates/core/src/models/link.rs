//! Declarative link functions `y | W^T z`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};

/// Largest polynomial degree accepted by [`LinkSpec::Polynomial`].
pub const POLY_MAX_DEGREE: usize = 4;
/// Largest Hermite degree accepted by [`ScalarLink::Hermite`].
pub const HERMITE_MAX_DEGREE: usize = 8;

/// Scalar link `phi(x)` of a Gaussian single-index model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScalarLink {
    Linear,
    /// Normalised Hermite polynomial `He_k(x) / sqrt(k!)`.
    Hermite(usize),
    Abs,
    Relu,
    Sign,
}

impl ScalarLink {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarLink::Linear => x,
            ScalarLink::Hermite(k) => hermite_normalized(k, x),
            ScalarLink::Abs => x.abs(),
            ScalarLink::Relu => x.max(0.0),
            ScalarLink::Sign => sign(x),
        }
    }
}

impl TryFrom<String> for ScalarLink {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.as_str() {
            "linear" => Ok(ScalarLink::Linear),
            "abs" => Ok(ScalarLink::Abs),
            "relu" => Ok(ScalarLink::Relu),
            "sign" => Ok(ScalarLink::Sign),
            _ => {
                if let Some(k) = s.strip_prefix("hermite:") {
                    let k: usize = k.parse().map_err(|_| format!("bad hermite degree in {s:?}"))?;
                    Ok(ScalarLink::Hermite(k))
                } else {
                    Err(format!("unknown scalar link {s:?} (linear, hermite:<k>, abs, relu, sign)"))
                }
            }
        }
    }
}

impl From<ScalarLink> for String {
    fn from(l: ScalarLink) -> String {
        match l {
            ScalarLink::Linear => "linear".into(),
            ScalarLink::Hermite(k) => format!("hermite:{k}"),
            ScalarLink::Abs => "abs".into(),
            ScalarLink::Relu => "relu".into(),
            ScalarLink::Sign => "sign".into(),
        }
    }
}

/// Vector link `psi(x)` of a Gaussian multi-index model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorLink {
    /// `prod_i x_i`
    Product,
    /// `sign(prod_i x_i)`
    SignProduct,
    /// `(|x|^2 - s) / sqrt(2 s)`
    SumSquares,
}

impl VectorLink {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            VectorLink::Product => x.iter().product(),
            VectorLink::SignProduct => sign(x.iter().product()),
            VectorLink::SumSquares => {
                let s = x.len() as f64;
                (x.iter().map(|v| v * v).sum::<f64>() - s) / (2.0 * s).sqrt()
            }
        }
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `He_k(x) / sqrt(k!)` with probabilists' Hermite polynomials.
pub fn hermite_normalized(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return 1.0;
    }
    let mut norm = 1.0f64;
    for n in 1..k {
        let p2 = x * p1 - n as f64 * p0;
        p0 = p1;
        p1 = p2;
        norm *= (n + 1) as f64;
    }
    p1 / norm.sqrt()
}

/// Conditional law of the label given the projection `W^T z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkSpec {
    /// `sign(prod_i <w_i, z>) + sigma N(0,1)`.
    Parity { s: usize, sigma: f64 },
    /// Parity over the first `k1` directions with probability `p`, otherwise
    /// parity over `k2` directions sharing `k0` of them.
    MixtureOfParities { k0: usize, k1: usize, k2: usize, p: f64, sigma: f64 },
    /// `sum_t sign(prod_{i in terms[t]} <w_i, z>) + sigma N(0,1)`.
    Staircase {
        #[serde(default = "default_staircase")]
        terms: Vec<Vec<usize>>,
        sigma: f64,
    },
    /// Label `(phi(r <w, z>) + sigma N, r)` with `r ~ chi_d`.
    GaussianSim { link: ScalarLink, sigma: f64 },
    /// Label `(psi(r W^T z) + sigma N, r)` with `r ~ chi_d`.
    GaussianMim { link: VectorLink, s: usize, sigma: f64 },
    /// A Gaussian model whose radial coordinate is not observed.
    Directional { inner: Box<LinkSpec> },
    /// `c0 + sum_j <C_j, (sqrt(d) W^T z)^{(x) j}> + sigma N(0,1)`; `coeffs[j-1]`
    /// is the dense order-`j` tensor `C_j` over `R^s`.
    Polynomial { s: usize, c0: f64, coeffs: Vec<Vec<f64>>, sigma: f64 },
    /// `sigma N(0,1)`, independent of the input.
    Independent { s: usize, sigma: f64 },
}

pub fn default_staircase() -> Vec<Vec<usize>> {
    vec![vec![0], vec![0, 1, 2]]
}

impl LinkSpec {
    /// Rank `s` of the planted frame.
    pub fn s(&self) -> usize {
        match self {
            LinkSpec::Parity { s, .. } => *s,
            LinkSpec::MixtureOfParities { k0, k1, k2, .. } => k1 + k2 - k0,
            LinkSpec::Staircase { terms, .. } => {
                terms.iter().flatten().copied().max().map_or(0, |m| m + 1)
            }
            LinkSpec::GaussianSim { .. } => 1,
            LinkSpec::GaussianMim { s, .. } => *s,
            LinkSpec::Directional { inner } => inner.s(),
            LinkSpec::Polynomial { s, .. } => *s,
            LinkSpec::Independent { s, .. } => *s,
        }
    }

    /// Number of real label coordinates.
    pub fn label_arity(&self) -> usize {
        match self {
            LinkSpec::GaussianSim { .. } | LinkSpec::GaussianMim { .. } => 2,
            _ => 1,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            LinkSpec::Parity { sigma, .. }
            | LinkSpec::MixtureOfParities { sigma, .. }
            | LinkSpec::Staircase { sigma, .. }
            | LinkSpec::GaussianSim { sigma, .. }
            | LinkSpec::GaussianMim { sigma, .. }
            | LinkSpec::Polynomial { sigma, .. }
            | LinkSpec::Independent { sigma, .. } => *sigma,
            LinkSpec::Directional { inner } => inner.sigma(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigma = self.sigma();
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if self.s() == 0 {
            return Err(invalid("link index s must be >= 1"));
        }
        match self {
            LinkSpec::MixtureOfParities { k0, k1, k2, p, .. } => {
                if !(k0 < k1 && k1 < k2) {
                    return Err(invalid("mixture requires k0 < k1 < k2"));
                }
                if !(*p > 0.0 && *p < 0.5) {
                    return Err(invalid("mixture probability p must lie in (0, 1/2)"));
                }
            }
            LinkSpec::Staircase { terms, .. } => {
                if terms.is_empty() || terms.iter().any(|t| t.is_empty()) {
                    return Err(invalid("staircase terms must be nonempty"));
                }
            }
            LinkSpec::GaussianSim { link: ScalarLink::Hermite(k), .. } if *k > HERMITE_MAX_DEGREE => {
                return Err(invalid(format!("hermite degree {k} exceeds cap {HERMITE_MAX_DEGREE}")));
            }
            LinkSpec::Directional { inner } => {
                if !matches!(**inner, LinkSpec::GaussianSim { .. } | LinkSpec::GaussianMim { .. }) {
                    return Err(invalid("directional wraps a Gaussian SIM or MIM"));
                }
                inner.validate()?;
            }
            LinkSpec::Polynomial { s, coeffs, .. } => {
                if coeffs.len() > POLY_MAX_DEGREE {
                    return Err(invalid(format!("polynomial degree exceeds cap {POLY_MAX_DEGREE}")));
                }
                for (j, c) in coeffs.iter().enumerate() {
                    if c.len() != s.pow(j as u32 + 1) {
                        return Err(invalid(format!("coefficient tensor of degree {} needs {} entries", j + 1, s.pow(j as u32 + 1))));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical JSON text, used for hashing and reports.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("link specs serialise")
    }

    /// Short content hash.
    pub fn hash(&self) -> u64 {
        let out = Sha256::digest(self.canonical().as_bytes());
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }

    /// Draw a label given `u = W^T z` (length `s`) in ambient dimension `d`.
    ///
    /// Randomness is consumed in a fixed order: Bernoulli mixture flag, radial
    /// coordinate, additive noise.
    pub fn label<R: Rng + ?Sized>(&self, u: &[f64], d: usize, rng: &mut R) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.s());
        match self {
            LinkSpec::Parity { sigma, .. } => {
                let y = sign(u.iter().product());
                vec![y + sigma * normal(rng)]
            }
            LinkSpec::MixtureOfParities { k0, k1, k2, p, sigma } => {
                let eta = rng.gen::<f64>() < *p;
                let small = sign(u[..*k1].iter().product());
                let start = k1 - k0;
                let large = sign(u[start..start + k2].iter().product());
                let y = if eta { small } else { large };
                vec![y + sigma * normal(rng)]
            }
            LinkSpec::Staircase { terms, sigma } => {
                let y: f64 = terms.iter().map(|t| sign(t.iter().map(|&i| u[i]).product())).sum();
                vec![y + sigma * normal(rng)]
            }
            LinkSpec::GaussianSim { link, sigma } => {
                let r = chi(d, rng);
                let y = link.eval(r * u[0]);
                vec![y + sigma * normal(rng), r]
            }
            LinkSpec::GaussianMim { link, sigma, .. } => {
                let r = chi(d, rng);
                let x: Vec<f64> = u.iter().map(|v| r * v).collect();
                vec![link.eval(&x) + sigma * normal(rng), r]
            }
            LinkSpec::Directional { inner } => {
                let mut y = inner.label(u, d, rng);
                y.truncate(1);
                y
            }
            LinkSpec::Polynomial { s, c0, coeffs, sigma } => {
                let x: Vec<f64> = u.iter().map(|v| v * (d as f64).sqrt()).collect();
                let mut y = *c0;
                let mut power = vec![1.0];
                for c in coeffs {
                    let mut next = Vec::with_capacity(power.len() * s);
                    for p in &power {
                        next.extend(x.iter().map(|xi| p * xi));
                    }
                    power = next;
                    y += c.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>();
                }
                vec![y + sigma * normal(rng)]
            }
            LinkSpec::Independent { sigma, .. } => vec![sigma * normal(rng)],
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `r ~ chi_d` as the square root of a `Gamma(d/2, 2)` draw.
pub fn chi<R: Rng + ?Sized>(d: usize, rng: &mut R) -> f64 {
    Gamma::new(d as f64 / 2.0, 2.0).expect("valid gamma").sample(rng).sqrt()
}
