//! Constructors for the state families used throughout the crate, seeded
//! random-state generators for property tests, and a textual state-spec
//! format.
//!
//! The spec format is one family per line, `family(param=value, …)`, parsed
//! case-insensitively. Values are plain floats or `pi` expressions
//! (`pi`, `pi/2`, `3pi/4`, `0.5pi`). A parameter may hold a vector: extra
//! comma-separated values without an `=` extend the preceding parameter, so
//! `smolin(n=4,c=0.5,0.5,0.5)` sets `c` to a 3-vector.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{kron_all, partial_trace, ComplexMatrix, HilbertShape, MultiState};
use crate::{Error, Result, SubsystemSet};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The Pauli matrix with 1-based index 1 = x, 2 = y, 3 = z.
pub fn pauli(i: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    match i {
        1 => {
            m.set(0, 1, c(1.0, 0.0));
            m.set(1, 0, c(1.0, 0.0));
        }
        2 => {
            m.set(0, 1, c(0.0, -1.0));
            m.set(1, 0, c(0.0, 1.0));
        }
        3 => {
            m.set(0, 0, c(1.0, 0.0));
            m.set(1, 1, c(-1.0, 0.0));
        }
        _ => panic!("Pauli index must be 1, 2 or 3"),
    }
    m
}

/// The maximally entangled bipartite state `(sum_s |ss>)/sqrt(d)`.
pub fn bell_phi_plus(d: usize) -> Result<MultiState> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "Bell state needs local dimension >= 2, got {d}"
        )));
    }
    let shape = HilbertShape::new(vec![d, d])?;
    let mut amps = vec![c(0.0, 0.0); d * d];
    let inv = 1.0 / (d as f64).sqrt();
    for s in 0..d {
        amps[s * d + s] = c(inv, 0.0);
    }
    MultiState::pure(shape, amps)
}

/// The Weyl shift-and-phase unitary `W_{k,l} |s> = w^(k(s-l)) |s-l mod d>`
/// with `w = exp(2 pi i / d)`.
pub fn weyl_operator(d: usize, k: usize, l: usize) -> Result<ComplexMatrix> {
    if k >= d || l >= d {
        return Err(Error::InvalidParameter(format!(
            "Weyl indices must lie in 0..{d}, got k={k}, l={l}"
        )));
    }
    let mut m = ComplexMatrix::zeros(d, d);
    for s in 0..d {
        let shift = s as i64 - l as i64;
        let row = shift.rem_euclid(d as i64) as usize;
        let angle = 2.0 * PI * (k as i64 * shift) as f64 / d as f64;
        m.set(row, s, c(angle.cos(), angle.sin()));
    }
    Ok(m)
}

/// The generalized Bell state `(W_{k,l} ⊗ 1) (sum_s |ss>)/sqrt(d)`.
pub fn generalized_bell(d: usize, k: usize, l: usize) -> Result<MultiState> {
    let w = weyl_operator(d, k, l)?;
    let shape = HilbertShape::new(vec![d, d])?;
    let mut amps = vec![c(0.0, 0.0); d * d];
    let inv = 1.0 / (d as f64).sqrt();
    for s in 0..d {
        for r in 0..d {
            let entry = w.get(r, s);
            if entry.norm_sqr() > 0.0 {
                amps[r * d + s] = entry * inv;
            }
        }
    }
    MultiState::pure(shape, amps)
}

/// The n-factor GHZ state `(sum_s |s…s>)/sqrt(d)`.
pub fn ghz(n: usize, d: usize) -> Result<MultiState> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "GHZ state needs at least 2 factors, got {n}"
        )));
    }
    let shape = HilbertShape::new(vec![d; n])?;
    let total = shape.total();
    let mut amps = vec![c(0.0, 0.0); total];
    let inv = 1.0 / (d as f64).sqrt();
    for s in 0..d {
        amps[shape.flat_index(&vec![s; n])] = c(inv, 0.0);
    }
    MultiState::pure(shape, amps)
}

/// The n-qubit W state: a uniform superposition of all single-excitation
/// basis states.
pub fn w_state(n: usize) -> Result<MultiState> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "W state needs at least 2 factors, got {n}"
        )));
    }
    let shape = HilbertShape::qubits(n)?;
    let mut amps = vec![c(0.0, 0.0); shape.total()];
    let inv = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        amps[1 << (n - 1 - j)] = c(inv, 0.0);
    }
    MultiState::pure(shape, amps)
}

/// The normalized three-qubit superposition
/// `p |GHZ> + (1-p) |phi+> ⊗ (cos(alpha)|0> + sin(alpha)|1>)`.
pub fn ghz_phi_mix(p: f64, alpha: f64) -> Result<MultiState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "superposition weight must lie in [0, 1], got {p}"
        )));
    }
    let inv = 1.0 / 2f64.sqrt();
    let (cos_a, sin_a) = (alpha.cos(), alpha.sin());
    let mut amps = vec![c(0.0, 0.0); 8];
    // GHZ part on |000> and |111>.
    amps[0] += c(p * inv, 0.0);
    amps[7] += c(p * inv, 0.0);
    // |phi+> ⊗ chi part on |000>, |001>, |110>, |111>.
    amps[0] += c((1.0 - p) * inv * cos_a, 0.0);
    amps[1] += c((1.0 - p) * inv * sin_a, 0.0);
    amps[6] += c((1.0 - p) * inv * cos_a, 0.0);
    amps[7] += c((1.0 - p) * inv * sin_a, 0.0);
    MultiState::pure_normalized(HilbertShape::qubits(3)?, amps)
}

/// The four-qubit rank-two mixture
/// `cos^2(alpha) |GHZ><GHZ| + sin^2(alpha) |phi+><phi+| ⊗ |phi+><phi+|`.
pub fn ghz_epr_mix(alpha: f64) -> Result<MultiState> {
    let shape = HilbertShape::qubits(4)?;
    let ghz4 = ghz(4, 2)?;
    let mut bells = vec![c(0.0, 0.0); 16];
    for idx in [0usize, 3, 12, 15] {
        bells[idx] = c(0.5, 0.0);
    }
    let ghz_proj = ComplexMatrix::outer(ghz4.amplitudes().unwrap(), ghz4.amplitudes().unwrap());
    let bell_proj = ComplexMatrix::outer(&bells, &bells);
    let (w_ghz, w_bell) = (alpha.cos().powi(2), alpha.sin().powi(2));
    let rho = ghz_proj
        .scale(c(w_ghz, 0.0))
        .add(&bell_proj.scale(c(w_bell, 0.0)))?;
    MultiState::density(shape, rho)
}

/// The generalized Smolin family `(1 + sum_i c_i sigma_i^(⊗n)) / 2^n` for
/// even `n`; positivity of the requested point is checked spectrally.
pub fn smolin(n: usize, coeffs: [f64; 3]) -> Result<MultiState> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "the Smolin family is defined for even factor counts >= 2, got {n}"
        )));
    }
    let shape = HilbertShape::qubits(n)?;
    let total = shape.total();
    let mut m = ComplexMatrix::identity(total);
    for (i, &ci) in coeffs.iter().enumerate() {
        if ci == 0.0 {
            continue;
        }
        let factors: Vec<ComplexMatrix> = (0..n).map(|_| pauli(i + 1)).collect();
        let term = kron_all(&factors);
        m = m.add(&term.scale(c(ci, 0.0)))?;
    }
    let rho = m.scale(c(1.0 / total as f64, 0.0));
    MultiState::density(shape, rho)
}

fn line_state(alpha: f64, beta: f64, split_beta: bool) -> Result<MultiState> {
    let d = 3usize;
    let shape = HilbertShape::new(vec![d, d])?;
    let total = shape.total();
    let mut rho = ComplexMatrix::identity(total).scale(c((1.0 - alpha - beta) / total as f64, 0.0));
    let add_projector = |rho: &mut ComplexMatrix, k: usize, l: usize, weight: f64| -> Result<()> {
        let bell = generalized_bell(d, k, l)?;
        let amps = bell.amplitudes().unwrap();
        let proj = ComplexMatrix::outer(amps, amps);
        *rho = rho.add(&proj.scale(c(weight, 0.0)))?;
        Ok(())
    };
    add_projector(&mut rho, 0, 0, alpha)?;
    if split_beta {
        add_projector(&mut rho, 0, 1, beta / 2.0)?;
        add_projector(&mut rho, 0, 2, beta / 2.0)?;
    } else {
        add_projector(&mut rho, 0, 1, beta)?;
    }
    MultiState::density(shape, rho)
}

/// Two-qutrit line state `(1-alpha-beta)/9 + alpha P00 + beta P01` built
/// from generalized-Bell projectors; errors outside the positivity region.
pub fn line_state_2(alpha: f64, beta: f64) -> Result<MultiState> {
    line_state(alpha, beta, false)
}

/// Two-qutrit line state `(1-alpha-beta)/9 + alpha P00 + beta/2 (P01 + P02)`;
/// errors outside the positivity region.
pub fn line_state_3(alpha: f64, beta: f64) -> Result<MultiState> {
    line_state(alpha, beta, true)
}

/// Haar-random pure state: complex standard-normal amplitudes, normalized.
pub fn random_pure(shape: &HilbertShape, rng: &mut impl Rng) -> MultiState {
    let amps: Vec<Complex64> = (0..shape.total())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        })
        .collect();
    MultiState::pure_normalized(shape.clone(), amps)
        .expect("random Gaussian amplitudes have nonzero norm")
}

/// Random mixed state of bounded rank: the partial trace of a Haar-random
/// pure state on `shape ⊗ ancilla(rank)`.
pub fn random_density(shape: &HilbertShape, rank: usize, rng: &mut impl Rng) -> MultiState {
    if rank <= 1 {
        let pure = random_pure(shape, rng);
        let rho = pure.density_matrix();
        return MultiState::density_trusted(shape.clone(), rho);
    }
    let mut dims = shape.dims().to_vec();
    dims.push(rank);
    let extended = HilbertShape::new(dims).expect("rank >= 2 keeps the ancilla dimension valid");
    let pure = random_pure(&extended, rng);
    let keep = SubsystemSet::full(shape.factor_count()).expect("shape has at least one factor");
    partial_trace(&pure, &keep).expect("kept factors are in range")
}

/// Parses a numeric literal with optional `pi` support: `0.25`, `pi`,
/// `-pi/2`, `3pi/4`, `0.5pi`, `2*pi/3`.
pub fn parse_number(token: &str) -> Result<f64> {
    let t = token.trim().to_ascii_lowercase();
    let parse_plain = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::SpecParse {
            column: 0,
            message: format!("cannot parse {what} `{s}` in `{token}`"),
        })
    };
    if let Some(idx) = t.find("pi") {
        let coef_str = t[..idx].trim().trim_end_matches('*').trim();
        let coef = match coef_str {
            "" => 1.0,
            "-" => -1.0,
            "+" => 1.0,
            s => parse_plain(s, "coefficient")?,
        };
        let rest = t[idx + 2..].trim();
        let divisor = if rest.is_empty() {
            1.0
        } else if let Some(denom) = rest.strip_prefix('/') {
            let d = parse_plain(denom.trim(), "divisor")?;
            if d == 0.0 {
                return Err(Error::SpecParse {
                    column: 0,
                    message: format!("division by zero in `{token}`"),
                });
            }
            d
        } else {
            return Err(Error::SpecParse {
                column: 0,
                message: format!("unexpected trailing `{rest}` after pi in `{token}`"),
            });
        };
        return Ok(coef * PI / divisor);
    }
    parse_plain(&t, "number")
}

/// A parsed textual state spec: family name plus named numeric parameters
/// (each possibly vector-valued).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    family: String,
    params: BTreeMap<String, Vec<f64>>,
}

const FAMILIES: &[(&str, &[&str])] = &[
    ("bell", &["d"]),
    ("gen_bell", &["d", "k", "l"]),
    ("ghz", &["n", "d"]),
    ("w", &["n"]),
    ("ghz_phi_mix", &["p", "alpha"]),
    ("ghz_epr_mix", &["alpha"]),
    ("smolin", &["n", "c"]),
    ("line2", &["alpha", "beta"]),
    ("line3", &["alpha", "beta"]),
    ("random_pure", &["dims", "seed"]),
    ("random_density", &["dims", "rank", "seed"]),
];

impl StateSpec {
    /// Parses `family(param=value, …)`; see the module docs for the grammar.
    pub fn parse(input: &str) -> Result<Self> {
        let text = input.trim();
        let err = |column: usize, message: String| Error::SpecParse { column, message };
        let (family_raw, inner) = match text.find('(') {
            Some(open) => {
                let close = text
                    .rfind(')')
                    .ok_or_else(|| err(text.len(), "missing closing parenthesis".to_string()))?;
                if close < open || !text[close + 1..].trim().is_empty() {
                    return Err(err(close, "unbalanced parentheses".to_string()));
                }
                (&text[..open], &text[open + 1..close])
            }
            None => (text, ""),
        };
        let family = family_raw.trim().to_ascii_lowercase();
        let known = FAMILIES
            .iter()
            .find(|(name, _)| *name == family)
            .ok_or_else(|| {
                let names: Vec<&str> = FAMILIES.iter().map(|(n, _)| *n).collect();
                err(
                    0,
                    format!(
                        "unknown family `{family}`; expected one of {}",
                        names.join(", ")
                    ),
                )
            })?;

        let mut params: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut last_key: Option<String> = None;
        let mut column = text.find('(').map(|i| i + 1).unwrap_or(0);
        for token in inner.split(',') {
            let token_col = column;
            column += token.len() + 1;
            let t = token.trim();
            if t.is_empty() {
                if inner.trim().is_empty() {
                    continue;
                }
                return Err(err(token_col, "empty parameter".to_string()));
            }
            if let Some(eq) = t.find('=') {
                let key = t[..eq].trim().to_ascii_lowercase();
                if !known.1.contains(&key.as_str()) {
                    return Err(err(
                        token_col,
                        format!(
                            "unknown parameter `{key}` for family `{family}`; expected one of {}",
                            known.1.join(", ")
                        ),
                    ));
                }
                if params.contains_key(&key) {
                    return Err(err(token_col, format!("duplicate parameter `{key}`")));
                }
                let value = parse_number(&t[eq + 1..])?;
                params.insert(key.clone(), vec![value]);
                last_key = Some(key);
            } else {
                let key = last_key.clone().ok_or_else(|| {
                    err(
                        token_col,
                        format!("value `{t}` appears before any `param=` introducer"),
                    )
                })?;
                params
                    .get_mut(&key)
                    .expect("last_key always names an inserted parameter")
                    .push(parse_number(t)?);
            }
        }
        Ok(Self { family, params })
    }

    /// The lowercased family name.
    pub fn family(&self) -> &str {
        &self.family
    }

    /// Sets or replaces a scalar parameter (used by scan sweeps).
    pub fn set_scalar(&mut self, key: &str, value: f64) {
        self.params.insert(key.to_ascii_lowercase(), vec![value]);
    }

    fn scalar(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(v) => Err(Error::InvalidParameter(format!(
                "parameter `{key}` expects a single value, got {} values",
                v.len()
            ))),
        }
    }

    fn integer(&self, key: &str, default: usize) -> Result<usize> {
        let value = self.scalar(key, default as f64)?;
        if value < 0.0 || value.fract().abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "parameter `{key}` must be a nonnegative integer, got {value}"
            )));
        }
        Ok(value.round() as usize)
    }

    fn vector(&self, key: &str, len: usize, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) if v.len() == len => Ok(v.clone()),
            Some(v) => Err(Error::InvalidParameter(format!(
                "parameter `{key}` expects {len} values, got {}",
                v.len()
            ))),
        }
    }

    fn dims(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .iter()
                .map(|&x| {
                    if x < 2.0 || x.fract().abs() > 1e-9 {
                        Err(Error::InvalidParameter(format!(
                            "`{key}` entries must be integer dimensions >= 2, got {x}"
                        )))
                    } else {
                        Ok(x.round() as usize)
                    }
                })
                .collect(),
        }
    }

    /// Builds the state described by the spec.
    pub fn build(&self) -> Result<MultiState> {
        match self.family.as_str() {
            "bell" => bell_phi_plus(self.integer("d", 2)?),
            "gen_bell" => generalized_bell(
                self.integer("d", 2)?,
                self.integer("k", 0)?,
                self.integer("l", 0)?,
            ),
            "ghz" => ghz(self.integer("n", 3)?, self.integer("d", 2)?),
            "w" => w_state(self.integer("n", 3)?),
            "ghz_phi_mix" => ghz_phi_mix(self.scalar("p", 1.0)?, self.scalar("alpha", 0.0)?),
            "ghz_epr_mix" => ghz_epr_mix(self.scalar("alpha", 0.0)?),
            "smolin" => {
                let coeffs = self.vector("c", 3, &[0.0, 0.0, 0.0])?;
                smolin(self.integer("n", 4)?, [coeffs[0], coeffs[1], coeffs[2]])
            }
            "line2" => line_state_2(self.scalar("alpha", 0.0)?, self.scalar("beta", 0.0)?),
            "line3" => line_state_3(self.scalar("alpha", 0.0)?, self.scalar("beta", 0.0)?),
            "random_pure" => {
                let shape = HilbertShape::new(self.dims("dims", &[2, 2])?)?;
                let mut rng = ChaCha12Rng::seed_from_u64(self.integer("seed", 0)? as u64);
                Ok(random_pure(&shape, &mut rng))
            }
            "random_density" => {
                let shape = HilbertShape::new(self.dims("dims", &[2, 2])?)?;
                let rank = self.integer("rank", 2)?;
                let mut rng = ChaCha12Rng::seed_from_u64(self.integer("seed", 0)? as u64);
                Ok(random_density(&shape, rank, &mut rng))
            }
            other => Err(Error::SpecParse {
                column: 0,
                message: format!("unknown family `{other}`"),
            }),
        }
    }
}
