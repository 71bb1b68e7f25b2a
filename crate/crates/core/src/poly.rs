//! Sparse multivariate polynomials and polynomial systems.

use crate::error::{Error, Result};
use crate::multiindex::{binomial, MultiIndex};
use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeMap, HashMap};

/// Coefficients below this magnitude are dropped.
pub const COEFF_TOL: f64 = 1e-12;

/// Polynomial as a list of `(coefficient, monomial)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<(f64, MultiIndex)>,
}

impl Polynomial {
    /// Merge equal monomials and drop coefficients below `tol`.
    pub fn from_terms(terms: impl IntoIterator<Item = (f64, MultiIndex)>, tol: f64) -> Self {
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (c, m) in terms {
            *acc.entry(m).or_insert(0.0) += c;
        }
        let mut terms: Vec<(f64, MultiIndex)> = acc
            .into_iter()
            .filter(|(_, c)| c.abs() >= tol)
            .map(|(m, c)| (c, m))
            .collect();
        // Highest degree first, then lexicographically decreasing exponents.
        terms.sort_by(|a, b| b.1.order().cmp(&a.1.order()).then_with(|| b.1.cmp(&a.1)));
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, m)| m.order()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, m)| c * m.monomial(x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (c, m) in &self.terms {
            for j in 0..x.len() {
                let aj = m.0[j];
                if aj == 0 {
                    continue;
                }
                let mut d = m.clone();
                d.0[j] -= 1;
                g[j] += c * aj as f64 * d.monomial(x);
            }
        }
        g
    }

    /// Text form `c*x1^2*x3 + c*x2`, with exponent 1 omitted.
    pub fn to_text(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(c, m)| {
                let mut s = format!("{c:e}");
                for (j, &a) in m.0.iter().enumerate() {
                    match a {
                        0 => {}
                        1 => s.push_str(&format!("*{}", names[j])),
                        _ => s.push_str(&format!("*{}^{a}", names[j])),
                    }
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Parse the output of [`Polynomial::to_text`].
    pub fn parse(text: &str, names: &[String]) -> Result<Self> {
        let text = text.trim();
        if text == "0" {
            return Ok(Self::default());
        }
        let lookup: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut terms = Vec::new();
        for term in text.split(" + ") {
            let mut parts = term.trim().split('*');
            let c: f64 = parts
                .next()
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad coefficient in `{term}`")))?;
            let mut m = MultiIndex::zeros(names.len());
            for f in parts {
                let (var, exp) = match f.split_once('^') {
                    Some((v, e)) => (
                        v,
                        e.parse::<usize>()
                            .map_err(|_| Error::InvalidInput(format!("bad exponent in `{term}`")))?,
                    ),
                    None => (f, 1),
                };
                let j = *lookup
                    .get(var)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown variable `{var}`")))?;
                m.0[j] += exp;
            }
            terms.push((c, m));
        }
        Ok(Self::from_terms(terms, 0.0))
    }
}

/// System of polynomial equations `p_k(x) = 0` in variables `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    pub variables: Vec<String>,
    pub equations: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(n: usize) -> Self {
        Self {
            variables: (1..=n).map(|i| format!("x{i}")).collect(),
            equations: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.equations.len(), self.equations.iter().map(|p| p.eval(x)))
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.equations.len(), self.n());
        for (r, p) in self.equations.iter().enumerate() {
            for (c, g) in p.gradient(x).into_iter().enumerate() {
                j[(r, c)] = g;
            }
        }
        j
    }

    /// One equation per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.equations {
            s.push_str(&p.to_text(&self.variables));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut sys = Self::new(n);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            sys.equations.push(Polynomial::parse(line, &sys.variables)?);
        }
        Ok(sys)
    }
}

/// Coefficients of homogeneous degree-`k` forms `p(x) ∈ ℝ^outputs` on `ℝⁿ`.
///
/// Uses `c_a = Δ^a p(0) / a!`, the mixed forward difference with unit steps,
/// which only needs `p` at non-negative integer points with `|m| ≤ k`.
pub fn homogeneous_coefficients<F>(n: usize, k: usize, outputs: usize, eval: F) -> Vec<Vec<(f64, MultiIndex)>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut cache: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    let mut point = |m: &[usize]| -> Vec<f64> {
        cache
            .entry(m.to_vec())
            .or_insert_with(|| eval(&m.iter().map(|&v| v as f64).collect::<Vec<_>>()))
            .clone()
    };
    let mut out = vec![Vec::new(); outputs];
    for a in MultiIndex::all_of_order(n, k) {
        let mut acc = vec![0.0; outputs];
        for m in dominated(&a.0) {
            let sign = if (k - m.iter().sum::<usize>()).is_multiple_of(2) { 1.0 } else { -1.0 };
            let w: f64 = a.0.iter().zip(&m).map(|(&aj, &mj)| binomial(aj, mj)).product();
            let p = point(&m);
            for (o, v) in acc.iter_mut().zip(&p) {
                *o += sign * w * v;
            }
        }
        let fact = a.factorial();
        for (o, v) in out.iter_mut().zip(acc) {
            o.push((v / fact, a.clone()));
        }
    }
    out
}

/// All `m` with `0 ≤ m_j ≤ a_j`.
fn dominated(a: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(a.len())];
    for &aj in a {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=aj).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}
