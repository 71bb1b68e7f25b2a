//! Multi-indices, compositions and binomial coefficients.

/// Largest derivative order the recursions accept by default.
pub const K_MAX: usize = 8;

/// `n!` as a float. Exact for `n ≤ 22`.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient `C(n, k)` as a float (zero when `k > n`).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Multinomial `ν! / (a₁!···a_m!)` for `ν = Σaⱼ`.
pub fn multinomial(a: &[usize]) -> f64 {
    let mut total = 0;
    let mut c = 1.0;
    for &ai in a {
        for j in 1..=ai {
            total += 1;
            c = c * total as f64 / j as f64;
        }
    }
    c.round()
}

/// Multi-index `a = (a₁, …, a_n)` of non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// Unit multi-index `e_j` (zero-based position `j`).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut a = vec![0; n];
        a[j] = 1;
        Self(a)
    }

    /// Multi-index counting the entries of a derivation sequence
    /// (one-based joint numbers).
    pub fn from_sequence(n: usize, seq: &[usize]) -> Self {
        let mut a = vec![0; n];
        for &j in seq {
            a[j - 1] += 1;
        }
        Self(a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Order `|a| = Σ aⱼ`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// `a! = Π aⱼ!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&v| factorial(v)).product()
    }

    /// `xᵃ = Π xⱼ^aⱼ`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &v)| v.powi(a as i32))
            .product()
    }

    /// Ascending derivation sequence `β` (one-based), each joint repeated
    /// `aⱼ` times.
    pub fn sequence(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &a)| std::iter::repeat_n(j + 1, a))
            .collect()
    }

    /// All multi-indices of length `n` with `|a| = k`, in lexicographically
    /// decreasing order.
    pub fn all_of_order(n: usize, k: usize) -> Vec<MultiIndex> {
        compositions(k, n).into_iter().map(MultiIndex).collect()
    }
}

/// All weak compositions of `total` into `parts` non-negative parts
/// (stars and bars). There are `C(total + parts − 1, parts − 1)` of them.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0; parts];
    fill(total, 0, &mut cur, &mut out);
    out
}

fn fill(rest: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(cur.clone());
        return;
    }
    for v in (0..=rest).rev() {
        cur[pos] = v;
        fill(rest - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Strictly increasing `k`-subsets of `1..=n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    subsets_rec(1, n, k, &mut cur, &mut out);
    out
}

fn subsets_rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for v in start..=n {
        if n - v + 1 < k - cur.len() {
            break;
        }
        cur.push(v);
        subsets_rec(v + 1, n, k, cur, out);
        cur.pop();
    }
}
