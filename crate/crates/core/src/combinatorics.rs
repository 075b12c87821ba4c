//! Index enumeration and partial-fraction coefficients.
//!
//! Every enumeration is lexicographic so that long signed sums are summed in
//! the same order on every run.

use crate::error::{Error, Result};

/// Largest number of series terms any closed form may enumerate.
pub const TERM_LIMIT: u128 = 10_000_000;

/// Two rates whose relative gap falls below this are treated as a double pole.
pub const SEPARATION_THRESHOLD: f64 = 1e-10;

/// Distinct 1-based path indices within one base station.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    members: Vec<usize>,
}

impl IndexSet {
    pub fn new(members: Vec<usize>, n_total: usize) -> Result<Self> {
        let mut seen = vec![false; n_total + 1];
        for &m in &members {
            if m == 0 || m > n_total {
                return Err(Error::Domain(format!("index {m} outside 1..={n_total}")));
            }
            if seen[m] {
                return Err(Error::Domain(format!("index {m} repeated")));
            }
            seen[m] = true;
        }
        Ok(IndexSet { members })
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        IndexSet { members: (1..=n).collect() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Ordered k-tuples without repetition, lexicographic in member order.
pub struct Permutations {
    items: Vec<usize>,
    k: usize,
    stack: Vec<usize>,
    used: Vec<bool>,
    started: bool,
    done: bool,
}

pub fn permutations_of(set: &IndexSet, k: usize) -> Result<Permutations> {
    if k > set.len() {
        return Err(Error::Domain(format!("k = {k} exceeds set size {}", set.len())));
    }
    let mut items = set.members.clone();
    items.sort_unstable();
    let n = items.len();
    Ok(Permutations { items, k, stack: Vec::with_capacity(k), used: vec![false; n], started: false, done: false })
}

impl Permutations {
    // Extend the current prefix to full length with the smallest free items,
    // starting the search at position `from` for the next slot.
    fn fill(&mut self, mut from: usize) -> bool {
        let n = self.items.len();
        while self.stack.len() < self.k {
            match (from..n).find(|&i| !self.used[i]) {
                Some(i) => {
                    self.used[i] = true;
                    self.stack.push(i);
                    from = 0;
                }
                None => {
                    // Backtrack one level and advance it.
                    match self.stack.pop() {
                        Some(last) => {
                            self.used[last] = false;
                            from = last + 1;
                        }
                        None => return false,
                    }
                }
            }
        }
        true
    }
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let ok = if !self.started {
            self.started = true;
            self.fill(0)
        } else if self.k == 0 {
            false
        } else {
            let last = self.stack.pop().unwrap();
            self.used[last] = false;
            self.fill(last + 1)
        };
        if !ok {
            self.done = true;
            return None;
        }
        Some(self.stack.iter().map(|&i| self.items[i]).collect())
    }
}

/// Strictly increasing `depth`-tuples drawn from `lo..=hi`.
pub struct Chains {
    lo: usize,
    n: usize,
    cur: Vec<usize>,
    started: bool,
    done: bool,
}

pub fn ordered_chains(lo: usize, hi: usize, depth: usize) -> Chains {
    let n = (hi + 1).saturating_sub(lo);
    Chains { lo, n, cur: (0..depth).collect(), started: false, done: depth > n }
}

impl Iterator for Chains {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !advance_combination(&mut self.cur, self.n) {
            self.done = true;
            return None;
        }
        Some(self.cur.iter().map(|&i| i + self.lo).collect())
    }
}

/// Step a sorted k-combination of `0..n` to its lexicographic successor.
pub fn advance_combination(cur: &mut [usize], n: usize) -> bool {
    let k = cur.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if cur[i] < n - k + i {
            cur[i] += 1;
            for j in i + 1..k {
                cur[j] = cur[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All k-subsets of `items`, lexicographic by position.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.iter().map(|&i| items[i]).collect());
        if !advance_combination(&mut cur, n) {
            break;
        }
    }
    out
}

/// One term of the expansion of `∏_j (1 - e^{-a_j t})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionTerm {
    pub sign: i8,
    /// 1-based positions into the rate list, strictly increasing.
    pub subset: Vec<usize>,
}

/// Expand the product into `2^n` signed exponentials, ordered by the bit
/// pattern of the subset (position 1 is the lowest bit).
pub fn product_to_sum(rates: &[f64]) -> Vec<ExpansionTerm> {
    let n = rates.len();
    (0u64..1 << n)
        .map(|mask| {
            let subset: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).map(|j| j + 1).collect();
            let sign = if subset.len().is_multiple_of(2) { 1 } else { -1 };
            ExpansionTerm { sign, subset }
        })
        .collect()
}

/// Evaluate an expansion produced by [`product_to_sum`] at `t`.
pub fn evaluate_expansion(terms: &[ExpansionTerm], rates: &[f64], t: f64) -> f64 {
    let parts: Vec<f64> = terms
        .iter()
        .map(|term| {
            let r: f64 = term.subset.iter().map(|&j| rates[j - 1]).sum();
            term.sign as f64 * (-r * t).exp()
        })
        .collect();
    crate::kernel::pairwise_sum(&parts)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub fn check_capacity(terms: u128) -> Result<()> {
    if terms > TERM_LIMIT {
        Err(Error::Capacity { terms, limit: TERM_LIMIT })
    } else {
        Ok(())
    }
}

/// The polynomial `F'(x)` for the chain `n1..=n2`: the derivative of
/// `∏_{j=n1}^{n2} (x - 1/γ̄_j)`, written through elementary symmetric sums
/// of the rates. At `x = 1/γ̄_l` it equals `∏_{j≠l} (1/γ̄_l - 1/γ̄_j)`.
///
/// `l` only selects the evaluation point in [`coefficient_c`]; the polynomial
/// itself depends on the chain alone.
pub fn f_prime(l: usize, n1: usize, n2: usize, x: f64, gammas: &[f64]) -> f64 {
    debug_assert!(n1 <= l && l <= n2);
    let rates: Vec<f64> = gammas[n1 - 1..n2].iter().map(|g| 1.0 / g).collect();
    let k = rates.len();
    // e[j] = elementary symmetric polynomial of degree j
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &r in &rates {
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * r;
        }
    }
    let mut acc = 0.0;
    for j in 0..k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += (k - j) as f64 * sign * e[j] * x.powi((k - 1 - j) as i32);
    }
    acc
}

/// Partial-fraction coefficient `C = 1 / (∏_{j=n1}^{n2} (-γ̄_j) · F'(1/γ̄_l))`.
///
/// Indices are 1-based into `gammas`. The density of a sum of independent
/// exponentials with means `γ̄_{n1..n2}` is `Σ_l -C_l e^{-x/γ̄_l}`.
pub fn coefficient_c(l: usize, n1: usize, n2: usize, gammas: &[f64]) -> Result<f64> {
    if !(n1 <= l && l <= n2 && n2 <= gammas.len() && n1 >= 1) {
        return Err(Error::Domain(format!("need 1 <= n1 <= l <= n2 <= {}", gammas.len())));
    }
    let ll = 1.0 / gammas[l - 1];
    let mut prod = -gammas[l - 1];
    for j in n1..=n2 {
        if j == l {
            continue;
        }
        let lj = 1.0 / gammas[j - 1];
        let gap = (ll - lj).abs() / ll.max(lj);
        if !(gap >= SEPARATION_THRESHOLD) {
            return Err(Error::Singularity { indices: vec![l.min(j), l.max(j)], gap });
        }
        // One (-γ̄_j) and one (λ_l - λ_j) factor per step keeps the running
        // product near unit scale.
        prod *= -gammas[j - 1] * (ll - lj);
    }
    Ok(1.0 / prod)
}

/// Hypoexponential density weights `w_q = λ_q ∏_{j≠q} λ_j / (λ_j - λ_q)`
/// for the given rates, so that the density is `Σ_q w_q e^{-λ_q t}`.
/// `ids` label the rates in singularity errors.
pub fn density_weights(rates: &[f64], ids: &[usize]) -> Result<Vec<f64>> {
    let gammas: Vec<f64> = rates.iter().map(|r| 1.0 / r).collect();
    (1..=rates.len())
        .map(|l| {
            coefficient_c(l, 1, rates.len(), &gammas).map(|c| -c).map_err(|e| match e {
                Error::Singularity { indices, gap } => {
                    Error::Singularity { indices: indices.iter().map(|&i| ids[i - 1]).collect(), gap }
                }
                other => other,
            })
        })
        .collect()
}
