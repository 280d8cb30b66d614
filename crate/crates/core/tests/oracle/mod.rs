//! Independent reference implementations used to check the library.
//! Nothing in here calls into the code under test.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Exact fraction over i128, always reduced with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0);
        let g = gcd(num, den);
        let s = if den < 0 { -1 } else { 1 };
        Frac {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn zero() -> Self {
        Frac { num: 0, den: 1 }
    }

    pub fn ratio_or_zero(num: i128, den: i128) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::new(num, den)
        }
    }

    pub fn add(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn div_int(self, n: i128) -> Frac {
        Frac::new(self.num, self.den * n)
    }

    pub fn mean(values: &[Frac]) -> Frac {
        values
            .iter()
            .fold(Frac::zero(), |acc, v| acc.add(*v))
            .div_int(values.len() as i128)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

const STOPWORDS: [&str; 15] = [
    "a", "an", "the", "of", "by", "with", "for", "to", "in", "on", "and", "or", "requiring", "related", "history",
];

const SUFFIXES: [&str; 5] = ["ical", "ic", "ia", "es", "s"];

pub fn tokens(text: &str) -> BTreeSet<String> {
    let lowered: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    lowered
        .split(' ')
        .filter(|w| !w.is_empty() && !STOPWORDS.contains(w))
        .map(|w| {
            for suf in SUFFIXES {
                if let Some(stem) = w.strip_suffix(suf) {
                    if stem.chars().count() >= 4 {
                        return stem.to_string();
                    }
                }
            }
            w.to_string()
        })
        .collect()
}

pub fn matches(a: &str, b: &str) -> bool {
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() || tb.is_empty() {
        return false;
    }
    if ta.is_subset(&tb) || tb.is_subset(&ta) {
        return true;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    2 * inter >= union
}

/// (text, major, minor) triples.
pub type Terms = Vec<(String, u32, Option<u32>)>;

pub fn keep_top(terms: &Terms, k: u32) -> Terms {
    terms.iter().filter(|t| t.1 <= k).cloned().collect()
}

/// Greedy one-to-one matching as documented: extracted terms in list order
/// each claim the unmatched gold term with the smallest (major, minor or 0,
/// index) that they match. Returns (extracted index, gold index) pairs.
pub fn greedy(extracted: &Terms, gold: &Terms) -> Vec<(usize, usize)> {
    let mut taken = vec![false; gold.len()];
    let mut pairs = Vec::new();
    for (i, e) in extracted.iter().enumerate() {
        let best = (0..gold.len())
            .filter(|&g| !taken[g] && matches(&e.0, &gold[g].0))
            .min_by_key(|&g| (gold[g].1, gold[g].2.unwrap_or(0), g));
        if let Some(g) = best {
            taken[g] = true;
            pairs.push((i, g));
        }
    }
    pairs
}

/// Size of a maximum one-to-one matching, by exhaustive search.
pub fn max_matching(extracted: &Terms, gold: &Terms) -> usize {
    fn go(i: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
        if i == adj.len() {
            return 0;
        }
        let mut best = go(i + 1, adj, used);
        for &g in &adj[i] {
            if !used[g] {
                used[g] = true;
                best = best.max(1 + go(i + 1, adj, used));
                used[g] = false;
            }
        }
        best
    }
    let adj: Vec<Vec<usize>> = extracted
        .iter()
        .map(|e| (0..gold.len()).filter(|&g| matches(&e.0, &gold[g].0)).collect())
        .collect();
    go(0, &adj, &mut vec![false; gold.len()])
}

/// Enumerates every one-to-one partial assignment of extracted terms to
/// matching gold terms and keeps the one whose vector of gold preference
/// ranks, read in extracted order with "unassigned" last, is
/// lexicographically smallest.
pub fn brute_force_assignment(extracted: &Terms, gold: &Terms) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..gold.len()).collect();
    order.sort_by_key(|&g| (gold[g].1, gold[g].2.unwrap_or(0), g));
    let mut pref = vec![0; gold.len()];
    for (r, &g) in order.iter().enumerate() {
        pref[g] = r;
    }
    let unassigned = gold.len();
    let m: Vec<Vec<bool>> = extracted
        .iter()
        .map(|e| gold.iter().map(|g| matches(&e.0, &g.0)).collect())
        .collect();

    type Slots = Vec<(usize, Option<usize>)>;

    fn go(
        i: usize,
        m: &[Vec<bool>],
        pref: &[usize],
        unassigned: usize,
        used: &mut Vec<bool>,
        current: &mut Slots,
        best: &mut Option<(Vec<usize>, Slots)>,
    ) {
        if i == m.len() {
            let key: Vec<usize> = current.iter().map(|c| c.0).collect();
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                *best = Some((key, current.clone()));
            }
            return;
        }
        current.push((unassigned, None));
        go(i + 1, m, pref, unassigned, used, current, best);
        current.pop();
        for g in 0..pref.len() {
            if m[i][g] && !used[g] {
                used[g] = true;
                current.push((pref[g], Some(g)));
                go(i + 1, m, pref, unassigned, used, current, best);
                current.pop();
                used[g] = false;
            }
        }
    }

    let mut best = None;
    go(0, &m, &pref, unassigned, &mut vec![false; gold.len()], &mut Vec::new(), &mut best);
    best.map(|(_, a)| a)
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .filter_map(|(i, (_, g))| g.map(|g| (i, g)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scores {
    pub tp: i128,
    pub fp: i128,
    pub fn_: i128,
    pub precision: Frac,
    pub recall: Frac,
    pub f1: Frac,
    pub rr: Frac,
}

/// Per-note scores at top-k, from first principles over the brute-force
/// assignment.
pub fn score(extracted: &Terms, gold: &Terms, k: u32) -> Scores {
    let e = keep_top(extracted, k);
    let g = keep_top(gold, k);
    let pairs = brute_force_assignment(&e, &g);
    let tp = pairs.len() as i128;
    let fp = e.len() as i128 - tp;
    let fn_ = g.len() as i128 - tp;
    let precision = Frac::ratio_or_zero(tp, tp + fp);
    let recall = Frac::ratio_or_zero(tp, tp + fn_);
    let f1 = if precision.num == 0 && recall.num == 0 {
        Frac::zero()
    } else {
        // 2PR / (P + R)
        let num = Frac::new(2 * precision.num * recall.num, precision.den * recall.den);
        let den = precision.add(recall);
        Frac::new(num.num * den.den, num.den * den.num)
    };
    let rr = pairs
        .iter()
        .map(|&(i, _)| i)
        .min()
        .map(|i| Frac::new(1, i as i128 + 1))
        .unwrap_or_else(Frac::zero);
    Scores {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        rr,
    }
}

fn gamma_half_integer(twice: u32) -> f64 {
    // Gamma(twice / 2) for positive integer `twice`.
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|i| i as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while (2.0 * x) as u32 != twice {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Two-sided p-value of Student's t by Simpson integration of the density.
pub fn t_two_sided_p(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let c = gamma_half_integer(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half_integer(df));
    let pdf = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let upper = t.abs();
    let n = 20_000;
    let h = upper / n as f64;
    let mut s = pdf(0.0) + pdf(upper);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(i as f64 * h);
    }
    let central = s * h / 3.0;
    (1.0 - 2.0 * central).max(0.0)
}

/// Sample mean, sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

pub const VOCAB: [&str; 32] = [
    "diabetes", "diabetic", "tinnitus", "gerd", "colon", "adenomas", "colonoscopy", "insulin", "pump",
    "heart", "failure", "of", "the", "history", "chronic", "renal", "cardiac", "cardiomyopathy", "anemia",
    "anemic", "blood", "test", "ct", "scan", "x-ray", "liver", "cirrhosis", "copd", "with", "pressure",
    "retinopathy", "Retinopathy.",
];

/// Random ranked list with 0..=max_len terms drawn from a small vocabulary so
/// that matches are common.
pub fn random_terms<R: rand::Rng>(rng: &mut R, max_len: usize) -> Terms {
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| {
            let words = rng.random_range(1..=4);
            let text = (0..words)
                .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
                .collect::<Vec<_>>()
                .join(" ");
            let major = rng.random_range(1..=12);
            let minor = if rng.random_bool(0.3) {
                Some(rng.random_range(1..=3))
            } else {
                None
            };
            (text, major, minor)
        })
        .collect()
}
