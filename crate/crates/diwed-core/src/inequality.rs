//! Bell expressions from one- and two-body correlators: data types, built-in
//! inequalities, classical (local-deterministic) bounds, and worst-case
//! solution-count bounds for the associated stationarity systems.
//!
//! Conventions, fixed here and inherited by every other module:
//! - two-body correlators sum over *ordered* pairs `i ≠ j`, so `𝒮_kl` ranges
//!   in `[-n(n-1), n(n-1)]`;
//! - two-body coefficient keys are stored with `k ≤ l`.

use num_bigint::BigUint;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// The four deterministic single-party strategies `(s_0, s_1) ∈ {±1}²`.
pub const DETERMINISTIC_STRATEGIES: [(i32, i32); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// A permutationally invariant Bell expression
/// `I = Σ_k α_k 𝒮_k + Σ_{k≤l} α_kl 𝒮_kl` on `n` parties with two binary
/// settings per party.
#[derive(Debug, Clone, PartialEq)]
pub struct PIBellInequality {
    n: usize,
    /// `[α_0, α_1]`
    alpha_one: [f64; 2],
    /// `[α_00, α_01, α_11]`
    alpha_two: [f64; 3],
}

impl PIBellInequality {
    pub fn new(n: usize, alpha_one: [f64; 2], alpha_two: [f64; 3]) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidInequality("party count must be ≥ 1".into()));
        }
        for c in alpha_one.iter().chain(alpha_two.iter()) {
            if !c.is_finite() {
                return Err(Error::InvalidInequality("non-finite coefficient".into()));
            }
        }
        Ok(Self { n, alpha_one, alpha_two })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient `α_k` of the symmetric one-body correlator `𝒮_k`.
    pub fn alpha_one(&self, k: usize) -> f64 {
        self.alpha_one[k]
    }

    /// Coefficient `α_kl` of `𝒮_kl`; the pair is looked up unordered.
    pub fn alpha_two(&self, k: usize, l: usize) -> f64 {
        let (k, l) = if k <= l { (k, l) } else { (l, k) };
        self.alpha_two[k + l]
    }

    /// The three stored two-body coefficients in key order `00, 01, 11`.
    pub fn alpha_two_all(&self) -> [f64; 3] {
        self.alpha_two
    }

    pub fn alpha_one_all(&self) -> [f64; 2] {
        self.alpha_one
    }

    /// Same expression on a different party count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.alpha_one, self.alpha_two)
    }

    /// Embeds the expression into the site-resolved generic form.
    pub fn to_generic(&self) -> GenericTwoBodyInequality {
        let mut g = GenericTwoBodyInequality::zero(self.n);
        for i in 0..self.n {
            for k in 0..2 {
                g.set_one_body(i, k, self.alpha_one[k]);
            }
        }
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                for (k, l) in [(0, 0), (0, 1), (1, 1)] {
                    g.set_two_body(i, j, k, l, self.alpha_two[k + l]);
                }
            }
        }
        g
    }
}

/// Schema used on the wire: coefficients keyed by setting digits.
#[derive(Serialize, Deserialize)]
struct PISchema {
    n: usize,
    alpha_one: std::collections::BTreeMap<String, f64>,
    alpha_two: std::collections::BTreeMap<String, f64>,
}

impl Serialize for PIBellInequality {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut one = std::collections::BTreeMap::new();
        one.insert("0".to_string(), self.alpha_one[0]);
        one.insert("1".to_string(), self.alpha_one[1]);
        let mut two = std::collections::BTreeMap::new();
        two.insert("00".to_string(), self.alpha_two[0]);
        two.insert("01".to_string(), self.alpha_two[1]);
        two.insert("11".to_string(), self.alpha_two[2]);
        PISchema { n: self.n, alpha_one: one, alpha_two: two }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PIBellInequality {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = PISchema::deserialize(deserializer)?;
        let mut alpha_one = [0.0; 2];
        for (key, v) in &s.alpha_one {
            match key.as_str() {
                "0" => alpha_one[0] = *v,
                "1" => alpha_one[1] = *v,
                other => return Err(D::Error::custom(format!("bad one-body key {other:?}"))),
            }
        }
        let mut alpha_two = [0.0; 3];
        for (key, v) in &s.alpha_two {
            match key.as_str() {
                "00" => alpha_two[0] = *v,
                "01" => alpha_two[1] = *v,
                "11" => alpha_two[2] = *v,
                other => return Err(D::Error::custom(format!("bad two-body key {other:?}"))),
            }
        }
        PIBellInequality::new(s.n, alpha_one, alpha_two).map_err(D::Error::custom)
    }
}

/// Built-in inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    /// `-2 𝒮_0 + ½ 𝒮_00 - 𝒮_01 + ½ 𝒮_11`, the two-body witness used in
    /// atomic-ensemble Bell-correlation experiments. Coefficients do not
    /// depend on `n`.
    Ineq6,
    /// The inequality tailored to the half-filled Dicke state; reduces to
    /// twice the CHSH expression at `n = 2`.
    DickeIneq,
}

impl std::str::FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ineq6" => Ok(Builtin::Ineq6),
            "dicke" | "dickeineq" => Ok(Builtin::DickeIneq),
            other => Err(Error::InvalidInequality(format!("unknown built-in {other:?}"))),
        }
    }
}

/// Returns a built-in inequality instantiated at `n` parties.
pub fn builtin(name: Builtin, n: usize) -> Result<PIBellInequality> {
    if n < 2 {
        return Err(Error::InvalidInequality("built-ins need n ≥ 2".into()));
    }
    match name {
        Builtin::Ineq6 => PIBellInequality::new(n, [-2.0, 0.0], [0.5, -1.0, 0.5]),
        Builtin::DickeIneq => {
            let nf = n as f64;
            let odd = (n % 2) as f64;
            let alpha_one = [odd * (nf - 1.0) * nf, odd * (nf - 1.0)];
            let alpha_two = [nf * (nf - 1.0) / 2.0, nf, -1.0];
            PIBellInequality::new(n, alpha_one, alpha_two)
        }
    }
}

/// Observed values of the symmetric correlators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorStats {
    /// `[𝒮_0, 𝒮_1]`
    pub s_one: [f64; 2],
    /// `[𝒮_00, 𝒮_01, 𝒮_11]` (ordered-pair convention)
    pub s_two: [f64; 3],
}

impl CorrelatorStats {
    pub fn new(s_one: [f64; 2], s_two: [f64; 3]) -> Self {
        Self { s_one, s_two }
    }

    /// Checks `|𝒮_k| ≤ n` and `|𝒮_kl| ≤ n(n-1)`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let nf = n as f64;
        for s in self.s_one {
            if s.abs() > nf + 1e-9 {
                return Err(Error::InvalidParameter(format!("|one-body correlator| {s} > n")));
            }
        }
        for s in self.s_two {
            if s.abs() > nf * (nf - 1.0) + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "|two-body correlator| {s} > n(n-1)"
                )));
            }
        }
        Ok(())
    }

    /// Correlators produced when party `i` plays deterministic strategy
    /// `strategies[i]`.
    pub fn from_deterministic(strategies: &[(i32, i32)]) -> Self {
        let mut s = [0.0; 2];
        let mut same = [0.0; 3];
        for &(s0, s1) in strategies {
            s[0] += s0 as f64;
            s[1] += s1 as f64;
            same[0] += (s0 * s0) as f64;
            same[1] += (s0 * s1) as f64;
            same[2] += (s1 * s1) as f64;
        }
        let s_two = [s[0] * s[0] - same[0], s[0] * s[1] - same[1], s[1] * s[1] - same[2]];
        Self { s_one: s, s_two }
    }
}

/// Evaluates `I = Σ_k α_k 𝒮_k + Σ_{k≤l} α_kl 𝒮_kl`.
pub fn evaluate(ineq: &PIBellInequality, stats: &CorrelatorStats) -> f64 {
    ineq.alpha_one[0] * stats.s_one[0]
        + ineq.alpha_one[1] * stats.s_one[1]
        + ineq.alpha_two[0] * stats.s_two[0]
        + ineq.alpha_two[1] * stats.s_two[1]
        + ineq.alpha_two[2] * stats.s_two[2]
}

/// Classical bound together with an optimal assignment of parties to the four
/// deterministic strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub value: f64,
    /// How many parties play each strategy of [`DETERMINISTIC_STRATEGIES`]
    /// at the minimum.
    pub strategy_counts: [usize; 4],
}

/// Minimum of the expression over local deterministic strategies.
///
/// Permutation invariance reduces the `4^n` strategy assignments to the
/// O(n³) compositions `(n_1, n_2, n_3, n_4)` of `n` over the four
/// per-party strategies; correlators follow from the counts alone.
pub fn classical_bound_detailed(ineq: &PIBellInequality) -> ClassicalBound {
    let n = ineq.n();
    let mut best = ClassicalBound { value: f64::INFINITY, strategy_counts: [0; 4] };
    for n1 in 0..=n {
        for n2 in 0..=(n - n1) {
            for n3 in 0..=(n - n1 - n2) {
                let n4 = n - n1 - n2 - n3;
                let counts = [n1, n2, n3, n4];
                let mut s = [0.0; 2];
                let mut same = [0.0; 3];
                for (t, &(s0, s1)) in DETERMINISTIC_STRATEGIES.iter().enumerate() {
                    let c = counts[t] as f64;
                    s[0] += c * s0 as f64;
                    s[1] += c * s1 as f64;
                    same[0] += c * (s0 * s0) as f64;
                    same[1] += c * (s0 * s1) as f64;
                    same[2] += c * (s1 * s1) as f64;
                }
                let stats = CorrelatorStats {
                    s_one: s,
                    s_two: [
                        s[0] * s[0] - same[0],
                        s[0] * s[1] - same[1],
                        s[1] * s[1] - same[2],
                    ],
                };
                let v = evaluate(ineq, &stats);
                if v < best.value {
                    best = ClassicalBound { value: v, strategy_counts: counts };
                }
            }
        }
    }
    best
}

/// Classical bound `β_C` of a permutationally invariant expression.
pub fn classical_bound(ineq: &PIBellInequality) -> f64 {
    classical_bound_detailed(ineq).value
}

/// A two-body Bell expression with site-resolved coefficients
/// `Σ α_k^{(i)} M_k^{(i)} + Σ_{i≠j} α_kl^{(i,j)} M_kl^{(i,j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericTwoBodyInequality {
    n: usize,
    /// `one_body[2 i + k]`
    one_body: Vec<f64>,
    /// `two_body[((i n + j) 2 + k) 2 + l]`, zero on the diagonal `i = j`
    two_body: Vec<f64>,
}

impl GenericTwoBodyInequality {
    pub fn zero(n: usize) -> Self {
        Self { n, one_body: vec![0.0; 2 * n], two_body: vec![0.0; 4 * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn one_body(&self, i: usize, k: usize) -> f64 {
        self.one_body[2 * i + k]
    }

    pub fn set_one_body(&mut self, i: usize, k: usize, v: f64) {
        self.one_body[2 * i + k] = v;
    }

    pub fn two_body(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.two_body[((i * self.n + j) * 2 + k) * 2 + l]
    }

    /// Sets `α_kl^{(i,j)}`; entries with `i = j` are rejected.
    pub fn set_two_body(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        assert!(i != j, "two-body coefficient needs distinct sites");
        self.two_body[((i * self.n + j) * 2 + k) * 2 + l] = v;
    }

    /// Expression value for a full deterministic assignment `s[i] = (s_0, s_1)`.
    pub fn deterministic_value(&self, strategies: &[(i32, i32)]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let si = [strategies[i].0 as f64, strategies[i].1 as f64];
            for k in 0..2 {
                total += self.one_body(i, k) * si[k];
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let sj = [strategies[j].0 as f64, strategies[j].1 as f64];
                for k in 0..2 {
                    for l in 0..2 {
                        total += self.two_body(i, j, k, l) * si[k] * sj[l];
                    }
                }
            }
        }
        total
    }
}

/// Serialized form: `one_body` rows `[i, k, value]`, `two_body` rows
/// `[i, j, k, l, value]`.
#[derive(Serialize, Deserialize)]
struct GenericSchema {
    n: usize,
    one_body: Vec<(usize, usize, f64)>,
    two_body: Vec<(usize, usize, usize, usize, f64)>,
}

impl Serialize for GenericTwoBodyInequality {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut one = Vec::new();
        let mut two = Vec::new();
        for i in 0..self.n {
            for k in 0..2 {
                let v = self.one_body(i, k);
                if v != 0.0 {
                    one.push((i, k, v));
                }
            }
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                for k in 0..2 {
                    for l in 0..2 {
                        let v = self.two_body(i, j, k, l);
                        if v != 0.0 {
                            two.push((i, j, k, l, v));
                        }
                    }
                }
            }
        }
        GenericSchema { n: self.n, one_body: one, two_body: two }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GenericTwoBodyInequality {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = GenericSchema::deserialize(deserializer)?;
        let mut g = GenericTwoBodyInequality::zero(s.n);
        for (i, k, v) in s.one_body {
            if i >= s.n || k >= 2 {
                return Err(D::Error::custom("one-body index out of range"));
            }
            g.set_one_body(i, k, v);
        }
        for (i, j, k, l, v) in s.two_body {
            if i >= s.n || j >= s.n || i == j || k >= 2 || l >= 2 {
                return Err(D::Error::custom("two-body index out of range"));
            }
            g.set_two_body(i, j, k, l, v);
        }
        Ok(g)
    }
}

/// Exact minimum over all `4^n` deterministic assignments.
///
/// Exhaustive oracle for [`classical_bound`]; gated at `n ≤ 12`.
pub fn classical_bound_generic(ineq: &GenericTwoBodyInequality) -> Result<f64> {
    let n = ineq.n;
    if n > 12 {
        return Err(Error::DimensionBudget(format!(
            "exhaustive enumeration gated at n ≤ 12, got {n}"
        )));
    }
    let mut strategies = vec![(1, 1); n];
    let mut best = f64::INFINITY;
    // Odometer over strategy indices; incremental evaluation is not worth the
    // bookkeeping at these sizes.
    let mut digits = vec![0usize; n];
    loop {
        for (i, &d) in digits.iter().enumerate() {
            strategies[i] = DETERMINISTIC_STRATEGIES[d];
        }
        let v = ineq.deterministic_value(&strategies);
        if v < best {
            best = v;
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(best);
            }
            digits[pos] += 1;
            if digits[pos] < 4 {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Structural regime for the stationary-point count bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMode {
    /// Arbitrary correlator order: `(n+2)^{n(2^k/k+4)}`.
    Generic,
    /// Two-body expressions: `4^{n(2^k/k+4)}`.
    TwoBody,
    /// Equal-size symmetric groups sharing one state: `4^{4+k}`.
    SymmetricIdenticalBlocks,
}

/// An upper bound on the number of candidate solutions, reported in log10
/// alongside the exact value when the exponent is an integer of
/// representable size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountBound {
    pub log10: f64,
    pub exact: Option<BigUint>,
}

/// Worst-case bound on the number of stationary points of the constrained
/// optimization, per regime.
pub fn solution_count_bounds(n: usize, k: usize, mode: CountMode) -> Result<CountBound> {
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    let (base, exp_num, exp_den): (u64, f64, f64) = match mode {
        CountMode::SymmetricIdenticalBlocks => (4, (4 + k) as f64, 1.0),
        CountMode::Generic | CountMode::TwoBody => {
            let base = if mode == CountMode::TwoBody { 4 } else { (n + 2) as u64 };
            // exponent n(2^k/k + 4) = n(2^k + 4k)/k
            let pow2k = if k < 1024 { (k as f64).exp2() } else { f64::INFINITY };
            (base, (n as f64) * (pow2k + 4.0 * k as f64), k as f64)
        }
    };
    let exponent = exp_num / exp_den;
    let log10 = exponent * (base as f64).log10();
    // Exact value only when the exponent is integral and of sane size.
    let exact = if exponent.fract() == 0.0 && exponent.is_finite() && log10 < 100_000.0 {
        Some(BigUint::from(base).pow(exponent as u32))
    } else {
        None
    };
    Ok(CountBound { log10, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_coefficients() {
        let i6 = builtin(Builtin::Ineq6, 8).unwrap();
        assert_eq!(i6.alpha_one_all(), [-2.0, 0.0]);
        assert_eq!(i6.alpha_two_all(), [0.5, -1.0, 0.5]);

        let d2 = builtin(Builtin::DickeIneq, 2).unwrap();
        assert_eq!(d2.alpha_one_all(), [0.0, 0.0]);
        assert_eq!(d2.alpha_two_all(), [1.0, 2.0, -1.0]);

        // odd n: one-body terms (n-1)n and (n-1) switch on
        let d3 = builtin(Builtin::DickeIneq, 3).unwrap();
        assert_eq!(d3.alpha_one_all(), [6.0, 2.0]);
        assert_eq!(d3.alpha_two_all(), [3.0, 3.0, -1.0]);

        assert!(builtin(Builtin::Ineq6, 1).is_err());
    }

    #[test]
    fn evaluate_matches_hand_values() {
        let i6 = builtin(Builtin::Ineq6, 2).unwrap();
        let zero = CorrelatorStats::new([0.0; 2], [0.0; 3]);
        assert_eq!(evaluate(&i6, &zero), 0.0);

        let stats = CorrelatorStats::new([2.0, 0.0], [2.0, 0.0, 2.0]);
        assert_relative_eq!(evaluate(&i6, &stats), -2.0);

        // all-(+1,+1) deterministic strategy at n=2
        let det = CorrelatorStats::from_deterministic(&[(1, 1), (1, 1)]);
        assert_eq!(det.s_one, [2.0, 2.0]);
        assert_eq!(det.s_two, [2.0, 2.0, 2.0]);
        assert_relative_eq!(evaluate(&i6, &det), -4.0);
    }

    #[test]
    fn evaluate_is_linear_in_stats() {
        let ineq = builtin(Builtin::DickeIneq, 5).unwrap();
        let x = CorrelatorStats::new([1.0, -2.0], [3.0, 0.5, -1.5]);
        let y = CorrelatorStats::new([-0.5, 4.0], [-2.0, 1.0, 0.25]);
        let (a, b) = (0.7, -1.3);
        let combo = CorrelatorStats::new(
            [a * x.s_one[0] + b * y.s_one[0], a * x.s_one[1] + b * y.s_one[1]],
            [
                a * x.s_two[0] + b * y.s_two[0],
                a * x.s_two[1] + b * y.s_two[1],
                a * x.s_two[2] + b * y.s_two[2],
            ],
        );
        assert_relative_eq!(
            evaluate(&ineq, &combo),
            a * evaluate(&ineq, &x) + b * evaluate(&ineq, &y),
            epsilon = 1e-12
        );
    }

    #[test]
    fn classical_bounds_of_builtins() {
        let i6 = builtin(Builtin::Ineq6, 2).unwrap();
        assert_relative_eq!(classical_bound(&i6), -4.0);

        // twice the CHSH expression, classical minimum -4
        let d2 = builtin(Builtin::DickeIneq, 2).unwrap();
        assert_relative_eq!(classical_bound(&d2), -4.0);

        let i6_8 = builtin(Builtin::Ineq6, 8).unwrap();
        assert_relative_eq!(classical_bound(&i6_8), -16.0);
    }

    #[test]
    fn classical_bound_single_party() {
        let ineq = PIBellInequality::new(1, [1.5, -0.5], [9.0, 9.0, 9.0]).unwrap();
        // no two-body terms exist at n=1: min over 4 strategies of Σ α_k s_k
        let mut expect = f64::INFINITY;
        for (s0, s1) in DETERMINISTIC_STRATEGIES {
            expect = expect.min(1.5 * s0 as f64 - 0.5 * s1 as f64);
        }
        assert_relative_eq!(classical_bound(&ineq), expect);
    }

    #[test]
    fn classical_bound_agrees_with_generic_enumeration() {
        let mut rng = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        for n in 2..=6 {
            for _ in 0..4 {
                let ineq = PIBellInequality::new(
                    n,
                    [next(), next()],
                    [next(), next(), next()],
                )
                .unwrap();
                let fast = classical_bound(&ineq);
                let slow = classical_bound_generic(&ineq.to_generic()).unwrap();
                assert_relative_eq!(fast, slow, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn classical_bound_invariant_under_setting_relabeling() {
        // flipping s_0 ↦ -s_0 maps α_0 ↦ -α_0, α_01 ↦ -α_01, fixing α_00, α_11
        for n in [2, 4, 7] {
            let ineq = builtin(Builtin::DickeIneq, n).unwrap();
            let [a0, a1] = ineq.alpha_one_all();
            let [a00, a01, a11] = ineq.alpha_two_all();
            let flipped = PIBellInequality::new(n, [-a0, a1], [a00, -a01, a11]).unwrap();
            assert_relative_eq!(classical_bound(&ineq), classical_bound(&flipped));
        }
    }

    #[test]
    fn generic_enumeration_edge_cases() {
        let zero = GenericTwoBodyInequality::zero(3);
        assert_eq!(classical_bound_generic(&zero).unwrap(), 0.0);

        let mut single = GenericTwoBodyInequality::zero(3);
        single.set_one_body(0, 0, 1.0);
        assert_eq!(classical_bound_generic(&single).unwrap(), -1.0);

        let big = GenericTwoBodyInequality::zero(13);
        assert!(classical_bound_generic(&big).is_err());
    }

    #[test]
    fn count_bounds() {
        let symm = solution_count_bounds(4, 2, CountMode::SymmetricIdenticalBlocks).unwrap();
        assert_eq!(symm.exact, Some(BigUint::from(4096u32)));

        let two = solution_count_bounds(2, 1, CountMode::TwoBody).unwrap();
        assert_eq!(two.exact, Some(BigUint::from(4u32).pow(12)));

        let gen = solution_count_bounds(1, 1, CountMode::Generic).unwrap();
        assert_eq!(gen.exact, Some(BigUint::from(3u32).pow(6)));
        assert_relative_eq!(gen.log10, 6.0 * 3f64.log10());

        // two-body bound strictly below generic once n ≥ 3 (bases 4 < n+2)
        for n in 3..8 {
            for k in 1..=n {
                let g = solution_count_bounds(n, k, CountMode::Generic).unwrap();
                let t = solution_count_bounds(n, k, CountMode::TwoBody).unwrap();
                assert!(t.log10 < g.log10);
            }
        }
        // n = 2 is the degenerate boundary: bases coincide
        let g2 = solution_count_bounds(2, 2, CountMode::Generic).unwrap();
        let t2 = solution_count_bounds(2, 2, CountMode::TwoBody).unwrap();
        assert_eq!(g2.log10, t2.log10);

        assert!(solution_count_bounds(3, 4, CountMode::Generic).is_err());
    }

    #[test]
    fn pi_json_round_trip() {
        let ineq = builtin(Builtin::DickeIneq, 5).unwrap();
        let json = serde_json::to_string(&ineq).unwrap();
        assert!(json.contains("\"alpha_two\""));
        let back: PIBellInequality = serde_json::from_str(&json).unwrap();
        assert_eq!(ineq, back);

        let explicit = r#"{"n":3,"alpha_one":{"0":-2.0,"1":0.0},"alpha_two":{"00":0.5,"01":-1.0,"11":0.5}}"#;
        let parsed: PIBellInequality = serde_json::from_str(explicit).unwrap();
        assert_eq!(parsed, builtin(Builtin::Ineq6, 3).unwrap());
    }

    #[test]
    fn generic_json_round_trip() {
        let mut g = GenericTwoBodyInequality::zero(3);
        g.set_one_body(1, 0, 2.5);
        g.set_two_body(0, 2, 1, 0, -1.25);
        let json = serde_json::to_string(&g).unwrap();
        let back: GenericTwoBodyInequality = serde_json::from_str(&json).unwrap();
        assert_eq!(g, back);
    }
}
