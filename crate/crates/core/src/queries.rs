//! Questions about `M_e` answered through echelonized presentations: the
//! annihilator of the bottom class, element orders, group orders and the
//! nonvanishing of `(x - y)^N` classes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::localhnf::{
    echelonize, lattices_equal, Echelon, EchelonBuilder, EchelonError, SparseRow,
};
use crate::presentation::{
    build_grading, expanded_diagonal, genthm_diagonal, table1_poly_matrix, top_grading,
    top_relations, GeneratorIndex, PresentationError,
};
use crate::twolocal::{alpha, binom_big, ArithError, Ring2k};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Echelon(#[from] EchelonError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("need 1 <= t < e and B >= 1 (got e={e}, t={t}, B={b})")]
    BadClassParameters { e: u32, t: u32, b: u64 },
    #[error("alpha(B) = {got}, but case {flavor} requires {want}")]
    Hypothesis { flavor: Flavor, want: u32, got: u32 },
    #[error("grading {d} lies past the last diagonal column {top} for e = {e}")]
    GradingOutOfRange { e: u32, d: usize, top: usize },
    #[error("internal consistency: class grading {got} differs from 3*2^t-2 = {want}")]
    Inconsistent { want: usize, got: usize },
    #[error("results at 2^{low} and 2^{high} disagree")]
    Unstable { low: u32, high: u32 },
}

/// Working precision for `M_e` when none is given. Elements of `G_d` reach
/// order `2^{2e-1}` near the top grading, so `e + 4` alone falls short from
/// `e = 6` on. Agreement of group orders at `K` and any larger precision
/// proves `K` exact, since `|G/2^K G| = |G/2^{K+1} G|` forces `2^K G = 0`.
pub fn default_precision(e: u32) -> u32 {
    (e + 4).max(2 * e - 1)
}

type Slot = Arc<OnceLock<Arc<Echelon>>>;

/// Echelons per `(e, d, K)`, built at most once each.
#[derive(Default)]
pub struct EchelonCache {
    slots: Mutex<HashMap<(u32, usize, u32), Slot>>,
}

impl EchelonCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds upward from the largest cached grading below `d`, caching
    /// every level on the way.
    pub fn get(&self, e: u32, d: usize, ring: Ring2k) -> Result<Arc<Echelon>, QueryError> {
        let (mut base, cells) = {
            let mut slots = self.slots.lock().unwrap();
            let mut cells = Vec::new();
            let mut below = None;
            for level in (0..=d).rev() {
                let cell = slots.entry((e, level, ring.bits())).or_default().clone();
                if let Some(ech) = cell.get() {
                    below = Some(ech.clone());
                    break;
                }
                cells.push(cell);
            }
            (below, cells)
        };
        if cells.is_empty() {
            return Ok(base.unwrap());
        }
        let first = d + 1 - cells.len();
        for (level, cell) in (first..=d).zip(cells.into_iter().rev()) {
            let next = match cell.get() {
                Some(ech) => ech.clone(),
                None => {
                    let ech = ladder_step(e, level, base.as_deref(), ring)?;
                    cell.get_or_init(|| Arc::new(ech)).clone()
                }
            };
            base = Some(next);
        }
        Ok(base.unwrap())
    }

    pub fn len(&self) -> usize {
        self.slots.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Echelon of `G_d` from the echelon of `G_{d-1}` (`None` when `d = 0`).
pub fn ladder_step(
    e: u32,
    d: usize,
    prev: Option<&Echelon>,
    ring: Ring2k,
) -> Result<Echelon, QueryError> {
    let ncols = GeneratorIndex::new(d).len();
    let mut builder = match prev {
        Some(p) => {
            assert_eq!(p.ncols() + d + 1, ncols, "ladder step needs G_(d-1)");
            EchelonBuilder::with_shifted(p, d + 1, ncols)
        }
        None => EchelonBuilder::new(ncols, ring),
    };
    for row in top_relations(e, d, ring)? {
        builder.insert(&row);
    }
    Ok(builder.finish())
}

/// Echelon of `G_d`, climbing the ladder from `G_0`.
pub fn grading_echelon(e: u32, d: usize, ring: Ring2k) -> Result<Echelon, QueryError> {
    let mut ech = ladder_step(e, 0, None, ring)?;
    for level in 1..=d {
        ech = ladder_step(e, level, Some(&ech), ring)?;
    }
    Ok(ech)
}

/// Echelon of `G_d` by sweeping the full relation matrix. Slower; kept as a
/// reference for the ladder.
pub fn grading_echelon_direct(e: u32, d: usize, ring: Ring2k) -> Result<Echelon, QueryError> {
    let p = build_grading(e, d, ring)?;
    Ok(echelonize(&p.rows, p.ncols(), ring))
}

/// The generator `u^k[i,j]` of `G_d` as a unit vector.
pub fn unit_vector(d: usize, k: usize, i: usize, j: usize) -> SparseRow {
    vec![(
        GeneratorIndex::new(d)
            .index(k, i, j)
            .expect("k + i + j must equal d"),
        1,
    )]
}

/// Order data for `G_d` that the profile and group-order checks need.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradingSummary {
    pub e: u32,
    pub d: usize,
    pub pivot_valuations: Vec<u32>,
    pub order_log2: u32,
    /// `log2` of the order of `u^d[0,0]`.
    pub bottom_order_log2: u32,
}

fn summarize(e: u32, d: usize, ech: &Echelon) -> Result<GradingSummary, QueryError> {
    Ok(GradingSummary {
        e,
        d,
        order_log2: ech.coker_order_log2()?,
        bottom_order_log2: ech.element_order_log2(&unit_vector(d, d, 0, 0))?,
        pivot_valuations: ech.pivot_valuations(),
    })
}

pub fn grading_summary(e: u32, d: usize, ring: Ring2k) -> Result<GradingSummary, QueryError> {
    summarize(e, d, &grading_echelon(e, d, ring)?)
}

/// Summaries for `d = 0..=top`, one ladder pass.
pub fn grading_summaries(
    e: u32,
    top: usize,
    ring: Ring2k,
) -> Result<Vec<GradingSummary>, QueryError> {
    let mut out = Vec::with_capacity(top + 1);
    let mut prev: Option<Echelon> = None;
    for d in 0..=top {
        let ech = ladder_step(e, d, prev.as_ref(), ring)?;
        out.push(summarize(e, d, &ech)?);
        prev = Some(ech);
    }
    Ok(out)
}

/// `a(b)`: least `a` with `2^a u^b[0,0] = 0`, for `b = 0..=3*2^{e-1}-2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnihilatorProfile {
    pub e: u32,
    pub profile: Vec<u32>,
}

impl AnnihilatorProfile {
    pub fn from_summaries(e: u32, summaries: &[GradingSummary]) -> Self {
        AnnihilatorProfile {
            e,
            profile: summaries.iter().map(|s| s.bottom_order_log2).collect(),
        }
    }

    /// Whether the profile is exactly the one cut out by `I_e`.
    pub fn matches_ie(&self) -> bool {
        self.profile == ie_profile(self.e)
    }
}

pub fn annihilator_profile(e: u32, ring: Ring2k) -> Result<AnnihilatorProfile, QueryError> {
    let summaries = grading_summaries(e, top_grading(e), ring)?;
    Ok(AnnihilatorProfile::from_summaries(e, &summaries))
}

/// Generators `2^{e-l} u^{b_l}` of the ideal `I_e`, as `(b_l, e - l)`:
/// `(0, e), (1, e-1), (4, e-2), (10, e-3), ..., (3*2^{e-1}-2, 0)`.
pub fn ie_generators(e: u32) -> Vec<(usize, u32)> {
    let mut gens = vec![(0, e)];
    for l in 1..=e {
        gens.push((3 * (1usize << (l - 1)) - 2, e - l));
    }
    gens
}

/// The profile of `u^b[0,0]` predicted by `I_e`: the least 2-power among
/// ideal generators whose `u`-exponent is at most `b`.
pub fn ie_profile(e: u32) -> Vec<u32> {
    let gens = ie_generators(e);
    (0..=top_grading(e))
        .map(|b| {
            gens.iter()
                .filter(|&&(ub, _)| ub <= b)
                .map(|&(_, a)| a)
                .min()
                .unwrap()
        })
        .collect()
}

pub fn check_ie(e: u32, ring: Ring2k) -> Result<bool, QueryError> {
    Ok(annihilator_profile(e, ring)?.matches_ie())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    C1,
    C2,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flavor::C1 => "c1",
            Flavor::C2 => "c2",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c1" => Ok(Flavor::C1),
            "c2" => Ok(Flavor::C2),
            other => Err(format!("unknown case {other:?}; expected c1 or c2")),
        }
    }
}

impl Flavor {
    /// Value of `alpha(B)` under which the nonvanishing is claimed.
    pub fn required_alpha(self, e: u32, t: u32) -> u32 {
        match self {
            Flavor::C1 => e + t - 1,
            Flavor::C2 => e + t,
        }
    }
}

/// The class `(x - y)^N` in `G_d`, `d = 2n - N`, under
/// `u^k[i,j] <-> u^k x^{n-i} y^{n-j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XYClass {
    pub e: u32,
    pub t: u32,
    pub b: u64,
    pub flavor: Flavor,
    pub n: u64,
    pub big_n: u64,
    pub d: usize,
    pub vector: SparseRow,
}

pub fn xy_class(
    e: u32,
    t: u32,
    b: u64,
    flavor: Flavor,
    ring: Ring2k,
) -> Result<XYClass, QueryError> {
    if t < 1 || t >= e || b < 1 {
        return Err(QueryError::BadClassParameters { e, t, b });
    }
    let p = 1u64 << t;
    let (n, big_n) = match flavor {
        Flavor::C1 => (3 * p / 2 - 1 + 2 * p * b, 4 * p * b),
        Flavor::C2 => (p - 1 + p * b, (2 * b - 1) * p),
    };
    let d = (2 * n - big_n) as usize;
    let want = 3 * p as usize - 2;
    if d != want {
        return Err(QueryError::Inconsistent { want, got: d });
    }
    let gens = GeneratorIndex::new(d);
    // x^j y^{N-j} <-> [n - j, n - N + j]; terms with exponent > n vanish
    let mut vector: SparseRow = (big_n.saturating_sub(n)..=n.min(big_n))
        .filter_map(|j| {
            let mut c = ring.from_biguint(&binom_big(big_n, j));
            if j % 2 == 1 {
                c = ring.neg(c);
            }
            let col = gens
                .index(0, (n - j) as usize, (n + j - big_n) as usize)
                .unwrap();
            (c != 0).then_some((col, c))
        })
        .collect();
    vector.sort_unstable();
    Ok(XYClass {
        e,
        t,
        b,
        flavor,
        n,
        big_n,
        d,
        vector,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XYReport {
    pub e: u32,
    pub t: u32,
    #[serde(rename = "B")]
    pub b: u64,
    pub flavor: Flavor,
    pub nonzero: bool,
    pub d: usize,
    pub n: u64,
    #[serde(rename = "N")]
    pub big_n: u64,
    /// `false` when run outside the `alpha(B)` hypothesis.
    #[serde(skip)]
    pub hypothesis_holds: bool,
}

/// Whether `(x - y)^N` is nonzero in `G_d`. Refuses parameters outside the
/// `alpha(B)` hypothesis unless `force` is set.
pub fn xy_nonzero(
    e: u32,
    t: u32,
    b: u64,
    flavor: Flavor,
    ring: Ring2k,
    force: bool,
    cache: &EchelonCache,
) -> Result<XYReport, QueryError> {
    let class = xy_class(e, t, b, flavor, ring)?;
    let want = flavor.required_alpha(e, t);
    let got = alpha(b);
    if got != want && !force {
        return Err(QueryError::Hypothesis { flavor, want, got });
    }
    let ech = cache.get(e, class.d, ring)?;
    Ok(XYReport {
        e,
        t,
        b,
        flavor,
        nonzero: !ech.is_zero_in_coker(&class.vector),
        d: class.d,
        n: class.n,
        big_n: class.big_n,
        hypothesis_holds: got == want,
    })
}

/// All `(t, B, flavor)` with `1 <= t < e`, `B <= b_max` satisfying the
/// `alpha(B)` hypothesis.
pub fn hypothesis_instances(e: u32, b_max: u64) -> Vec<(u32, u64, Flavor)> {
    let mut out = Vec::new();
    for t in 1..e {
        for b in 1..=b_max {
            for flavor in [Flavor::C1, Flavor::C2] {
                if alpha(b) == flavor.required_alpha(e, t) {
                    out.push((t, b, flavor));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupOrderReport {
    pub e: u32,
    pub d: usize,
    pub order_log2: u32,
    pub diagonal_log2: u32,
    pub pivots_match_diagonal: bool,
}

impl GroupOrderReport {
    pub fn holds(&self) -> bool {
        self.order_log2 == self.diagonal_log2 && self.pivots_match_diagonal
    }
}

/// Compares `|G_d|` with the reduced-matrix diagonal: each block `j` of the
/// numeric presentation contributes `(d + 1 - j) v(j)`.
pub fn group_order_from_summary(s: &GradingSummary) -> Result<GroupOrderReport, QueryError> {
    let top = top_grading(s.e);
    if s.d > top {
        return Err(QueryError::GradingOutOfRange {
            e: s.e,
            d: s.d,
            top,
        });
    }
    let diag = expanded_diagonal(&genthm_diagonal(s.e), s.d);
    Ok(GroupOrderReport {
        e: s.e,
        d: s.d,
        order_log2: s.order_log2,
        diagonal_log2: diag.iter().sum(),
        pivots_match_diagonal: s.pivot_valuations == diag,
    })
}

pub fn group_order_check(e: u32, d: usize, ring: Ring2k) -> Result<GroupOrderReport, QueryError> {
    let top = top_grading(e);
    if d > top {
        return Err(QueryError::GradingOutOfRange { e, d, top });
    }
    group_order_from_summary(&grading_summary(e, d, ring)?)
}

/// Whether the expanded reduced matrix of `M_4` and the raw relations of
/// `G_d` span the same lattice, for `d <= 22`.
pub fn table1_check(d: usize, ring: Ring2k) -> Result<bool, QueryError> {
    let top = top_grading(4);
    if d > top {
        return Err(QueryError::GradingOutOfRange { e: 4, d, top });
    }
    let raw = build_grading(4, d, ring)?;
    let claimed = table1_poly_matrix(ring).expand(d);
    Ok(lattices_equal(&claimed, &raw.rows, raw.ncols(), ring))
}
