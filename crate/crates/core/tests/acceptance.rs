//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! line fails. Runs without the libtest harness so the lines always print.

use std::time::Instant;

use kulens::localhnf::{echelonize, EchelonError, SparseRow};
use kulens::phicheck::{phi_report, verify_indn, worked_case};
use kulens::poly::{verify_peq, verify_pp};
use kulens::presentation::{expanded_diagonal, genthm_diagonal, top_grading};
use kulens::queries::{
    annihilator_profile, default_precision, grading_summaries, group_order_from_summary,
    hypothesis_instances, table1_check, unit_vector, xy_nonzero, EchelonCache, Flavor,
    GradingSummary,
};
use kulens::tcbound::{b_lower, bound_table, tc_lower};
use kulens::twolocal::{nu, Ring2k};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

// Pinned limits. Every numeric comparison below is exact.
const C1_SECS: f64 = 60.0;
const STRETCH_SECS: f64 = 900.0;
const C7_SECS: f64 = 60.0;
const C7_B_MAX: u64 = 32;
const C8_N_MAX: u64 = 200;
const C9_CASES: usize = 1000;
/// Ambient size cap `K * ncols` for the enumeration oracle.
const C9_ENUM_BITS: u32 = 20;
const C9_SEED: [u8; 32] = *b"kulens acceptance criterion 9 ..";

struct Suite {
    failed: usize,
}

impl Suite {
    fn line(&mut self, id: &str, pass: bool, what: &str) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {id:<4} {what}", if pass { "PASS" } else { "FAIL" });
    }
}

fn ring(k: u32) -> Ring2k {
    Ring2k::new(k).unwrap()
}

fn profiles(e_max: u32, extra: u32) -> Vec<(u32, Vec<u32>, bool)> {
    (1..=e_max)
        .map(|e| {
            let p = annihilator_profile(e, ring(e + extra)).unwrap();
            let m = p.matches_ie();
            (e, p.profile, m)
        })
        .collect()
}

const C2_POWERS: [usize; 7] = [0, 3, 4, 9, 10, 21, 22];

fn e4_orders(k: u32) -> Vec<u32> {
    let cache = EchelonCache::new();
    C2_POWERS
        .iter()
        .map(|&b| {
            let ech = cache.get(4, b, ring(k)).unwrap();
            ech.element_order_log2(&unit_vector(b, b, 0, 0)).unwrap()
        })
        .collect()
}

fn summaries(e: u32, extra: u32) -> Vec<GradingSummary> {
    grading_summaries(e, top_grading(e), ring(e + extra)).unwrap()
}

fn xy_results(extra: u32) -> Vec<bool> {
    let mut out = Vec::new();
    let cache = EchelonCache::new();
    for e in 2..=3 {
        for (t, b, flavor) in hypothesis_instances(e, C7_B_MAX) {
            out.push(
                xy_nonzero(e, t, b, flavor, ring(e + extra), false, &cache)
                    .unwrap()
                    .nonzero,
            );
        }
    }
    out
}

fn main() {
    let mut s = Suite { failed: 0 };

    // 1. annihilator ideal
    let clock = Instant::now();
    let low = profiles(5, 4);
    let secs = clock.elapsed().as_secs_f64();
    let all = low.iter().all(|p| p.2);
    s.line(
        "C1",
        all && secs < C1_SECS,
        &format!("annihilator profile equals I_e for e = 1..5 ({secs:.2}s, limit {C1_SECS}s)"),
    );
    let k6 = default_precision(6);
    let clock = Instant::now();
    let p6 = annihilator_profile(6, ring(k6)).unwrap();
    let secs6 = clock.elapsed().as_secs_f64();
    let p6_check = annihilator_profile(6, ring(k6 + 4)).unwrap();
    s.line(
        "C1s",
        p6.matches_ie() && p6 == p6_check && secs6 < STRETCH_SECS,
        &format!(
            "stretch: e = 6 profile over d = 0..{} equals I_6 at K = {k6}, same at K = {} ({secs6:.2}s, limit {STRETCH_SECS}s)",
            p6.profile.len() - 1,
            k6 + 4
        ),
    );

    // 2. element orders for e = 4
    let orders = e4_orders(8);
    let want = [4, 3, 2, 2, 1, 1, 0];
    s.line(
        "C2",
        orders == want,
        &format!(
            "e = 4 orders of u^b[0,0], b = {C2_POWERS:?}: {:?} (want 16, 8, 4, 4, 2, 2, 1)",
            orders.iter().map(|a| 1u32 << a).collect::<Vec<_>>()
        ),
    );

    // 3. reduced matrix of M_4
    let t1: Vec<bool> = (0..=22)
        .map(|d| table1_check(d, ring(8)).unwrap())
        .collect();
    let ok = t1.iter().filter(|&&b| b).count();
    s.line(
        "C3",
        ok == 23,
        &format!("reduced M_4 matrix lattice equality over Z/2^8: {ok}/23"),
    );

    // 4. group orders against the expanded diagonal
    let mut c4 = true;
    let mut detail = Vec::new();
    let mut low_summaries = Vec::new();
    for e in 1..=5 {
        let sums = summaries(e, 4);
        let holds = sums
            .iter()
            .all(|x| group_order_from_summary(x).unwrap().holds());
        c4 &= holds;
        detail.push(format!(
            "e={e}: log2|G_top|={}",
            sums.last().unwrap().order_log2
        ));
        low_summaries.push(sums);
    }
    s.line(
        "C4",
        c4,
        &format!(
            "log2|G_d| and pivot valuations equal the expanded diagonal for every d, e = 1..5 ({})",
            detail.join(", ")
        ),
    );
    let clock = Instant::now();
    let s6 = grading_summaries(6, 94, ring(k6)).unwrap();
    let s6_check = grading_summaries(6, 94, ring(k6 + 4)).unwrap();
    let r94 = group_order_from_summary(s6.last().unwrap()).unwrap();
    let all6 = s6
        .iter()
        .all(|x| group_order_from_summary(x).unwrap().holds());
    let secs = clock.elapsed().as_secs_f64();
    s.line(
        "C4s",
        all6 && s6 == s6_check && secs < STRETCH_SECS,
        &format!(
            "stretch: e = 6, all d <= 94 match the expanded diagonal at K = {k6} and {}; log2|G_94| = {} ({secs:.2}s)",
            k6 + 4,
            r94.order_log2
        ),
    );
    let unweighted4: u32 = genthm_diagonal(4).iter().sum();
    let unweighted6: u32 = genthm_diagonal(6).iter().sum();
    let g22 = low_summaries[3].last().unwrap().order_log2;
    s.line(
        "C4L",
        g22 == 37 && r94.order_log2 == 177,
        &format!(
            "literal values 37 (e=4,d=22) and 177 (e=6,d=94): computed {g22} and {}; \
             those literals are the unexpanded sums {unweighted4} and {unweighted6} of v(j), \
             while |G_d| has (d+1-j) generators per diagonal block j",
            r94.order_log2
        ),
    );
    let d1: Vec<u32> = low_summaries[3][1].pivot_valuations.clone();
    s.line(
        "C4x",
        d1 == expanded_diagonal(&genthm_diagonal(4), 1),
        &format!("e = 4, d = 1 pivot valuations {d1:?} (want [4, 4, 3])"),
    );

    // 5. phi congruences
    let mut c5 = true;
    let mut fails = Vec::new();
    for k in 2..=5 {
        for e in k..=k + 3 {
            let r = phi_report(k, e).unwrap();
            if !r.passes() {
                c5 = false;
                fails.push((k, e));
            }
        }
    }
    let r44 = phi_report(4, 4).unwrap();
    let r55 = phi_report(5, 5).unwrap();
    c5 &= r44.modulus_log2 == 7 && r55.modulus_log2 == 9;
    s.line(
        "C5",
        c5,
        &format!(
            "phi_k relations vanish for k = 2..5, e = k..k+3 (mod 128 at (4,4): {} relations; \
             mod 512 at (5,5): {} relations; failures {fails:?})",
            r44.relations_checked, r55.relations_checked
        ),
    );
    let w = worked_case();
    s.line(
        "C5w",
        w.vanishes,
        &format!(
            "worked case k = 3, e = 3, (i,j) = (5,4): value {} mod {}",
            w.value, w.modulus
        ),
    );

    // 6. identities
    let exact = ring(63);
    let pp = (1..=64).all(|t| verify_pp(exact, t));
    let peq = (1..=64).all(|k| verify_peq(exact, k));
    let indn = (2..=7).all(|e| verify_indn(e).unwrap());
    s.line(
        "C6",
        pp && peq && indn,
        &format!("p_2t identity t <= 64: {pp}; p_2k+1 identity k <= 64: {peq}; binomial identity e = 2..7: {indn}"),
    );

    // 7. nonvanishing
    let clock = Instant::now();
    let cache = EchelonCache::new();
    let c1 = xy_nonzero(2, 1, 3, Flavor::C1, ring(6), false, &cache)
        .unwrap()
        .nonzero;
    let c2 = xy_nonzero(2, 1, 7, Flavor::C2, ring(6), false, &cache)
        .unwrap()
        .nonzero;
    let sweep = xy_results(4);
    let secs = clock.elapsed().as_secs_f64();
    let ok = sweep.iter().filter(|&&b| b).count();
    s.line(
        "C7",
        c1 && c2 && ok == sweep.len() && secs < C7_SECS,
        &format!(
            "(2,1,3,c1): {c1}; (2,1,7,c2): {c2}; e <= 3, B <= {C7_B_MAX}: {ok}/{} nonzero ({secs:.2}s)",
            sweep.len()
        ),
    );

    // 8. TC bounds
    let tc37 = tc_lower(37, 2).unwrap();
    let report = b_lower(18, 2).unwrap();
    let mono = (1..=4).all(|e| {
        bound_table(e, C8_N_MAX)
            .unwrap()
            .windows(2)
            .all(|w| w[0].b_lower <= w[1].b_lower)
    });
    s.line(
        "C8",
        tc37 >= 52 && mono,
        &format!(
            "tc_lower(37, 2) = {tc37} >= 52 (witnesses {:?}); monotone for e <= 4, n <= {C8_N_MAX}: {mono}",
            report.witnesses
        ),
    );

    // 9. oracle equivalence
    let (enum_ok, enum_total) = oracle_enumeration();
    s.line(
        "C9",
        enum_ok == enum_total && enum_total >= C9_CASES,
        &format!(
            "quotient and element orders match subgroup enumeration: {enum_ok}/{enum_total} \
             (<= 5x5, K <= 8, K*ncols <= {C9_ENUM_BITS})"
        ),
    );
    let (minor_ok, minor_total) = oracle_minors();
    s.line(
        "C9m",
        minor_ok == minor_total && minor_total >= C9_CASES,
        &format!("quotient orders match the gcd of maximal minors: {minor_ok}/{minor_total} (<= 5x5, K <= 8)"),
    );

    // 10. precision stability
    let high = profiles(5, 8);
    let stab_ann = low.iter().zip(&high).all(|(a, b)| a.1 == b.1);
    let stab_orders = e4_orders(12) == orders;
    let stab_t1 = (0..=22).all(|d| table1_check(d, ring(12)).unwrap() == t1[d]);
    let stab_sums = (1..=5).all(|e| summaries(e, 8) == low_summaries[e as usize - 1]);
    let stab_xy = xy_results(8) == sweep;
    s.line(
        "C10",
        stab_ann && stab_orders && stab_t1 && stab_sums && stab_xy,
        &format!(
            "K = e+4 vs e+8, e <= 5: profiles {stab_ann}, orders {stab_orders}, M_4 lattices {stab_t1}, \
             group orders {stab_sums}, nonvanishing {stab_xy}; phi, identities and bounds use exact integers"
        ),
    );
    let at10 = grading_summaries(6, 94, ring(10)).unwrap();
    let at14 = grading_summaries(6, 94, ring(14)).unwrap();
    let differ: Vec<usize> = (0..=94).filter(|&d| at10[d] != at14[d]).collect();
    s.line(
        "C10s",
        differ.is_empty(),
        &format!(
            "stretch at K = e+4 = 10 vs e+8 = 14, e = 6: gradings that differ {differ:?}; \
             G_93 has elements of order 2^11, beyond 2^10 (certified runs above use K = {k6})"
        ),
    );

    cli_lines(&mut s);

    println!("{} criteria lines failed", s.failed);
    if s.failed > 0 {
        std::process::exit(1);
    }
}

const BIN: &str = env!("CARGO_BIN_EXE_kulens");

fn kulens(args: &[&str], env: Option<(&str, &str)>) -> (i32, String) {
    let mut cmd = std::process::Command::new(BIN);
    cmd.args(args).env_remove("KULENS_PRECISION");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
    )
}

/// Command-line examples, run against the built binary.
fn cli_lines(s: &mut Suite) {
    let cases: [(&[&str], i32); 9] = [
        (&["ann", "--e", "4"], 0),
        (&["ann", "--e", "1"], 0),
        (&["ann", "--e", "0"], 64),
        (&["verify", "table1"], 0),
        (&["verify", "phi", "--k", "4"], 0),
        (&["verify", "identities"], 0),
        (
            &[
                "nonzero", "--e", "2", "--t", "1", "--B", "3", "--case", "c1",
            ],
            0,
        ),
        (
            &[
                "nonzero", "--e", "3", "--t", "1", "--B", "3", "--case", "c1",
            ],
            65,
        ),
        (&["present", "--e", "4", "--d", "1"], 0),
    ];
    let mut bad = Vec::new();
    for (args, want) in cases {
        let (code, _) = kulens(args, None);
        if code != want {
            bad.push(format!("{} -> {code} (want {want})", args.join(" ")));
        }
    }
    s.line(
        "X1",
        bad.is_empty(),
        &format!("CLI exit codes for the documented examples; mismatches {bad:?}"),
    );

    let (_, a) = kulens(&["ann", "--e", "4", "--json"], None);
    let (_, b) = kulens(&["ann", "--e", "4", "--json"], None);
    s.line(
        "X2",
        a == b
            && a.starts_with("{\"e\":4,\"profile\":[4,3,3,3,2,")
            && a.trim_end().ends_with("\"matches_Ie\":true}"),
        "ann --json output is byte-identical across runs with keys e, profile, matches_Ie",
    );

    let (code, csv) = kulens(&["tc", "--e", "2", "--n-max", "20", "--csv"], None);
    let row8 = csv.lines().nth(9).unwrap_or("");
    s.line(
        "X3",
        code == 0
            && csv.starts_with("n,e,b_lower,tc_lower,witness_m,witness_t\n")
            && row8 == "8,2,12,24,7,1",
        &format!("tc --csv header and n = 8 row {row8:?}"),
    );

    let (code, dump) = kulens(&["present", "--e", "4", "--d", "1"], None);
    s.line(
        "X4",
        code == 0 && dump.lines().next() == Some("4 1 8 6 3"),
        &format!(
            "present --e 4 --d 1 header {:?} (3 columns)",
            dump.lines().next().unwrap_or("")
        ),
    );

    let (low_code, _) = kulens(&["ann", "--e", "6"], Some(("KULENS_PRECISION", "10")));
    let (flag_code, _) = kulens(
        &["ann", "--e", "6", "--precision", "11"],
        Some(("KULENS_PRECISION", "10")),
    );
    s.line(
        "X5",
        low_code == 2 && flag_code == 0,
        &format!("KULENS_PRECISION=10 makes ann --e 6 exit {low_code} (want 2); --precision 11 overrides it, exit {flag_code}"),
    );
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config::default(),
        TestRng::from_seed(RngAlgorithm::ChaCha, &C9_SEED),
    )
}

/// `(K, ncols, rows)` with entries mod `2^K`.
fn matrix_strategy(cap_bits: u32) -> impl Strategy<Value = (u32, usize, Vec<Vec<u64>>)> {
    (1u32..=8, 1usize..=5, 0usize..=5)
        .prop_filter("ambient too large", move |&(k, n, _)| {
            k * n as u32 <= cap_bits
        })
        .prop_flat_map(|(k, n, m)| {
            let entry = (0u64..(1 << k)).boxed();
            let sparse = proptest::prop_oneof![1 => proptest::strategy::Just(0u64), 2 => entry];
            let row = proptest::collection::vec(sparse, n);
            (
                proptest::strategy::Just(k),
                proptest::strategy::Just(n),
                proptest::collection::vec(row, m),
            )
        })
}

fn sparse(m: &[Vec<u64>]) -> Vec<SparseRow> {
    m.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(c, &v)| (c, v))
                .collect()
        })
        .collect()
}

/// Subgroup of `(Z/2^K)^n` spanned by `rows`, as a membership table over
/// base-`2^K` codes.
fn span(k: u32, n: usize, rows: &[Vec<u64>]) -> Vec<bool> {
    let mask = (1u64 << k) - 1;
    let encode = |v: &[u64]| v.iter().rev().fold(0u64, |acc, &x| (acc << k) | (x & mask));
    let decode = |mut c: u64| {
        (0..n)
            .map(|_| {
                let x = c & mask;
                c >>= k;
                x
            })
            .collect::<Vec<u64>>()
    };
    let mut member = vec![false; 1 << (k as usize * n)];
    member[0] = true;
    let mut elems = vec![0u64];
    for r in rows {
        let mut fresh = Vec::new();
        for &g in &elems {
            let mut cur = decode(g);
            loop {
                for (x, y) in cur.iter_mut().zip(r) {
                    *x = (*x + y) & mask;
                }
                let code = encode(&cur);
                if member[code as usize] {
                    break;
                }
                member[code as usize] = true;
                fresh.push(code);
            }
        }
        elems.extend(fresh);
    }
    member
}

fn brute_order_log2(k: u32, v: &[u64], member: &[bool]) -> u32 {
    let mask = (1u64 << k) - 1;
    let mut cur: Vec<u64> = v.to_vec();
    for a in 0..=k {
        let code = cur.iter().rev().fold(0u64, |acc, &x| (acc << k) | x);
        if member[code as usize] {
            return a;
        }
        cur.iter_mut().for_each(|x| *x = (*x << 1) & mask);
    }
    unreachable!("2^K kills everything")
}

fn oracle_enumeration() -> (usize, usize) {
    let mut r = runner();
    let strat = matrix_strategy(C9_ENUM_BITS);
    let mut ok = 0;
    for case in 0..C9_CASES {
        let (k, n, m) = strat.new_tree(&mut r).unwrap().current();
        let ring = ring(k);
        let ech = echelonize(&sparse(&m), n, ring);
        let member = span(k, n, &m);
        let size = member.iter().filter(|&&b| b).count();
        let mut good = (k * n as u32) - size.trailing_zeros() == ech.quotient_order_log2();
        let probe: Vec<u64> = (0..n as u64)
            .map(|c| (case as u64 * 37 + c * 11) & (ring.modulus() - 1))
            .collect();
        let mut vectors: Vec<Vec<u64>> = (0..n)
            .map(|c| (0..n).map(|i| u64::from(i == c)).collect())
            .collect();
        vectors.push(probe);
        for v in &vectors {
            let want = brute_order_log2(k, v, &member);
            let sv: SparseRow = v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(c, &x)| (c, x))
                .collect();
            let got = ech.element_order_log2(&sv);
            good &= match got {
                Ok(a) => a == want && a < k,
                Err(EchelonError::PrecisionExhausted(_)) => want == k,
                Err(_) => false,
            };
        }
        ok += usize::from(good);
    }
    (ok, C9_CASES)
}

fn det(mut a: Vec<Vec<i128>>) -> i128 {
    // fraction-free Bareiss elimination
    let n = a.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for i in 0..n {
        if a[i][i] == 0 {
            match (i + 1..n).find(|&r| a[r][i] != 0) {
                Some(r) => {
                    a.swap(i, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for r in i + 1..n {
            for c in i + 1..n {
                a[r][c] = (a[r][c] * a[i][i] - a[r][i] * a[i][c]) / prev;
            }
        }
        prev = a[i][i];
    }
    sign * a[n - 1][n - 1]
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// log2 of `|Z^n / (rows + 2^K Z^n)|` via the gcd of maximal minors.
fn minors_order_log2(k: u32, n: usize, m: &[Vec<u64>]) -> u32 {
    let mut all: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    for c in 0..n {
        all.push(
            (0..n)
                .map(|i| if i == c { 1i128 << k } else { 0 })
                .collect(),
        );
    }
    let mut g = 0i128;
    let total = all.len();
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let sub: Vec<Vec<i128>> = pick.iter().map(|&i| all[i].clone()).collect();
        g = gcd(g, det(sub));
        // next combination
        let mut i = n;
        while i > 0 && pick[i - 1] == total - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for j in i..n {
            pick[j] = pick[j - 1] + 1;
        }
    }
    nu(g as i64).unwrap()
}

fn oracle_minors() -> (usize, usize) {
    let mut r = runner();
    let strat = matrix_strategy(u32::MAX);
    let mut ok = 0;
    for _ in 0..C9_CASES {
        let (k, n, m) = strat.new_tree(&mut r).unwrap().current();
        let ech = echelonize(&sparse(&m), n, ring(k));
        ok += usize::from(ech.quotient_order_log2() == minors_order_log2(k, n, &m));
    }
    (ok, C9_CASES)
}
